#include "aspectrl/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "aspectrl/reward.hpp"

namespace aspectrl::eval {

namespace {

double f1_of(double precision, double recall) {
    double pr = precision + recall;
    return pr > 0.0 ? 2.0 * precision * recall / pr : 0.0;
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

AbscMetrics evaluate_absc(
    std::span<const std::pair<std::optional<SentimentLabel>, SentimentLabel>> pairs) {
    if (pairs.empty()) throw std::invalid_argument("evaluate_absc: empty input");

    static constexpr SentimentLabel kClasses[] = {
        SentimentLabel::positive, SentimentLabel::negative, SentimentLabel::neutral};

    AbscMetrics metrics;
    metrics.total = static_cast<int>(pairs.size());

    int correct = 0;
    std::map<SentimentLabel, int> tp, fp, fn, support;
    for (SentimentLabel c : kClasses) tp[c] = fp[c] = fn[c] = support[c] = 0;

    for (const auto& [pred, gold] : pairs) {
        ++support[gold];
        if (pred && *pred == gold) {
            ++correct;
            ++tp[gold];
        } else {
            ++fn[gold];
            if (pred) ++fp[*pred];
        }
    }
    metrics.accuracy = static_cast<double>(correct) / metrics.total;

    double macro_sum = 0.0;
    int macro_classes = 0;
    for (SentimentLabel c : kClasses) {
        ClassScores scores;
        scores.support = support[c];
        int pred_count = tp[c] + fp[c];
        int gold_count = tp[c] + fn[c];
        scores.precision = pred_count > 0 ? static_cast<double>(tp[c]) / pred_count : 0.0;
        scores.recall = gold_count > 0 ? static_cast<double>(tp[c]) / gold_count : 0.0;
        scores.f1 = f1_of(scores.precision, scores.recall);
        metrics.per_class[c] = scores;
        if (support[c] > 0) {
            macro_sum += scores.f1;
            ++macro_classes;
        }
    }
    metrics.macro_f1 = macro_classes > 0 ? macro_sum / macro_classes : 0.0;
    return metrics;
}

AosteMetrics evaluate_aoste(std::span<const std::pair<TripletSet, TripletSet>> pairs) {
    if (pairs.empty()) throw std::invalid_argument("evaluate_aoste: empty input");

    AosteMetrics metrics;
    metrics.sentences = static_cast<int>(pairs.size());
    for (const auto& [pred, gold] : pairs) {
        MatchResult match = match_triplets(pred, gold);
        metrics.tp += match.tp;
        metrics.fp += match.fp;
        metrics.fn += match.fn;
    }
    int pred_total = metrics.tp + metrics.fp;
    int gold_total = metrics.tp + metrics.fn;
    metrics.precision = pred_total > 0 ? static_cast<double>(metrics.tp) / pred_total : 0.0;
    metrics.recall = gold_total > 0 ? static_cast<double>(metrics.tp) / gold_total : 0.0;
    metrics.f1 = f1_of(metrics.precision, metrics.recall);
    return metrics;
}

AblationTable ablation_report(std::span<const MetricRun> runs) {
    if (runs.empty()) throw std::invalid_argument("ablation_report: no runs");

    std::set<std::string> datasets;
    for (const auto& [name, _] : runs[0].per_dataset) datasets.insert(name);
    if (datasets.empty()) throw std::invalid_argument("ablation_report: run without datasets");
    for (const MetricRun& run : runs) {
        std::set<std::string> theirs;
        for (const auto& [name, _] : run.per_dataset) theirs.insert(name);
        if (theirs != datasets) {
            throw std::invalid_argument("ablation_report: mismatched dataset sets across runs");
        }
    }

    AblationTable table;
    table.columns.assign(datasets.begin(), datasets.end());
    table.columns.push_back("Avg");
    for (const MetricRun& run : runs) {
        std::vector<double> values;
        double sum = 0.0;
        for (const std::string& dataset : datasets) {
            double v = run.per_dataset.at(dataset);
            values.push_back(v);
            sum += v;
        }
        values.push_back(sum / static_cast<double>(datasets.size()));
        table.rows.emplace_back(run.name, std::move(values));
    }
    return table;
}

std::string to_text(const AblationTable& table) {
    std::size_t name_width = 4;
    for (const auto& [name, _] : table.rows) name_width = std::max(name_width, name.size());

    std::ostringstream out;
    out << std::string(name_width, ' ');
    for (const std::string& column : table.columns) {
        out << "  " << column;
        if (column.size() < 10) out << std::string(10 - column.size(), ' ');
    }
    out << '\n';
    for (const auto& [name, values] : table.rows) {
        out << name << std::string(name_width - name.size(), ' ');
        for (double v : values) {
            std::string num = format_number(v);
            out << "  " << num;
            if (num.size() < 10) out << std::string(10 - num.size(), ' ');
        }
        out << '\n';
    }
    return out.str();
}

std::string to_csv(const AblationTable& table) {
    std::ostringstream out;
    out << "run";
    for (const std::string& column : table.columns) out << ',' << column;
    out << '\n';
    for (const auto& [name, values] : table.rows) {
        out << name;
        for (double v : values) out << ',' << format_number(v);
        out << '\n';
    }
    return out.str();
}

std::string to_text(const AbscMetrics& metrics) {
    std::ostringstream out;
    out << "accuracy  " << format_number(metrics.accuracy) << '\n';
    out << "macro_f1  " << format_number(metrics.macro_f1) << '\n';
    for (const auto& [label, scores] : metrics.per_class) {
        out << to_string(label) << "  P=" << format_number(scores.precision)
            << "  R=" << format_number(scores.recall) << "  F1=" << format_number(scores.f1)
            << "  support=" << scores.support << '\n';
    }
    return out.str();
}

std::string to_csv(const AbscMetrics& metrics) {
    std::ostringstream out;
    out << "metric,value\n";
    out << "accuracy," << format_number(metrics.accuracy) << '\n';
    out << "macro_f1," << format_number(metrics.macro_f1) << '\n';
    for (const auto& [label, scores] : metrics.per_class) {
        out << to_string(label) << "_precision," << format_number(scores.precision) << '\n';
        out << to_string(label) << "_recall," << format_number(scores.recall) << '\n';
        out << to_string(label) << "_f1," << format_number(scores.f1) << '\n';
    }
    return out.str();
}

std::string to_text(const AosteMetrics& metrics) {
    std::ostringstream out;
    out << "precision  " << format_number(metrics.precision) << '\n';
    out << "recall     " << format_number(metrics.recall) << '\n';
    out << "f1         " << format_number(metrics.f1) << '\n';
    out << "tp=" << metrics.tp << " fp=" << metrics.fp << " fn=" << metrics.fn << '\n';
    return out.str();
}

std::string to_csv(const AosteMetrics& metrics) {
    std::ostringstream out;
    out << "metric,value\n";
    out << "precision," << format_number(metrics.precision) << '\n';
    out << "recall," << format_number(metrics.recall) << '\n';
    out << "f1," << format_number(metrics.f1) << '\n';
    out << "tp," << metrics.tp << '\n';
    out << "fp," << metrics.fp << '\n';
    out << "fn," << metrics.fn << '\n';
    return out.str();
}

}  // namespace aspectrl::eval
