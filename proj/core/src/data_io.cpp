#include "aspectrl/data_io.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace aspectrl::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, int line, const std::string& reason) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + reason);
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open for reading");
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    return out;
}

json parse_line(const std::filesystem::path& path, int line_no, const std::string& line) {
    json parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
        fail(path, line_no, "not a JSON object");
    }
    return parsed;
}

// Reads the header line and every record line of a canonical file.
std::vector<json> read_records(const std::filesystem::path& path, const std::string& kind) {
    std::ifstream in = open_input(path);
    std::string line;
    int line_no = 0;
    std::vector<json> records;
    bool header_seen = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json parsed = parse_line(path, line_no, line);
        if (!header_seen) {
            if (parsed.value("format_version", -1) != kFormatVersion) {
                fail(path, line_no, "missing or unsupported format_version");
            }
            if (parsed.value("kind", "") != kind) {
                fail(path, line_no, "expected kind '" + kind + "'");
            }
            header_seen = true;
            continue;
        }
        parsed["__line"] = line_no;
        records.push_back(std::move(parsed));
    }
    if (!header_seen && line_no > 0) fail(path, 1, "missing header record");
    if (line_no == 0) return {};  // empty file -> empty list
    return records;
}

int record_line(const json& record) { return record.value("__line", 0); }

std::string require_string(const std::filesystem::path& path, const json& record,
                           const char* field) {
    if (!record.contains(field) || !record[field].is_string()) {
        fail(path, record_line(record), std::string("missing string field '") + field + "'");
    }
    return record[field].get<std::string>();
}

json header(const std::string& kind) {
    json h;
    h["format_version"] = kFormatVersion;
    h["kind"] = kind;
    return h;
}

}  // namespace

std::vector<GoldRecord> load_gold(const std::filesystem::path& path, Task task) {
    std::vector<GoldRecord> out;
    std::set<std::string> seen_ids;

    for (const json& record : read_records(path, "gold")) {
        GoldRecord gold;
        gold.id = require_string(path, record, "id");
        if (!seen_ids.insert(gold.id).second) {
            fail(path, record_line(record), "duplicate id '" + gold.id + "'");
        }
        gold.text = require_string(path, record, "text");
        gold.reasoning = record.value("reasoning", "");

        if (task == Task::absc) {
            std::string label_text = require_string(path, record, "label");
            auto label = label_from_string(label_text);
            if (!label) {
                fail(path, record_line(record), "unknown label '" + label_text + "'");
            }
            gold.payload = AbscGold{require_string(path, record, "aspect"), *label};
        } else {
            if (!record.contains("triplets") || !record["triplets"].is_array()) {
                fail(path, record_line(record), "missing array field 'triplets'");
            }
            AosteGold aoste;
            for (const json& tuple : record["triplets"]) {
                if (!tuple.is_array() || tuple.size() != 3 || !tuple[0].is_string() ||
                    !tuple[1].is_string() || !tuple[2].is_string()) {
                    fail(path, record_line(record), "triplet must be [aspect, opinion, polarity]");
                }
                auto polarity = label_from_string(tuple[2].get<std::string>());
                if (!polarity) {
                    fail(path, record_line(record),
                         "unknown polarity '" + tuple[2].get<std::string>() + "'");
                }
                Triplet triplet{tuple[0].get<std::string>(), tuple[1].get<std::string>(),
                                *polarity};
                if (normalize_term(triplet.aspect).empty() ||
                    normalize_term(triplet.opinion).empty()) {
                    fail(path, record_line(record), "triplet terms must be non-empty");
                }
                aoste.triplets.push_back(std::move(triplet));
            }
            gold.payload = std::move(aoste);
        }
        out.push_back(std::move(gold));
    }
    return out;
}

void write_gold(const std::vector<GoldRecord>& records, Task task,
                const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    json h = header("gold");
    h["task"] = to_string(task);
    out << h.dump() << '\n';
    for (const GoldRecord& gold : records) {
        json record;
        record["id"] = gold.id;
        record["text"] = gold.text;
        if (!gold.reasoning.empty()) record["reasoning"] = gold.reasoning;
        if (gold.task() == Task::absc) {
            record["aspect"] = gold.absc().aspect;
            record["label"] = to_string(gold.absc().label);
        } else {
            json triplets = json::array();
            for (const Triplet& t : gold.aoste().triplets) {
                triplets.push_back({t.aspect, t.opinion, to_string(t.polarity)});
            }
            record["triplets"] = std::move(triplets);
        }
        out << record.dump() << '\n';
    }
}

std::vector<GenerationFileRecord> load_generations(const std::filesystem::path& path) {
    std::vector<GenerationFileRecord> out;
    std::set<std::string> seen_ids;

    for (const json& record : read_records(path, "generations")) {
        GenerationFileRecord gen;
        gen.id = require_string(path, record, "id");
        if (!seen_ids.insert(gen.id).second) {
            fail(path, record_line(record), "duplicate id '" + gen.id + "'");
        }
        if (!record.contains("samples") || !record["samples"].is_array() ||
            record["samples"].empty()) {
            fail(path, record_line(record), "missing non-empty array field 'samples'");
        }
        for (const json& sample : record["samples"]) {
            if (!sample.is_string()) {
                fail(path, record_line(record), "samples must be strings");
            }
            gen.samples.push_back(sample.get<std::string>());
        }
        out.push_back(std::move(gen));
    }
    return out;
}

void write_generations(const std::vector<GenerationFileRecord>& records,
                       const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out << header("generations").dump() << '\n';
    for (const GenerationFileRecord& gen : records) {
        json record;
        record["id"] = gen.id;
        record["samples"] = gen.samples;
        out << record.dump() << '\n';
    }
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
    std::vector<PredictionRecord> out;
    std::set<std::string> seen_ids;
    for (const json& record : read_records(path, "predictions")) {
        PredictionRecord pred;
        pred.id = require_string(path, record, "id");
        if (!seen_ids.insert(pred.id).second) {
            fail(path, record_line(record), "duplicate id '" + pred.id + "'");
        }
        pred.prediction = require_string(path, record, "prediction");
        out.push_back(std::move(pred));
    }
    return out;
}

void write_predictions(const std::vector<PredictionRecord>& records,
                       const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out << header("predictions").dump() << '\n';
    for (const PredictionRecord& pred : records) {
        json record;
        record["id"] = pred.id;
        record["prediction"] = pred.prediction;
        out << record.dump() << '\n';
    }
}

void write_rewards(const std::vector<RewardFileRecord>& records, Task task,
                   const RewardConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    json h = header("rewards");
    h["task"] = to_string(task);
    h["lambda"] = cfg.lambda;
    h["gamma"] = cfg.gamma;
    h["tau"] = cfg.tau;
    out << h.dump() << '\n';
    for (const RewardFileRecord& r : records) {
        json record;
        record["id"] = r.id;
        record["sample_index"] = r.sample_index;
        record["r_tag"] = r.breakdown.r_tag;
        record["r_flow"] = r.breakdown.r_flow;
        record["r_struct"] = r.breakdown.r_struct;
        record["r_format"] = r.breakdown.r_format;
        record["r_answer"] = r.breakdown.r_answer;
        record["r_total"] = r.breakdown.r_total;
        record["correct"] = r.correct;
        out << record.dump() << '\n';
    }
}

std::vector<RewardFileRecord> load_rewards(const std::filesystem::path& path) {
    std::vector<RewardFileRecord> out;
    for (const json& record : read_records(path, "rewards")) {
        RewardFileRecord r;
        r.id = require_string(path, record, "id");
        r.sample_index = record.value("sample_index", 0);
        r.breakdown.r_tag = record.value("r_tag", 0.0);
        r.breakdown.r_flow = record.value("r_flow", 0.0);
        r.breakdown.r_struct = record.value("r_struct", 0.0);
        r.breakdown.r_format = record.value("r_format", 0.0);
        r.breakdown.r_answer = record.value("r_answer", 0.0);
        r.breakdown.r_total = record.value("r_total", 0.0);
        r.correct = record.value("correct", false);
        out.push_back(std::move(r));
    }
    return out;
}

void write_training_report(const toy::TrainingReport& report,
                           const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    json h = header("training_report");
    std::ostringstream fingerprint;
    fingerprint << "0x" << std::hex << report.final_policy_fingerprint;
    h["final_policy_fingerprint"] = fingerprint.str();
    h["iterations"] = report.iterations.size();
    out << h.dump() << '\n';
    for (const toy::IterationStats& s : report.iterations) {
        json record;
        record["iteration"] = s.iteration;
        record["mean_reward"] = s.mean_reward;
        record["mean_format_reward"] = s.mean_format_reward;
        record["mean_answer_reward"] = s.mean_answer_reward;
        record["retention_fraction"] = s.retention_fraction;
        record["objective"] = s.objective;
        record["gradient_norm"] = s.gradient_norm;
        record["correct_fraction"] = s.correct_fraction;
        record["batch_skipped"] = s.batch_skipped;
        out << record.dump() << '\n';
    }
}

toy::TrainingReport load_training_report(const std::filesystem::path& path) {
    toy::TrainingReport report;

    std::ifstream in = open_input(path);
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json record = parse_line(path, line_no, line);
        if (!header_seen) {
            if (record.value("format_version", -1) != kFormatVersion ||
                record.value("kind", "") != "training_report") {
                fail(path, line_no, "bad training_report header");
            }
            std::string fp = record.value("final_policy_fingerprint", "0x0");
            report.final_policy_fingerprint = std::stoull(fp, nullptr, 16);
            header_seen = true;
            continue;
        }
        toy::IterationStats s;
        s.iteration = record.value("iteration", 0);
        s.mean_reward = record.value("mean_reward", 0.0);
        s.mean_format_reward = record.value("mean_format_reward", 0.0);
        s.mean_answer_reward = record.value("mean_answer_reward", 0.0);
        s.retention_fraction = record.value("retention_fraction", 0.0);
        s.objective = record.value("objective", 0.0);
        s.gradient_norm = record.value("gradient_norm", 0.0);
        s.correct_fraction = record.value("correct_fraction", 0.0);
        s.batch_skipped = record.value("batch_skipped", false);
        report.iterations.push_back(s);
    }
    if (!header_seen) fail(path, 1, "missing header record");
    return report;
}

std::string batch_stats_to_json(const BatchStats& stats) {
    json doc;
    doc["groups"] = stats.group_count;
    doc["skipped_groups"] = stats.skipped_groups;
    doc["total_generations"] = stats.total_generations;
    doc["correct_generations"] = stats.correct_generations;
    doc["retained_sequences"] = stats.retained_sequences;
    doc["per_group_retained"] = stats.per_group_retained;
    doc["reward_mean"] = stats.reward_mean;
    doc["reward_std"] = stats.reward_std;
    doc["correct_fraction"] = stats.correct_fraction;
    doc["retention_fraction"] = stats.retention_fraction;
    return doc.dump();
}

ConfigOverrides load_config(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw std::runtime_error(path.string() + ": config must be a single JSON object");
    }

    ConfigOverrides cfg;
    auto get_double = [&](const char* key, std::optional<double>& slot) {
        if (doc.contains(key)) slot = doc[key].get<double>();
    };
    auto get_int = [&](const char* key, std::optional<int>& slot) {
        if (doc.contains(key)) slot = doc[key].get<int>();
    };
    get_double("lambda", cfg.lambda);
    get_double("gamma", cfg.gamma);
    get_double("tau", cfg.tau);
    get_double("eps_low", cfg.epsilon_low);
    get_double("eps_high", cfg.epsilon_high);
    get_double("eps_std", cfg.epsilon_std);
    get_double("learning_rate", cfg.learning_rate);
    get_int("iterations", cfg.iterations);
    get_int("group_size", cfg.group_size);
    get_int("task_count", cfg.task_count);
    get_int("flow_saturation", cfg.flow_saturation);
    if (doc.contains("advantage_mode")) {
        cfg.advantage_mode = doc["advantage_mode"].get<std::string>();
    }
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("format_weights")) {
        cfg.format_weights = doc["format_weights"].get<std::vector<double>>();
    }
    return cfg;
}

}  // namespace aspectrl::io
