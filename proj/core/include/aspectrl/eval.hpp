#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aspectrl/types.hpp"

namespace aspectrl::eval {

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int support = 0;  // gold occurrences
};

/// Corpus-level classification metrics. Macro-F1 averages per-class F1 over
/// the classes that occur in the gold labels.
struct AbscMetrics {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::map<SentimentLabel, ClassScores> per_class;
    int total = 0;
};

/// An unparseable prediction counts as wrong and as a miss for its gold
/// class. Throws std::invalid_argument on empty input.
AbscMetrics evaluate_absc(
    std::span<const std::pair<std::optional<SentimentLabel>, SentimentLabel>> pairs);

/// Micro-averaged extraction metrics over corpus-summed TP/FP/FN.
struct AosteMetrics {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int sentences = 0;
};

/// Per-sentence triplet matching, counts summed across the corpus.
/// Throws std::invalid_argument on empty input.
AosteMetrics evaluate_aoste(std::span<const std::pair<TripletSet, TripletSet>> pairs);

/// One named run's headline metric per dataset.
struct MetricRun {
    std::string name;
    std::map<std::string, double> per_dataset;
};

/// Rows = runs, columns = datasets (sorted) plus an unweighted Avg column.
struct AblationTable {
    std::vector<std::string> columns;
    std::vector<std::pair<std::string, std::vector<double>>> rows;
};

/// Throws std::invalid_argument when runs are empty or dataset sets differ.
AblationTable ablation_report(std::span<const MetricRun> runs);

std::string to_text(const AblationTable& table);
std::string to_csv(const AblationTable& table);

std::string to_text(const AbscMetrics& metrics);
std::string to_csv(const AbscMetrics& metrics);
std::string to_text(const AosteMetrics& metrics);
std::string to_csv(const AosteMetrics& metrics);

}  // namespace aspectrl::eval
