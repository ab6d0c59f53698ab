#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aspectrl/grpo.hpp"
#include "aspectrl/rejection.hpp"
#include "aspectrl/reward.hpp"
#include "aspectrl/toy_lab.hpp"
#include "aspectrl/types.hpp"

namespace aspectrl::io {

/// All canonical files are UTF-8 line-delimited JSON: one header object
/// carrying {"format_version": 1, "kind": ...} followed by one record
/// object per line. Loaders reject malformed input with the offending
/// path and line number; they never repair.

inline constexpr int kFormatVersion = 1;

/// Parses and validates a gold dataset for the given task. Ordering is
/// preserved. Throws std::runtime_error ("path:line: reason") on malformed
/// lines, unknown labels, or duplicate ids.
std::vector<GoldRecord> load_gold(const std::filesystem::path& path, Task task);

void write_gold(const std::vector<GoldRecord>& records, Task task,
                const std::filesystem::path& path);

/// The G sampled output strings for one input id.
struct GenerationFileRecord {
    std::string id;
    std::vector<std::string> samples;
};

std::vector<GenerationFileRecord> load_generations(const std::filesystem::path& path);
void write_generations(const std::vector<GenerationFileRecord>& records,
                       const std::filesystem::path& path);

/// One final answer string per input id, for evaluation runs.
struct PredictionRecord {
    std::string id;
    std::string prediction;
};

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);
void write_predictions(const std::vector<PredictionRecord>& records,
                       const std::filesystem::path& path);

/// Per-(input, sample) reward scores, the `score` verb's output.
struct RewardFileRecord {
    std::string id;
    int sample_index = 0;
    RewardBreakdown breakdown;
    bool correct = false;
};

void write_rewards(const std::vector<RewardFileRecord>& records, Task task,
                   const RewardConfig& cfg, const std::filesystem::path& path);
std::vector<RewardFileRecord> load_rewards(const std::filesystem::path& path);

/// Training report serialization; numbers round-trip exactly.
void write_training_report(const toy::TrainingReport& report,
                           const std::filesystem::path& path);
toy::TrainingReport load_training_report(const std::filesystem::path& path);

/// Filter statistics as a single JSON document (not line-delimited).
std::string batch_stats_to_json(const BatchStats& stats);

/// Optional overrides loaded from a single-document JSON config file;
/// command-line flags take precedence over these.
struct ConfigOverrides {
    std::optional<double> lambda;
    std::optional<double> gamma;
    std::optional<double> tau;
    std::optional<double> epsilon_low;
    std::optional<double> epsilon_high;
    std::optional<double> epsilon_std;
    std::optional<std::string> advantage_mode;  // "full-group" | "retained-only"
    std::optional<std::uint64_t> seed;
    std::optional<double> learning_rate;
    std::optional<int> iterations;
    std::optional<int> group_size;
    std::optional<int> task_count;
    std::optional<std::vector<double>> format_weights;  // [w_tag, w_flow, w_struct]
    std::optional<int> flow_saturation;
};

ConfigOverrides load_config(const std::filesystem::path& path);

}  // namespace aspectrl::io
