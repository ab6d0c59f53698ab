#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aspectrl/grpo.hpp"
#include "aspectrl/reward.hpp"
#include "aspectrl/types.hpp"

namespace aspectrl {

/// The G candidate generations sampled for one input.
struct GenerationGroup {
    std::string input_id;
    std::vector<RawGeneration> generations;
    GoldRecord gold;
};

/// Correctness verdicts for a group. Retained indices are exactly the
/// incorrect generations, in original order.
struct FilteredGroup {
    std::vector<int> retained_indices;
    std::vector<char> correctness_flags;  // one per generation
    bool all_correct = false;
    bool all_incorrect = false;
};

/// Evaluates the binary correctness test on every generation and retains
/// the incorrect ones. Pure; does not resample.
FilteredGroup filter_group(const GenerationGroup& group, const RewardConfig& cfg);

/// One sampled decision of a tabular policy.
struct TokenStep {
    std::int32_t state = -1;
    std::int32_t action = -1;
    double logp = 0.0;  // log-probability at sampling time
};

/// A generation together with the per-token trajectory that produced it.
struct AnnotatedGeneration {
    RawGeneration raw;
    std::vector<TokenStep> steps;
};

/// Group of annotated generations for one input, ready for batch building.
struct TrainingGroup {
    std::string input_id;
    GoldRecord gold;
    std::vector<AnnotatedGeneration> generations;
};

/// Whether advantages are normalized over the full group of G rewards or
/// only over the retained (incorrect) subset.
enum class AdvantageMode { full_group, retained_only };

/// drop_correct is the production rule; keep_all disables rejection
/// sampling for ablation runs.
enum class RetentionPolicy { drop_correct, keep_all };

struct BatchStats {
    int group_count = 0;
    int skipped_groups = 0;
    int total_generations = 0;
    int correct_generations = 0;
    int retained_sequences = 0;
    std::vector<int> per_group_retained;
    double reward_mean = 0.0;
    double reward_std = 0.0;  // population std over all G * group_count rewards
    double mean_format_reward = 0.0;
    double mean_answer_reward = 0.0;
    double correct_fraction = 0.0;
    double retention_fraction = 0.0;
};

struct BuildResult {
    grpo::GroupBatch batch;
    BatchStats stats;
};

/// Scores every generation of every group, computes group-relative
/// advantages per `mode`, drops correct generations (unless keep_all), and
/// flattens the survivors into a GroupBatch. Groups whose every generation
/// is correct are skipped and counted. An entirely-skipped input yields an
/// empty batch with stats; resampling is the caller's decision.
BuildResult build_training_batch(std::span<const TrainingGroup> groups,
                                 const RewardConfig& reward_cfg, const FormatConfig& format_cfg,
                                 const grpo::AdvantageConfig& adv_cfg, AdvantageMode mode,
                                 RetentionPolicy retention = RetentionPolicy::drop_correct);

}  // namespace aspectrl
