#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "aspectrl/rejection.hpp"
#include "aspectrl/tabular_policy.hpp"

namespace aspectrl::toy {

/// Closed emission vocabulary of the toy lab. Tag tokens are atomic so the
/// format reward is learnable; EOS renders as the empty string. Extraction
/// answers are single compound tokens carrying the canonical
/// "(aspect, opinion, polarity)" serialization.
class Vocab {
  public:
    static const Vocab& instance();

    int size() const { return static_cast<int>(tokens_.size()); }
    const std::string& token(int id) const { return tokens_[id]; }
    int id(const std::string& token) const;  // throws on unknown token

    int think_open() const { return 0; }
    int think_close() const { return 1; }
    int answer_open() const { return 2; }
    int answer_close() const { return 3; }
    int eos() const;
    int label_token(SentimentLabel label) const;

    int pair_count() const;
    std::string pair_aspect(int pair_index) const;
    std::string pair_opinion(int pair_index) const;
    SentimentLabel pair_polarity(int pair_index) const;
    int triplet_token(int pair_index) const;

    /// Joins non-EOS tokens with single spaces.
    std::string render(std::span<const int> token_ids) const;

  private:
    Vocab();
    std::vector<std::string> tokens_;
};

/// One synthetic input: a template sentence pairing an aspect word with an
/// opinion word of known polarity, posed either as classification or as
/// single-triplet extraction.
struct MicroTask {
    std::string input_id;
    std::vector<int> prompt_tokens;  // aspect token, opinion token
    GoldRecord gold;
};

/// Deterministic task set: polarities cycle with period 3, task kinds
/// alternate, aspect/opinion words drawn from the seeded generator.
std::vector<MicroTask> make_tasks(std::uint64_t seed, int count);

/// Emission slots per task; the ideal trace fills 8 of them for either
/// task kind: tags, two cues, one answer token, end-of-sequence.
inline constexpr int kMaxLength = 8;

/// States are (task index, emission position) flattened.
inline int state_index(int task_index, int position) {
    return task_index * kMaxLength + position;
}

/// Fresh uniform policy covering `task_count` tasks.
TabularPolicy make_policy(int task_count);

/// Policy with a soft prior on the trace scaffold: structural slots (tags,
/// cue positions, end-of-sequence) get +kScaffoldBias logits per task's
/// template while every answer-content slot stays uniform, so the reward
/// pipeline still has to teach the actual task mapping. Plays the role an
/// instruction-following base model plays for full-scale training: without
/// it, random emission never finds a parseable answer span to reinforce.
TabularPolicy make_policy(std::span<const MicroTask> tasks);

inline constexpr double kScaffoldBias = 8.0;
inline constexpr double kAnswerClassBias = 1.0;

struct SampleResult {
    RawGeneration raw;
    std::vector<TokenStep> steps;
};

/// Autoregressive sampling up to kMaxLength or EOS. The recorded logp of
/// every step equals the log-softmax of the stored logits at that state.
SampleResult sample_generation(const TabularPolicy& policy, int task_index,
                               std::mt19937_64& rng);

struct TrainConfig {
    int group_size = 8;
    double learning_rate = 60.0;
    int iterations = 500;
    std::uint64_t seed = 42;
    int task_count = 24;
    int inner_updates = 1;  // >1 replays the batch, exercising off-policy ratios
    RewardConfig reward;
    FormatConfig format;
    grpo::ClipConfig clip;
    grpo::AdvantageConfig advantage;
    AdvantageMode advantage_mode = AdvantageMode::full_group;
    RetentionPolicy retention = RetentionPolicy::drop_correct;

    void validate() const;
};

struct IterationStats {
    int iteration = 0;
    double mean_reward = 0.0;
    double mean_format_reward = 0.0;
    double mean_answer_reward = 0.0;
    double retention_fraction = 0.0;
    double objective = 0.0;
    double gradient_norm = 0.0;
    double correct_fraction = 0.0;
    bool batch_skipped = false;
};

struct TrainingReport {
    std::vector<IterationStats> iterations;
    std::uint64_t final_policy_fingerprint = 0;
};

/// One full iteration: sample G generations per task, score, filter, build
/// the batch, take an ascent step. An empty batch leaves the policy
/// untouched and flags the skip.
IterationStats train_step(TabularPolicy& policy, std::span<const MicroTask> tasks,
                          const TrainConfig& cfg, std::mt19937_64& rng);

struct TrainingRun {
    TrainingReport report;
    TabularPolicy policy;
    std::vector<MicroTask> tasks;
};

/// Deterministic end-to-end training given (seed, config).
TrainingRun run_training(const TrainConfig& cfg);

}  // namespace aspectrl::toy
