#include "aspectrl/rejection.hpp"

#include <cmath>
#include <stdexcept>

namespace aspectrl {

FilteredGroup filter_group(const GenerationGroup& group, const RewardConfig& cfg) {
    if (group.generations.empty()) {
        throw std::invalid_argument("filter_group: group must contain at least one generation");
    }

    FilteredGroup filtered;
    filtered.correctness_flags.reserve(group.generations.size());
    for (std::size_t i = 0; i < group.generations.size(); ++i) {
        bool correct = is_correct(group.generations[i], group.gold, cfg);
        filtered.correctness_flags.push_back(correct ? 1 : 0);
        if (!correct) filtered.retained_indices.push_back(static_cast<int>(i));
    }
    filtered.all_correct = filtered.retained_indices.empty();
    filtered.all_incorrect =
        filtered.retained_indices.size() == group.generations.size();
    return filtered;
}

BuildResult build_training_batch(std::span<const TrainingGroup> groups,
                                 const RewardConfig& reward_cfg, const FormatConfig& format_cfg,
                                 const grpo::AdvantageConfig& adv_cfg, AdvantageMode mode,
                                 RetentionPolicy retention) {
    if (groups.empty()) {
        throw std::invalid_argument("build_training_batch: no groups");
    }
    reward_cfg.validate();
    format_cfg.validate();
    adv_cfg.validate();

    BuildResult result;
    BatchStats& stats = result.stats;
    stats.group_count = static_cast<int>(groups.size());

    double format_sum = 0.0, answer_sum = 0.0;
    std::vector<double> all_rewards;

    for (const TrainingGroup& group : groups) {
        if (group.generations.empty()) {
            throw std::invalid_argument("build_training_batch: empty group");
        }
        const int g = static_cast<int>(group.generations.size());

        std::vector<double> rewards(g);
        std::vector<char> correct(g);
        int correct_count = 0;
        for (int i = 0; i < g; ++i) {
            const RawGeneration& raw = group.generations[i].raw;
            RewardBreakdown b = score_generation(raw, group.gold, reward_cfg, format_cfg);
            rewards[i] = b.r_total;
            correct[i] = is_correct(raw, group.gold, reward_cfg) ? 1 : 0;
            correct_count += correct[i];
            format_sum += b.r_format;
            answer_sum += b.r_answer;
            all_rewards.push_back(b.r_total);
        }
        stats.total_generations += g;
        stats.correct_generations += correct_count;
        result.batch.rewards.insert(result.batch.rewards.end(), rewards.begin(), rewards.end());

        std::vector<int> keep;
        for (int i = 0; i < g; ++i) {
            if (retention == RetentionPolicy::keep_all || !correct[i]) keep.push_back(i);
        }
        stats.per_group_retained.push_back(static_cast<int>(keep.size()));
        if (keep.empty()) {
            ++stats.skipped_groups;
            continue;
        }

        std::vector<double> advantages;
        if (mode == AdvantageMode::full_group) {
            advantages = grpo::group_advantages(rewards, adv_cfg);
        } else {
            std::vector<double> retained_rewards;
            retained_rewards.reserve(keep.size());
            for (int i : keep) retained_rewards.push_back(rewards[i]);
            std::vector<double> sub = grpo::group_advantages(retained_rewards, adv_cfg);
            advantages.assign(g, 0.0);
            for (std::size_t k = 0; k < keep.size(); ++k) advantages[keep[k]] = sub[k];
        }

        for (int i : keep) {
            const AnnotatedGeneration& gen = group.generations[i];
            std::vector<grpo::TokenRecord> seq;
            seq.reserve(gen.steps.size());
            for (const TokenStep& step : gen.steps) {
                grpo::TokenRecord tok;
                tok.logp_new = step.logp;
                tok.logp_old = step.logp;
                tok.advantage = advantages[i];
                tok.state = step.state;
                tok.action = step.action;
                seq.push_back(tok);
            }
            if (seq.empty()) {
                throw std::invalid_argument("build_training_batch: generation without steps");
            }
            result.batch.sequences.push_back(std::move(seq));
            ++stats.retained_sequences;
        }
    }

    const double n = static_cast<double>(stats.total_generations);
    double reward_sum = 0.0;
    for (double r : all_rewards) reward_sum += r;
    stats.reward_mean = reward_sum / n;
    double var = 0.0;
    for (double r : all_rewards) var += (r - stats.reward_mean) * (r - stats.reward_mean);
    stats.reward_std = std::sqrt(var / n);
    stats.mean_format_reward = format_sum / n;
    stats.mean_answer_reward = answer_sum / n;
    stats.correct_fraction = stats.correct_generations / n;
    stats.retention_fraction = stats.retained_sequences / n;
    return result;
}

}  // namespace aspectrl
