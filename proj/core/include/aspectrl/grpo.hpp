#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aspectrl/tabular_policy.hpp"

namespace aspectrl::grpo {

struct AdvantageConfig {
    double epsilon_std = 1e-6;  // denominator guard in the group normalization

    void validate() const;
};

/// Decoupled clip bounds: ratios are clipped to [1 - epsilon_low, 1 + epsilon_high].
/// epsilon_high may exceed epsilon_low (clip-higher); epsilon_low must stay
/// below 1 so the lower bound remains positive.
struct ClipConfig {
    double epsilon_low = 0.2;
    double epsilon_high = 0.28;

    void validate() const;
};

/// Per-token statistics of one generation. `state`/`action` are tabular
/// annotations (-1 when the token did not come from a tabular policy).
struct TokenRecord {
    double logp_new = 0.0;
    double logp_old = 0.0;
    double advantage = 0.0;
    std::int32_t state = -1;
    std::int32_t action = -1;
};

/// Retained sequences of one or more groups, flattened for the objective.
/// `rewards` keeps the per-generation rewards of the original group(s) in
/// sampling order (retained or not), for bookkeeping.
struct GroupBatch {
    std::vector<std::vector<TokenRecord>> sequences;
    std::vector<double> rewards;

    std::size_t total_tokens() const {
        std::size_t n = 0;
        for (const auto& seq : sequences) n += seq.size();
        return n;
    }
};

/// Group-relative advantages: (R_i - mean) / (population std + epsilon).
/// Throws std::invalid_argument on an empty reward list.
std::vector<double> group_advantages(std::span<const double> rewards,
                                     const AdvantageConfig& cfg);

/// exp(logp_new - logp_old). Throws std::domain_error when the result is
/// not finite and positive.
double prob_ratio(double logp_new, double logp_old);

/// min(ratio * adv, clip(ratio, 1 - eps_low, 1 + eps_high) * adv).
double clipped_token_objective(double ratio, double advantage, const ClipConfig& cfg);

/// Token-mean of the clipped objective over every token of every sequence
/// (one shared normalizer: the total token count). This is a maximization
/// target. Throws std::invalid_argument on an empty batch or empty sequence.
double group_objective(const GroupBatch& batch, const ClipConfig& cfg);

/// group_objective with logp_new recomputed from `policy` at each token's
/// (state, action). Requires tabular annotations on every token.
double tabular_objective(const TabularPolicy& policy, const GroupBatch& batch,
                         const ClipConfig& cfg);

/// Analytic gradient of tabular_objective with respect to every logit,
/// laid out like TabularPolicy::logits(). At the on-policy point the
/// per-token contribution is (advantage / N_tokens) * (one_hot(action) - softmax).
/// Throws std::invalid_argument when annotations or stored logp_old are missing.
std::vector<double> surrogate_gradient_tabular(const TabularPolicy& policy,
                                               const GroupBatch& batch, const ClipConfig& cfg);

/// Central-difference gradient of tabular_objective, (f(th+h) - f(th-h)) / 2h
/// per parameter, recomputing ratios against the batch's frozen logp_old.
/// Verification oracle for surrogate_gradient_tabular.
std::vector<double> finite_diff_gradient(const TabularPolicy& policy, const GroupBatch& batch,
                                         const ClipConfig& cfg, double h);

}  // namespace aspectrl::grpo
