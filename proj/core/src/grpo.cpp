#include "aspectrl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aspectrl::grpo {

void AdvantageConfig::validate() const {
    if (!(epsilon_std > 0.0)) throw std::invalid_argument("epsilon_std must be positive");
}

void ClipConfig::validate() const {
    if (!(epsilon_low > 0.0) || epsilon_low >= 1.0) {
        throw std::invalid_argument("epsilon_low out of range (0,1)");
    }
    if (!(epsilon_high > 0.0)) {
        throw std::invalid_argument("epsilon_high must be positive");
    }
}

std::vector<double> group_advantages(std::span<const double> rewards,
                                     const AdvantageConfig& cfg) {
    cfg.validate();
    if (rewards.empty()) throw std::invalid_argument("group_advantages: empty reward list");

    const double n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;

    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= n;  // population variance
    const double denom = std::sqrt(var) + cfg.epsilon_std;

    std::vector<double> advantages;
    advantages.reserve(rewards.size());
    for (double r : rewards) advantages.push_back((r - mean) / denom);
    return advantages;
}

double prob_ratio(double logp_new, double logp_old) {
    double ratio = std::exp(logp_new - logp_old);
    if (!std::isfinite(ratio) || ratio <= 0.0) {
        throw std::domain_error("prob_ratio: non-finite or non-positive ratio");
    }
    return ratio;
}

double clipped_token_objective(double ratio, double advantage, const ClipConfig& cfg) {
    double clipped = std::clamp(ratio, 1.0 - cfg.epsilon_low, 1.0 + cfg.epsilon_high);
    return std::min(ratio * advantage, clipped * advantage);
}

namespace {

void check_batch(const GroupBatch& batch) {
    if (batch.sequences.empty()) throw std::invalid_argument("group_objective: empty batch");
    for (const auto& seq : batch.sequences) {
        if (seq.empty()) throw std::invalid_argument("group_objective: empty sequence");
    }
}

void check_tabular_annotations(const TabularPolicy& policy, const GroupBatch& batch) {
    for (const auto& seq : batch.sequences) {
        for (const TokenRecord& tok : seq) {
            if (tok.state < 0 || tok.state >= policy.num_states() || tok.action < 0 ||
                tok.action >= policy.vocab_size()) {
                throw std::invalid_argument("tabular batch: missing state/action annotation");
            }
            if (!std::isfinite(tok.logp_old)) {
                throw std::invalid_argument("tabular batch: missing stored logp_old");
            }
        }
    }
}

}  // namespace

double group_objective(const GroupBatch& batch, const ClipConfig& cfg) {
    cfg.validate();
    check_batch(batch);

    double sum = 0.0;
    std::size_t tokens = 0;
    for (const auto& seq : batch.sequences) {
        for (const TokenRecord& tok : seq) {
            sum += clipped_token_objective(prob_ratio(tok.logp_new, tok.logp_old),
                                           tok.advantage, cfg);
            ++tokens;
        }
    }
    return sum / static_cast<double>(tokens);
}

double tabular_objective(const TabularPolicy& policy, const GroupBatch& batch,
                         const ClipConfig& cfg) {
    cfg.validate();
    check_batch(batch);
    check_tabular_annotations(policy, batch);

    double sum = 0.0;
    std::size_t tokens = 0;
    for (const auto& seq : batch.sequences) {
        for (const TokenRecord& tok : seq) {
            double logp_new = policy.log_probability(tok.state, tok.action);
            sum += clipped_token_objective(prob_ratio(logp_new, tok.logp_old),
                                           tok.advantage, cfg);
            ++tokens;
        }
    }
    return sum / static_cast<double>(tokens);
}

std::vector<double> surrogate_gradient_tabular(const TabularPolicy& policy,
                                               const GroupBatch& batch, const ClipConfig& cfg) {
    cfg.validate();
    check_batch(batch);
    check_tabular_annotations(policy, batch);

    const double lo = 1.0 - cfg.epsilon_low;
    const double hi = 1.0 + cfg.epsilon_high;
    const double inv_tokens = 1.0 / static_cast<double>(batch.total_tokens());
    const int vocab = policy.vocab_size();

    std::vector<double> grad(policy.logits().size(), 0.0);
    for (const auto& seq : batch.sequences) {
        for (const TokenRecord& tok : seq) {
            const double logp_new = policy.log_probability(tok.state, tok.action);
            const double ratio = prob_ratio(logp_new, tok.logp_old);

            // The clipped min saturates (zero slope) when the ratio has been
            // pushed outside the trust band in the direction the advantage
            // would reward further.
            bool saturated = (tok.advantage > 0.0 && ratio > hi) ||
                             (tok.advantage < 0.0 && ratio < lo);
            if (saturated || tok.advantage == 0.0) continue;

            const double weight = tok.advantage * ratio * inv_tokens;
            const std::vector<double> probs = policy.probabilities(tok.state);
            double* row = grad.data() + static_cast<std::size_t>(tok.state) * vocab;
            for (int k = 0; k < vocab; ++k) {
                row[k] -= weight * probs[k];
            }
            row[tok.action] += weight;
        }
    }
    return grad;
}

std::vector<double> finite_diff_gradient(const TabularPolicy& policy, const GroupBatch& batch,
                                         const ClipConfig& cfg, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_gradient: h must be positive");
    cfg.validate();
    check_batch(batch);
    check_tabular_annotations(policy, batch);

    TabularPolicy perturbed = policy;
    std::vector<double> grad(policy.logits().size(), 0.0);
    for (std::size_t k = 0; k < grad.size(); ++k) {
        const double original = perturbed.logits()[k];
        perturbed.logits()[k] = original + h;
        const double plus = tabular_objective(perturbed, batch, cfg);
        perturbed.logits()[k] = original - h;
        const double minus = tabular_objective(perturbed, batch, cfg);
        perturbed.logits()[k] = original;
        grad[k] = (plus - minus) / (2.0 * h);
    }
    return grad;
}

}  // namespace aspectrl::grpo
