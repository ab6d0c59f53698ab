#include "aspectrl/tabular_policy.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace aspectrl {

TabularPolicy::TabularPolicy(int num_states, int vocab_size, int max_length)
    : num_states_(num_states),
      vocab_size_(vocab_size),
      max_length_(max_length),
      logits_(static_cast<std::size_t>(num_states) * vocab_size, 0.0) {
    if (num_states < 1 || vocab_size < 2 || max_length < 1) {
        throw std::invalid_argument("TabularPolicy: bad dimensions");
    }
}

std::span<const double> TabularPolicy::row(int state) const {
    if (state < 0 || state >= num_states_) {
        throw std::out_of_range("TabularPolicy: state out of range");
    }
    return {logits_.data() + static_cast<std::size_t>(state) * vocab_size_,
            static_cast<std::size_t>(vocab_size_)};
}

std::span<double> TabularPolicy::row(int state) {
    if (state < 0 || state >= num_states_) {
        throw std::out_of_range("TabularPolicy: state out of range");
    }
    return {logits_.data() + static_cast<std::size_t>(state) * vocab_size_,
            static_cast<std::size_t>(vocab_size_)};
}

std::vector<double> TabularPolicy::log_probabilities(int state) const {
    auto r = row(state);
    double max_logit = r[0];
    for (double v : r) max_logit = std::max(max_logit, v);
    double sum = 0.0;
    for (double v : r) sum += std::exp(v - max_logit);
    double lse = max_logit + std::log(sum);
    std::vector<double> out(r.begin(), r.end());
    for (double& v : out) v -= lse;
    return out;
}

std::vector<double> TabularPolicy::probabilities(int state) const {
    std::vector<double> out = log_probabilities(state);
    for (double& v : out) v = std::exp(v);
    // Renormalize so rows sum to 1 to the last bit of rounding.
    double sum = 0.0;
    for (double v : out) sum += v;
    for (double& v : out) v /= sum;
    return out;
}

double TabularPolicy::log_probability(int state, int action) const {
    if (action < 0 || action >= vocab_size_) {
        throw std::out_of_range("TabularPolicy: action out of range");
    }
    return log_probabilities(state)[action];
}

std::uint64_t TabularPolicy::fingerprint() const {
    std::uint64_t hash = 1469598103934665603ULL;
    for (double v : logits_) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        for (int i = 0; i < 8; ++i) {
            hash ^= (bits >> (8 * i)) & 0xffULL;
            hash *= 1099511628211ULL;
        }
    }
    return hash;
}

}  // namespace aspectrl
