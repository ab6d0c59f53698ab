#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace aspectrl {

/// Softmax policy over a small vocabulary with one independent logit row
/// per state. States are dense integers; the toy lab maps
/// (task index, emission position) onto them.
class TabularPolicy {
  public:
    TabularPolicy(int num_states, int vocab_size, int max_length);

    int num_states() const { return num_states_; }
    int vocab_size() const { return vocab_size_; }
    int max_length() const { return max_length_; }

    std::span<const double> row(int state) const;
    std::span<double> row(int state);

    /// Softmax of a state's logit row; sums to 1 within 1e-12.
    std::vector<double> probabilities(int state) const;

    /// Log-softmax of a state's logit row.
    std::vector<double> log_probabilities(int state) const;

    double log_probability(int state, int action) const;

    /// Flat row-major logits, mutable for in-place ascent updates.
    std::vector<double>& logits() { return logits_; }
    const std::vector<double>& logits() const { return logits_; }

    /// FNV-1a hash of the logit bytes; snapshot fingerprint for reports.
    std::uint64_t fingerprint() const;

  private:
    int num_states_;
    int vocab_size_;
    int max_length_;
    std::vector<double> logits_;
};

}  // namespace aspectrl
