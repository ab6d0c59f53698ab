#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aspectrl/trace_parser.hpp"
#include "aspectrl/types.hpp"

namespace aspectrl {

/// Weights of the three format sub-rewards. Must sum to 1.
struct FormatConfig {
    double w_tag = 0.4;
    double w_flow = 0.3;
    double w_struct = 0.3;
    int flow_saturation_count = 2;  // distinct cues at which r_flow saturates
    std::vector<std::string> lexicon = default_transition_lexicon();

    /// Throws std::invalid_argument when weights are negative, do not sum
    /// to 1 within 1e-12, the saturation count is < 1, or the lexicon is empty.
    void validate() const;
};

struct RewardConfig {
    double lambda = 0.2;  // format weight in the combined reward
    double gamma = 0.05;  // |FN - FP| penalty scale for extraction
    double tau = 1.0;     // F1 threshold of the extraction correctness test

    /// Throws std::invalid_argument when lambda is outside [0,1], gamma is
    /// negative, or tau is outside (0,1].
    void validate() const;
};

/// Outcome of matching predicted triplets against gold triplets.
struct MatchResult {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::vector<std::pair<int, int>> matched_pairs;  // (pred index, gold index)
};

struct FormatScore {
    double r_tag = 0.0;
    double r_flow = 0.0;
    double r_struct = 0.0;
    double r_format = 0.0;
};

/// All reward components for one generation.
struct RewardBreakdown {
    double r_tag = 0.0;
    double r_flow = 0.0;
    double r_struct = 0.0;
    double r_format = 0.0;
    double r_answer = 0.0;  // may be negative for extraction
    double r_total = 0.0;
};

/// Structural score in [0,1]:
///   r_tag    1 when both blocks are present, else 1/4 per tag kind present
///   r_flow   min(distinct cues / saturation, 1)
///   r_struct 1 when well formed, else 0
FormatScore format_reward(const ParsedTrace& trace, const TransitionReport& transitions,
                          const FormatConfig& cfg);

/// Exact-match indicator; an unparseable prediction scores 0.
double answer_reward_absc(const std::optional<SentimentLabel>& pred, SentimentLabel gold);

/// A predicted triplet is compatible with a gold triplet when its normalized
/// aspect and opinion are substrings of the gold's normalized terms and the
/// polarities are equal. TP is the size of a maximum one-to-one matching in
/// that compatibility graph; FP and FN are the unmatched remainders.
MatchResult match_triplets(const TripletSet& pred, const TripletSet& gold);

/// F1 - gamma * |FN - FP|, deliberately unclamped (may be negative).
double answer_reward_aoste(const MatchResult& match, double gamma);

/// lambda * r_format + (1 - lambda) * r_answer.
/// Throws std::invalid_argument when lambda is outside [0,1].
double combine_reward(double r_format, double r_answer, double lambda);

/// Binary correctness test used by rejection sampling: exact label equality
/// for classification, F1 >= tau for extraction. Parse failures are false.
bool is_correct(const RawGeneration& gen, const GoldRecord& gold, const RewardConfig& cfg);

/// Full scoring pipeline for one generation: parse, format-score, task
/// answer reward, combine. Deterministic.
RewardBreakdown score_generation(const RawGeneration& gen, const GoldRecord& gold,
                                 const RewardConfig& reward_cfg, const FormatConfig& format_cfg);

}  // namespace aspectrl
