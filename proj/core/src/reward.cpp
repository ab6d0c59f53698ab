#include "aspectrl/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aspectrl {

void FormatConfig::validate() const {
    if (w_tag < 0.0 || w_flow < 0.0 || w_struct < 0.0) {
        throw std::invalid_argument("format weights must be nonnegative");
    }
    if (std::abs(w_tag + w_flow + w_struct - 1.0) > 1e-12) {
        throw std::invalid_argument("format weights must sum to 1");
    }
    if (flow_saturation_count < 1) {
        throw std::invalid_argument("flow saturation count must be positive");
    }
    if (lexicon.empty()) {
        throw std::invalid_argument("transition lexicon must be non-empty");
    }
}

void RewardConfig::validate() const {
    if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda out of range [0,1]");
    if (gamma < 0.0) throw std::invalid_argument("gamma must be nonnegative");
    if (tau <= 0.0 || tau > 1.0) throw std::invalid_argument("tau out of range (0,1]");
}

FormatScore format_reward(const ParsedTrace& trace, const TransitionReport& transitions,
                          const FormatConfig& cfg) {
    cfg.validate();
    const TagDiagnostics& d = trace.tag_diagnostics;

    FormatScore score;
    bool think_present = d.think_open_count >= 1 && d.think_close_count >= 1;
    bool answer_present = d.answer_open_count >= 1 && d.answer_close_count >= 1;
    if (think_present && answer_present) {
        score.r_tag = 1.0;
    } else {
        int kinds = (d.think_open_count >= 1) + (d.think_close_count >= 1) +
                    (d.answer_open_count >= 1) + (d.answer_close_count >= 1);
        score.r_tag = kinds / 4.0;
    }

    score.r_flow = std::min(
        static_cast<double>(transitions.distinct_cue_count) / cfg.flow_saturation_count, 1.0);
    score.r_struct = d.well_formed ? 1.0 : 0.0;
    score.r_format = cfg.w_tag * score.r_tag + cfg.w_flow * score.r_flow +
                     cfg.w_struct * score.r_struct;
    return score;
}

double answer_reward_absc(const std::optional<SentimentLabel>& pred, SentimentLabel gold) {
    return (pred && *pred == gold) ? 1.0 : 0.0;
}

namespace {

struct NormalizedTriplet {
    std::string aspect;
    std::string opinion;
    SentimentLabel polarity;
};

std::vector<NormalizedTriplet> normalize_set(const TripletSet& set) {
    std::vector<NormalizedTriplet> out;
    out.reserve(set.size());
    for (const Triplet& t : set) {
        out.push_back({normalize_term(t.aspect), normalize_term(t.opinion), t.polarity});
    }
    return out;
}

bool compatible(const NormalizedTriplet& pred, const NormalizedTriplet& gold) {
    if (pred.polarity != gold.polarity) return false;
    if (pred.aspect.empty() || pred.opinion.empty()) return false;
    return gold.aspect.find(pred.aspect) != std::string::npos &&
           gold.opinion.find(pred.opinion) != std::string::npos;
}

// Kuhn's augmenting-path maximum bipartite matching over the compatibility graph.
bool try_augment(int pred_idx, const std::vector<std::vector<int>>& adj,
                 std::vector<bool>& visited, std::vector<int>& gold_match) {
    for (int gold_idx : adj[pred_idx]) {
        if (visited[gold_idx]) continue;
        visited[gold_idx] = true;
        if (gold_match[gold_idx] < 0 ||
            try_augment(gold_match[gold_idx], adj, visited, gold_match)) {
            gold_match[gold_idx] = pred_idx;
            return true;
        }
    }
    return false;
}

}  // namespace

MatchResult match_triplets(const TripletSet& pred, const TripletSet& gold) {
    const auto npred = normalize_set(pred);
    const auto ngold = normalize_set(gold);

    std::vector<std::vector<int>> adj(npred.size());
    for (std::size_t i = 0; i < npred.size(); ++i) {
        for (std::size_t j = 0; j < ngold.size(); ++j) {
            if (compatible(npred[i], ngold[j])) adj[i].push_back(static_cast<int>(j));
        }
    }

    std::vector<int> gold_match(ngold.size(), -1);
    int tp = 0;
    for (std::size_t i = 0; i < npred.size(); ++i) {
        std::vector<bool> visited(ngold.size(), false);
        if (try_augment(static_cast<int>(i), adj, visited, gold_match)) ++tp;
    }

    MatchResult result;
    result.tp = tp;
    result.fp = static_cast<int>(pred.size()) - tp;
    result.fn = static_cast<int>(gold.size()) - tp;
    for (std::size_t j = 0; j < gold_match.size(); ++j) {
        if (gold_match[j] >= 0) {
            result.matched_pairs.emplace_back(gold_match[j], static_cast<int>(j));
        }
    }
    std::sort(result.matched_pairs.begin(), result.matched_pairs.end());

    result.precision = pred.empty() ? 0.0 : static_cast<double>(tp) / pred.size();
    result.recall = gold.empty() ? 0.0 : static_cast<double>(tp) / gold.size();
    double pr = result.precision + result.recall;
    result.f1 = pr > 0.0 ? 2.0 * result.precision * result.recall / pr : 0.0;
    return result;
}

double answer_reward_aoste(const MatchResult& match, double gamma) {
    if (gamma < 0.0) throw std::invalid_argument("gamma must be nonnegative");
    return match.f1 - gamma * std::abs(match.fn - match.fp);
}

double combine_reward(double r_format, double r_answer, double lambda) {
    if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda out of range [0,1]");
    return lambda * r_format + (1.0 - lambda) * r_answer;
}

bool is_correct(const RawGeneration& gen, const GoldRecord& gold, const RewardConfig& cfg) {
    cfg.validate();
    const ParsedTrace trace = parse_trace(gen);
    if (gold.task() == Task::absc) {
        auto pred = parse_answer_absc(trace.answer_text);
        return pred && *pred == gold.absc().label;
    }
    auto parsed = parse_answer_aoste(trace.answer_text);
    if (!parsed) return false;
    return match_triplets(parsed->triplets, gold.aoste().triplets).f1 >= cfg.tau;
}

RewardBreakdown score_generation(const RawGeneration& gen, const GoldRecord& gold,
                                 const RewardConfig& reward_cfg, const FormatConfig& format_cfg) {
    reward_cfg.validate();
    const ParsedTrace trace = parse_trace(gen);
    const TransitionReport transitions =
        detect_transitions(trace.reasoning_text, format_cfg.lexicon);
    const FormatScore fmt = format_reward(trace, transitions, format_cfg);

    double r_answer = 0.0;
    if (gold.task() == Task::absc) {
        r_answer = answer_reward_absc(parse_answer_absc(trace.answer_text), gold.absc().label);
    } else {
        auto parsed = parse_answer_aoste(trace.answer_text);
        static const TripletSet kEmpty;
        const TripletSet& pred = parsed ? parsed->triplets : kEmpty;
        r_answer = answer_reward_aoste(match_triplets(pred, gold.aoste().triplets),
                                       reward_cfg.gamma);
    }

    RewardBreakdown breakdown;
    breakdown.r_tag = fmt.r_tag;
    breakdown.r_flow = fmt.r_flow;
    breakdown.r_struct = fmt.r_struct;
    breakdown.r_format = fmt.r_format;
    breakdown.r_answer = r_answer;
    breakdown.r_total = combine_reward(fmt.r_format, r_answer, reward_cfg.lambda);
    return breakdown;
}

}  // namespace aspectrl
