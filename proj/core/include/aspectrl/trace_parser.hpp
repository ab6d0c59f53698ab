#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aspectrl/types.hpp"

namespace aspectrl {

/// Tag bookkeeping for one generation. `well_formed` means exactly one of
/// each tag, properly nested, think block before answer block.
struct TagDiagnostics {
    int think_open_count = 0;
    int think_close_count = 0;
    int answer_open_count = 0;
    int answer_close_count = 0;
    bool correct_order = false;
    bool well_formed = false;
};

/// A generation decomposed into its reasoning and answer segments.
/// Segments come from the first complete block of each kind; any tag
/// markers nested inside a segment are removed from its text. A missing
/// block yields an empty segment.
struct ParsedTrace {
    std::string reasoning_text;
    std::string answer_text;
    TagDiagnostics tag_diagnostics;
};

/// Transition-cue occurrences found in a reasoning segment.
struct TransitionReport {
    std::vector<std::pair<std::string, int>> matched_cues;  // count >= 1 entries only
    int distinct_cue_count = 0;
};

inline constexpr std::string_view kThinkOpenTag = "<think>";
inline constexpr std::string_view kThinkCloseTag = "</think>";
inline constexpr std::string_view kAnswerOpenTag = "<answer>";
inline constexpr std::string_view kAnswerCloseTag = "</answer>";

/// Total function: any input string produces a trace; malformed structure
/// is reported through TagDiagnostics, never an error.
ParsedTrace parse_trace(const RawGeneration& raw);

/// Cues considered evidence of step-by-step reasoning.
const std::vector<std::string>& default_transition_lexicon();

/// Case-insensitive, word-boundary occurrence counting of every lexicon cue.
/// Word boundaries are non-alphanumeric neighbors (or string ends).
/// Throws std::invalid_argument on an empty lexicon.
TransitionReport detect_transitions(std::string_view reasoning_text,
                                    std::span<const std::string> lexicon);

/// Lowercased, trimmed answer text matched against the closed label set.
/// nullopt signals an unscorable answer.
std::optional<SentimentLabel> parse_answer_absc(std::string_view answer_text);

/// Triplets recovered from an answer plus the count of tuples that were
/// syntactically present but unusable (bad polarity, empty term).
struct TripletParse {
    TripletSet triplets;
    int dropped_tuples = 0;
};

/// Parses the canonical "(aspect, opinion, polarity); ..." serialization.
/// "\," escapes a literal comma inside a term. nullopt when no tuple can
/// be extracted at all.
std::optional<TripletParse> parse_answer_aoste(std::string_view answer_text);

}  // namespace aspectrl
