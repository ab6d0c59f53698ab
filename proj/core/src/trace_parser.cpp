#include "aspectrl/trace_parser.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace aspectrl {

namespace {

int count_occurrences(std::string_view text, std::string_view needle) {
    int count = 0;
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string_view::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

struct Block {
    bool complete = false;
    std::size_t open_pos = std::string_view::npos;   // index of the opening tag
    std::size_t begin = 0;                           // content start
    std::size_t end = 0;                             // content end (exclusive)
};

// First complete block: first opening tag, then the next closing tag after it.
Block first_block(std::string_view text, std::string_view open_tag,
                  std::string_view close_tag) {
    Block block;
    block.open_pos = text.find(open_tag);
    if (block.open_pos == std::string_view::npos) return block;
    std::size_t content_begin = block.open_pos + open_tag.size();
    std::size_t close_pos = text.find(close_tag, content_begin);
    if (close_pos == std::string_view::npos) return block;
    block.complete = true;
    block.begin = content_begin;
    block.end = close_pos;
    return block;
}

// Remove any tag markers that ended up inside an extracted segment so the
// segment text never carries structural markup.
std::string strip_tag_markers(std::string_view text) {
    static constexpr std::string_view tags[] = {kThinkOpenTag, kThinkCloseTag,
                                                kAnswerOpenTag, kAnswerCloseTag};
    std::string out(text);
    for (std::string_view tag : tags) {
        std::size_t pos = 0;
        while ((pos = out.find(tag, pos)) != std::string::npos) {
            out.erase(pos, tag.size());
        }
    }
    return out;
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

std::string to_lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::string_view trim_view(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Splits on unescaped `sep`, then unescapes "\<sep>" inside each piece.
std::vector<std::string> split_unescaped(std::string_view text, char sep) {
    std::vector<std::string> parts;
    std::string current;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\\' && i + 1 < text.size() && text[i + 1] == sep) {
            current.push_back(sep);
            ++i;
        } else if (c == sep) {
            parts.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    parts.push_back(std::move(current));
    return parts;
}

}  // namespace

ParsedTrace parse_trace(const RawGeneration& raw) {
    std::string_view text = raw.text;
    ParsedTrace trace;
    TagDiagnostics& diag = trace.tag_diagnostics;

    diag.think_open_count = count_occurrences(text, kThinkOpenTag);
    diag.think_close_count = count_occurrences(text, kThinkCloseTag);
    diag.answer_open_count = count_occurrences(text, kAnswerOpenTag);
    diag.answer_close_count = count_occurrences(text, kAnswerCloseTag);

    Block think = first_block(text, kThinkOpenTag, kThinkCloseTag);
    Block answer = first_block(text, kAnswerOpenTag, kAnswerCloseTag);

    if (think.complete) {
        trace.reasoning_text = strip_tag_markers(text.substr(think.begin, think.end - think.begin));
    }
    if (answer.complete) {
        trace.answer_text = strip_tag_markers(text.substr(answer.begin, answer.end - answer.begin));
    }

    diag.correct_order = think.complete && answer.complete &&
                         think.end + kThinkCloseTag.size() <= answer.open_pos;
    diag.well_formed = diag.correct_order && diag.think_open_count == 1 &&
                       diag.think_close_count == 1 && diag.answer_open_count == 1 &&
                       diag.answer_close_count == 1;
    return trace;
}

const std::vector<std::string>& default_transition_lexicon() {
    static const std::vector<std::string> lexicon = {
        "first", "firstly", "second", "secondly", "then",    "next",
        "therefore", "thus",  "however", "because", "finally", "overall",
    };
    return lexicon;
}

TransitionReport detect_transitions(std::string_view reasoning_text,
                                    std::span<const std::string> lexicon) {
    if (lexicon.empty()) {
        throw std::invalid_argument("detect_transitions: empty transition lexicon");
    }

    const std::string haystack = to_lower(reasoning_text);
    TransitionReport report;
    std::vector<std::string> considered;
    for (const std::string& cue : lexicon) {
        if (cue.empty()) continue;
        const std::string needle = to_lower(cue);
        // Skip duplicate lexicon entries (case-insensitively).
        if (std::find(considered.begin(), considered.end(), needle) != considered.end()) {
            continue;
        }
        considered.push_back(needle);

        int count = 0;
        std::size_t pos = 0;
        while ((pos = haystack.find(needle, pos)) != std::string::npos) {
            bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]);
            std::size_t after = pos + needle.size();
            bool right_ok = after >= haystack.size() || !is_word_char(haystack[after]);
            if (left_ok && right_ok) ++count;
            pos += 1;
        }
        if (count > 0) {
            report.matched_cues.emplace_back(needle, count);
        }
    }
    report.distinct_cue_count = static_cast<int>(report.matched_cues.size());
    return report;
}

std::optional<SentimentLabel> parse_answer_absc(std::string_view answer_text) {
    return label_from_string(answer_text);
}

std::optional<TripletParse> parse_answer_aoste(std::string_view answer_text) {
    TripletParse parse;
    bool any_tuple = false;

    for (const std::string& chunk : split_unescaped(answer_text, ';')) {
        std::string_view piece = trim_view(chunk);
        if (piece.empty()) continue;
        std::size_t open = piece.find('(');
        if (open == std::string_view::npos) continue;
        std::size_t close = piece.find(')', open + 1);
        if (close == std::string_view::npos) continue;
        any_tuple = true;

        std::string_view inner = piece.substr(open + 1, close - open - 1);
        std::vector<std::string> fields = split_unescaped(inner, ',');
        if (fields.size() != 3) {
            ++parse.dropped_tuples;
            continue;
        }
        std::string aspect = normalize_term(fields[0]);
        std::string opinion = normalize_term(fields[1]);
        std::optional<SentimentLabel> polarity = label_from_string(fields[2]);
        if (aspect.empty() || opinion.empty() || !polarity) {
            ++parse.dropped_tuples;
            continue;
        }
        parse.triplets.push_back(Triplet{std::move(aspect), std::move(opinion), *polarity});
    }

    if (!any_tuple) return std::nullopt;
    return parse;
}

}  // namespace aspectrl
