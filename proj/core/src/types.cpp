#include "aspectrl/types.hpp"

#include <cctype>

namespace aspectrl {

namespace {

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

}  // namespace

std::string to_string(SentimentLabel label) {
    switch (label) {
        case SentimentLabel::positive: return "positive";
        case SentimentLabel::negative: return "negative";
        case SentimentLabel::neutral: return "neutral";
    }
    return "neutral";
}

std::optional<SentimentLabel> label_from_string(std::string_view text) {
    std::string lowered;
    lowered.reserve(text.size());
    for (char c : trim(text)) {
        lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (lowered == "positive") return SentimentLabel::positive;
    if (lowered == "negative") return SentimentLabel::negative;
    if (lowered == "neutral") return SentimentLabel::neutral;
    return std::nullopt;
}

std::string normalize_term(std::string_view term) {
    std::string_view t = trim(term);

    // Strip leading/trailing punctuation (but never interior characters).
    auto is_punct = [](char c) {
        return std::ispunct(static_cast<unsigned char>(c)) != 0;
    };
    while (!t.empty() && is_punct(t.front())) t.remove_prefix(1);
    while (!t.empty() && is_punct(t.back())) t.remove_suffix(1);
    t = trim(t);

    std::string out;
    out.reserve(t.size());
    bool last_was_space = false;
    for (char c : t) {
        if (is_space(c)) {
            last_was_space = true;
            continue;
        }
        if (last_was_space && !out.empty()) out.push_back(' ');
        last_was_space = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::string to_string(Task task) {
    return task == Task::absc ? "absc" : "aoste";
}

std::optional<Task> task_from_string(std::string_view text) {
    std::string lowered;
    for (char c : trim(text)) {
        lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (lowered == "absc") return Task::absc;
    if (lowered == "aoste") return Task::aoste;
    return std::nullopt;
}

}  // namespace aspectrl
