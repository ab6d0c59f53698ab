#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace aspectrl {

/// Polarity of an opinion toward an aspect. Closed three-value set.
enum class SentimentLabel { positive, negative, neutral };

std::string to_string(SentimentLabel label);

/// Case-insensitive, whitespace-trimmed match against the three labels.
/// Anything else is nullopt.
std::optional<SentimentLabel> label_from_string(std::string_view text);

/// Canonical term normalization used everywhere terms are compared:
/// lowercase, trim, collapse internal whitespace runs to one space, strip
/// leading/trailing punctuation.
std::string normalize_term(std::string_view term);

/// One (aspect, opinion, polarity) extraction unit.
struct Triplet {
    std::string aspect;
    std::string opinion;
    SentimentLabel polarity = SentimentLabel::neutral;

    bool operator==(const Triplet&) const = default;
};

using TripletSet = std::vector<Triplet>;

enum class Task { absc, aoste };

std::string to_string(Task task);
std::optional<Task> task_from_string(std::string_view text);

/// Gold payload for classification: the sentence's target aspect and its label.
struct AbscGold {
    std::string aspect;
    SentimentLabel label = SentimentLabel::neutral;
};

/// Gold payload for triplet extraction.
struct AosteGold {
    TripletSet triplets;
};

/// One labeled input. The payload alternative determines the task kind.
/// `reasoning` is an optional reference trace carried through ingestion;
/// nothing in the scoring pipeline consumes it.
struct GoldRecord {
    std::string id;
    std::string text;
    std::variant<AbscGold, AosteGold> payload;
    std::string reasoning;

    Task task() const {
        return std::holds_alternative<AbscGold>(payload) ? Task::absc : Task::aoste;
    }
    const AbscGold& absc() const { return std::get<AbscGold>(payload); }
    const AosteGold& aoste() const { return std::get<AosteGold>(payload); }
};

/// Raw policy output, before any parsing. `token_count` is 0 when unknown.
struct RawGeneration {
    std::string text;
    std::size_t token_count = 0;
};

}  // namespace aspectrl
