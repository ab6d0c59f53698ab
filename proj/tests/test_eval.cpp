#include <doctest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "aspectrl/eval.hpp"
#include "aspectrl/reward.hpp"

using namespace aspectrl;
using eval::evaluate_absc;
using eval::evaluate_aoste;

namespace {

using AbscPair = std::pair<std::optional<SentimentLabel>, SentimentLabel>;
using AostePair = std::pair<TripletSet, TripletSet>;

constexpr auto pos = SentimentLabel::positive;
constexpr auto neg = SentimentLabel::negative;
constexpr auto neu = SentimentLabel::neutral;

}  // namespace

TEST_CASE("evaluate_absc hand-computed confusion") {
    std::vector<AbscPair> pairs = {{pos, pos}, {neg, pos}, {neg, neg}};
    auto metrics = evaluate_absc(pairs);
    CHECK(metrics.accuracy == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(metrics.per_class.at(pos).f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(metrics.per_class.at(neg).f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    // neutral absent from gold: excluded from the macro mean
    CHECK(metrics.macro_f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("evaluate_absc boundary populations") {
    SUBCASE("perfect predictions") {
        std::vector<AbscPair> pairs = {{pos, pos}, {neg, neg}, {neu, neu}};
        auto metrics = evaluate_absc(pairs);
        CHECK(metrics.accuracy == 1.0);
        CHECK(metrics.macro_f1 == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("all parse failures") {
        std::vector<AbscPair> pairs = {{std::nullopt, pos}, {std::nullopt, neg}};
        auto metrics = evaluate_absc(pairs);
        CHECK(metrics.accuracy == 0.0);
        CHECK(metrics.macro_f1 == 0.0);
    }
    SUBCASE("parse failure counts as a miss for its gold class") {
        std::vector<AbscPair> pairs = {{std::nullopt, pos}, {pos, pos}};
        auto metrics = evaluate_absc(pairs);
        CHECK(metrics.accuracy == doctest::Approx(0.5));
        CHECK(metrics.per_class.at(pos).recall == doctest::Approx(0.5));
        CHECK(metrics.per_class.at(pos).precision == doctest::Approx(1.0));
    }
    SUBCASE("empty input is an error") {
        CHECK_THROWS_AS(evaluate_absc(std::vector<AbscPair>{}), std::invalid_argument);
    }
    SUBCASE("class predicted but absent from gold stays excluded") {
        std::vector<AbscPair> pairs = {{neu, pos}, {pos, pos}};
        auto metrics = evaluate_absc(pairs);
        // macro over {pos} only
        CHECK(metrics.macro_f1 == doctest::Approx(metrics.per_class.at(pos).f1));
    }
}

TEST_CASE("evaluate_aoste aggregates micro counts") {
    const TripletSet gold_a = {{"battery", "great", pos}, {"screen", "dim", neg}};

    SUBCASE("two perfect sentences") {
        std::vector<AostePair> pairs = {{gold_a, gold_a}, {gold_a, gold_a}};
        auto metrics = evaluate_aoste(pairs);
        CHECK(metrics.f1 == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("hand aggregation") {
        // sentence A: TP=1 FP=0 FN=1; sentence B: TP=1 FP=1 FN=0
        std::vector<AostePair> pairs;
        pairs.push_back({{{"battery", "great", pos}}, gold_a});
        pairs.push_back({{{"staff", "friendly", pos}, {"ghost", "opinion", neg}},
                         {{"staff", "friendly", pos}}});
        auto metrics = evaluate_aoste(pairs);
        CHECK(metrics.tp == 2);
        CHECK(metrics.fp == 1);
        CHECK(metrics.fn == 1);
        CHECK(metrics.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        CHECK(metrics.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        CHECK(metrics.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("empty predictions against non-empty gold") {
        std::vector<AostePair> pairs = {{{}, gold_a}};
        auto metrics = evaluate_aoste(pairs);
        CHECK(metrics.f1 == 0.0);
        CHECK(metrics.fn == 2);
    }
    SUBCASE("single sentence equals the per-sentence result") {
        std::vector<AostePair> pairs = {{{{"battery", "great", pos}}, gold_a}};
        auto metrics = evaluate_aoste(pairs);
        auto direct = match_triplets(pairs[0].first, pairs[0].second);
        CHECK(metrics.f1 == doctest::Approx(direct.f1).epsilon(1e-15));
    }
}

TEST_CASE("micro-F1 is invariant under re-partitioning triplets") {
    const TripletSet gold_pool = {{"battery", "great", pos},
                                  {"screen", "dim", neg},
                                  {"staff", "friendly", pos},
                                  {"food", "bland", neu}};
    // One sentence holding everything...
    std::vector<AostePair> merged = {{gold_pool, gold_pool}};
    // ...versus the same triplets split across sentences.
    std::vector<AostePair> split;
    for (const Triplet& t : gold_pool) split.push_back({{t}, {t}});

    auto a = evaluate_aoste(merged);
    auto b = evaluate_aoste(split);
    CHECK(a.tp == b.tp);
    CHECK(a.fp == b.fp);
    CHECK(a.fn == b.fn);
    CHECK(a.f1 == doctest::Approx(b.f1).epsilon(1e-15));
}

TEST_CASE("metrics are permutation invariant over the corpus") {
    std::mt19937_64 rng(71);
    std::vector<AbscPair> pairs;
    for (int i = 0; i < 60; ++i) {
        std::optional<SentimentLabel> pred;
        if (rng() % 4 != 0) pred = static_cast<SentimentLabel>(rng() % 3);
        pairs.emplace_back(pred, static_cast<SentimentLabel>(rng() % 3));
    }
    auto reference = evaluate_absc(pairs);
    for (int trial = 0; trial < 10; ++trial) {
        std::shuffle(pairs.begin(), pairs.end(), rng);
        auto shuffled = evaluate_absc(pairs);
        CHECK(shuffled.accuracy == doctest::Approx(reference.accuracy).epsilon(1e-15));
        CHECK(shuffled.macro_f1 == doctest::Approx(reference.macro_f1).epsilon(1e-15));
    }
}

TEST_CASE("ablation_report layout and averaging") {
    std::vector<eval::MetricRun> runs;
    runs.push_back({"full", {{"lap14", 0.69}, {"rest14", 0.81}, {"rest15", 0.84}, {"rest16", 0.85}}});
    runs.push_back({"w/o filter", {{"lap14", 0.57}, {"rest14", 0.74}, {"rest15", 0.74}, {"rest16", 0.71}}});

    auto table = eval::ablation_report(runs);
    REQUIRE(table.columns.size() == 5);
    CHECK(table.columns.back() == "Avg");
    REQUIRE(table.rows.size() == 2);
    double expected_avg = (0.69 + 0.81 + 0.84 + 0.85) / 4.0;
    CHECK(table.rows[0].second.back() == doctest::Approx(expected_avg).epsilon(1e-12));

    SUBCASE("single dataset average is the value itself") {
        std::vector<eval::MetricRun> one = {{"full", {{"only", 0.5}}}};
        auto t = eval::ablation_report(one);
        CHECK(t.rows[0].second.back() == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("mismatched dataset sets are an error") {
        std::vector<eval::MetricRun> bad = runs;
        bad[1].per_dataset.erase("lap14");
        CHECK_THROWS_AS(eval::ablation_report(bad), std::invalid_argument);
    }
    SUBCASE("renders to text and csv") {
        std::string text = eval::to_text(table);
        CHECK(text.find("full") != std::string::npos);
        CHECK(text.find("Avg") != std::string::npos);
        std::string csv = eval::to_csv(table);
        CHECK(csv.find("run,lap14,rest14,rest15,rest16,Avg") == 0);
    }
}
