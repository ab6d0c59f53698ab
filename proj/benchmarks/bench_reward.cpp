#include <benchmark/benchmark.h>

#include "aspectrl/reward.hpp"

using namespace aspectrl;

namespace {

const GoldRecord kAbscGold{"g", "the battery life is great",
                           AbscGold{"battery life", SentimentLabel::positive}, ""};
const GoldRecord kAosteGold{"g", "",
                            AosteGold{{{"battery life", "great", SentimentLabel::positive},
                                       {"screen", "dim", SentimentLabel::negative}}},
                            ""};

}  // namespace

static void BM_parse_trace(benchmark::State& state) {
    RawGeneration gen{"<think>Firstly the battery is praised, therefore positive.</think>"
                      "<answer>positive</answer>", 0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(parse_trace(gen));
    }
}
BENCHMARK(BM_parse_trace);

static void BM_score_generation_absc(benchmark::State& state) {
    RewardConfig reward_cfg;
    FormatConfig format_cfg;
    RawGeneration gen{"<think>Firstly x, therefore y.</think><answer>positive</answer>", 0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(score_generation(gen, kAbscGold, reward_cfg, format_cfg));
    }
}
BENCHMARK(BM_score_generation_absc);

static void BM_score_generation_aoste(benchmark::State& state) {
    RewardConfig reward_cfg;
    FormatConfig format_cfg;
    RawGeneration gen{"<think>Firstly a, therefore b.</think>"
                      "<answer>(battery, great, positive); (screen, dim, negative)</answer>", 0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(score_generation(gen, kAosteGold, reward_cfg, format_cfg));
    }
}
BENCHMARK(BM_score_generation_aoste);

static void BM_match_triplets(benchmark::State& state) {
    TripletSet pred, gold;
    for (int i = 0; i < state.range(0); ++i) {
        pred.push_back({"aspect " + std::to_string(i), "opinion", SentimentLabel::positive});
        gold.push_back({"aspect " + std::to_string(i) + " long", "opinion word",
                        SentimentLabel::positive});
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(match_triplets(pred, gold));
    }
}
BENCHMARK(BM_match_triplets)->Arg(2)->Arg(4)->Arg(8);
