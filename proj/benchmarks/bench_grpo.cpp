#include <benchmark/benchmark.h>

#include <random>

#include "aspectrl/grpo.hpp"
#include "aspectrl/toy_lab.hpp"

using namespace aspectrl;

static void BM_group_advantages(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> rewards(state.range(0));
    for (double& r : rewards) r = dist(rng);
    grpo::AdvantageConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(grpo::group_advantages(rewards, cfg));
    }
}
BENCHMARK(BM_group_advantages)->Arg(8)->Arg(64);

static void BM_group_objective(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> logp(-3.0, -0.1);
    std::uniform_real_distribution<double> adv(-2.0, 2.0);
    grpo::GroupBatch batch;
    for (int s = 0; s < state.range(0); ++s) {
        std::vector<grpo::TokenRecord> seq;
        for (int t = 0; t < 14; ++t) {
            double lp = logp(rng);
            seq.push_back(grpo::TokenRecord{lp + 0.05, lp, adv(rng)});
        }
        batch.sequences.push_back(std::move(seq));
    }
    grpo::ClipConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(grpo::group_objective(batch, cfg));
    }
}
BENCHMARK(BM_group_objective)->Arg(8)->Arg(192);

static void BM_toy_train_step(benchmark::State& state) {
    toy::TrainConfig cfg;
    cfg.task_count = static_cast<int>(state.range(0));
    auto tasks = toy::make_tasks(cfg.seed, cfg.task_count);
    TabularPolicy policy = toy::make_policy(cfg.task_count);
    std::mt19937_64 rng(cfg.seed);
    for (auto _ : state) {
        benchmark::DoNotOptimize(toy::train_step(policy, tasks, cfg, rng));
    }
}
BENCHMARK(BM_toy_train_step)->Arg(4)->Arg(24)->Unit(benchmark::kMillisecond);
