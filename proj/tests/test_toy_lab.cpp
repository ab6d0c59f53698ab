#include <doctest.h>

#include <cmath>
#include <random>

#include "aspectrl/toy_lab.hpp"

using namespace aspectrl;
using namespace aspectrl::toy;

TEST_CASE("make_tasks is deterministic and covers the grammar") {
    auto a = make_tasks(7, 4);
    auto b = make_tasks(7, 4);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].input_id == b[i].input_id);
        CHECK(a[i].prompt_tokens == b[i].prompt_tokens);
        CHECK(a[i].gold.text == b[i].gold.text);
    }

    SUBCASE("different seed, different draws") {
        auto c = make_tasks(8, 24);
        bool any_different = false;
        auto d = make_tasks(7, 24);
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (c[i].gold.text != d[i].gold.text) any_different = true;
        }
        CHECK(any_different);
    }
}

TEST_CASE("make_tasks covers polarities and task kinds") {
    auto tasks = make_tasks(3, 3);
    bool seen[3] = {false, false, false};
    for (const auto& task : tasks) {
        SentimentLabel label = task.gold.task() == Task::absc
                                   ? task.gold.absc().label
                                   : task.gold.aoste().triplets[0].polarity;
        seen[static_cast<int>(label)] = true;
    }
    CHECK(seen[0]);
    CHECK(seen[1]);
    CHECK(seen[2]);

    auto more = make_tasks(3, 24);
    int absc = 0, aoste = 0;
    for (const auto& task : more) {
        (task.gold.task() == Task::absc ? absc : aoste) += 1;
    }
    CHECK(absc == 12);
    CHECK(aoste == 12);
}

TEST_CASE("gold terms appear in the prompt tokens") {
    const Vocab& vocab = Vocab::instance();
    for (const auto& task : make_tasks(99, 24)) {
        std::string aspect, opinion;
        if (task.gold.task() == Task::absc) {
            aspect = task.gold.absc().aspect;
        } else {
            aspect = task.gold.aoste().triplets[0].aspect;
            opinion = task.gold.aoste().triplets[0].opinion;
        }
        std::string prompt_text;
        for (int token : task.prompt_tokens) prompt_text += vocab.token(token) + " ";
        CHECK(prompt_text.find(aspect) != std::string::npos);
        if (!opinion.empty()) CHECK(prompt_text.find(opinion) != std::string::npos);
    }
}

TEST_CASE("softmax rows stay normalized") {
    TabularPolicy policy = make_policy(2);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> dist(-40.0, 40.0);
    for (double& logit : policy.logits()) logit = dist(rng);
    for (int s = 0; s < policy.num_states(); ++s) {
        auto probs = policy.probabilities(s);
        double sum = 0.0;
        for (double p : probs) sum += p;
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("sample_generation is self-consistent") {
    TabularPolicy policy = make_policy(2);
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& logit : policy.logits()) logit = dist(rng);

    SUBCASE("recorded logp equals recomputed log softmax") {
        std::mt19937_64 sample_rng(5);
        auto result = sample_generation(policy, 1, sample_rng);
        for (const TokenStep& step : result.steps) {
            CHECK(step.logp ==
                  doctest::Approx(policy.log_probability(step.state, step.action))
                      .epsilon(1e-12));
        }
    }
    SUBCASE("fixed seed reproduces the sequence") {
        std::mt19937_64 r1(9), r2(9);
        auto a = sample_generation(policy, 0, r1);
        auto b = sample_generation(policy, 0, r2);
        REQUIRE(a.steps.size() == b.steps.size());
        for (std::size_t i = 0; i < a.steps.size(); ++i) {
            CHECK(a.steps[i].action == b.steps[i].action);
        }
        CHECK(a.raw.text == b.raw.text);
    }
    SUBCASE("a near-deterministic policy emits the argmax sequence") {
        TabularPolicy det = make_policy(1);
        const Vocab& vocab = Vocab::instance();
        const int target[] = {vocab.think_open(), vocab.id("firstly"), vocab.id("therefore"),
                              vocab.think_close(), vocab.answer_open(), vocab.id("positive"),
                              vocab.answer_close(), vocab.eos()};
        for (int pos = 0; pos < 8; ++pos) {
            det.row(state_index(0, pos))[target[pos]] = 1e6;
        }
        std::mt19937_64 sample_rng(3);
        auto result = sample_generation(det, 0, sample_rng);
        REQUIRE(result.steps.size() == 8);
        for (int pos = 0; pos < 8; ++pos) CHECK(result.steps[pos].action == target[pos]);
        CHECK(result.raw.text ==
              "<think> firstly therefore </think> <answer> positive </answer>");
    }
}

TEST_CASE("on-policy ratios are 1 for a fresh batch") {
    TrainConfig cfg;
    cfg.task_count = 2;
    cfg.iterations = 1;
    auto tasks = make_tasks(cfg.seed, cfg.task_count);
    TabularPolicy policy = make_policy(cfg.task_count);
    std::mt19937_64 rng(cfg.seed);

    for (std::size_t t = 0; t < tasks.size(); ++t) {
        auto sample = sample_generation(policy, static_cast<int>(t), rng);
        for (const TokenStep& step : sample.steps) {
            double ratio =
                std::exp(policy.log_probability(step.state, step.action) - step.logp);
            CHECK(ratio == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("train_step leaves unvisited states untouched") {
    TrainConfig cfg;
    cfg.task_count = 2;
    auto tasks = make_tasks(cfg.seed, cfg.task_count);
    TabularPolicy policy = make_policy(cfg.task_count);
    std::mt19937_64 rng(11);

    std::vector<double> before = policy.logits();
    std::mt19937_64 replay(11);
    std::vector<bool> visited(policy.num_states(), false);
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        for (int i = 0; i < cfg.group_size; ++i) {
            auto sample = sample_generation(policy, static_cast<int>(t), replay);
            for (const TokenStep& step : sample.steps) visited[step.state] = true;
        }
    }
    train_step(policy, tasks, cfg, rng);
    for (int s = 0; s < policy.num_states(); ++s) {
        if (visited[s]) continue;
        for (int k = 0; k < policy.vocab_size(); ++k) {
            CHECK(policy.logits()[s * policy.vocab_size() + k] ==
                  before[s * policy.vocab_size() + k]);
        }
    }
}

TEST_CASE("an all-correct iteration changes nothing") {
    // Deterministic policy that always emits the ideal classification trace.
    TrainConfig cfg;
    cfg.task_count = 1;
    auto tasks = make_tasks(1, 1);  // task 0 is ABSC
    REQUIRE(tasks[0].gold.task() == Task::absc);

    TabularPolicy policy = make_policy(1);
    const Vocab& vocab = Vocab::instance();
    const int target[] = {vocab.think_open(), vocab.id("firstly"), vocab.id("therefore"),
                          vocab.think_close(), vocab.answer_open(),
                          vocab.label_token(tasks[0].gold.absc().label),
                          vocab.answer_close(), vocab.eos()};
    for (int pos = 0; pos < 8; ++pos) policy.row(state_index(0, pos))[target[pos]] = 1e6;

    std::vector<double> before = policy.logits();
    std::mt19937_64 rng(2);
    auto stats = train_step(policy, tasks, cfg, rng);
    CHECK(stats.batch_skipped);
    CHECK(stats.correct_fraction == doctest::Approx(1.0));
    CHECK(policy.logits() == before);
}

TEST_CASE("gradient used by train_step matches finite differences") {
    TrainConfig cfg;
    cfg.task_count = 2;
    auto tasks = make_tasks(cfg.seed, cfg.task_count);
    TabularPolicy policy = make_policy(cfg.task_count);
    std::mt19937_64 rng(13);

    // Rebuild the same batch train_step would see, then compare gradients.
    std::mt19937_64 replay(13);
    std::vector<TrainingGroup> groups;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        TrainingGroup group;
        group.input_id = tasks[t].input_id;
        group.gold = tasks[t].gold;
        for (int i = 0; i < cfg.group_size; ++i) {
            auto sample = sample_generation(policy, static_cast<int>(t), replay);
            group.generations.push_back(
                AnnotatedGeneration{std::move(sample.raw), std::move(sample.steps)});
        }
        groups.push_back(std::move(group));
    }
    BuildResult built = build_training_batch(groups, cfg.reward, cfg.format, cfg.advantage,
                                             cfg.advantage_mode, cfg.retention);
    REQUIRE_FALSE(built.batch.sequences.empty());

    auto analytic = surrogate_gradient_tabular(policy, built.batch, cfg.clip);
    auto fd = grpo::finite_diff_gradient(policy, built.batch, cfg.clip, 1e-5);
    for (std::size_t k = 0; k < analytic.size(); ++k) {
        if (std::abs(analytic[k]) < 1e-8) {
            CHECK(std::abs(fd[k]) < 1e-8);
        } else {
            CHECK(std::abs(fd[k] - analytic[k]) / std::abs(analytic[k]) < 1e-5);
        }
    }
}

TEST_CASE("nonnegative advantages never push a sampled action down") {
    // Disjoint states per sequence so per-token ascent signs are isolated.
    TabularPolicy policy = make_policy(1);
    grpo::GroupBatch batch;
    std::mt19937_64 rng(21);
    for (int s = 0; s < 6; ++s) {
        grpo::TokenRecord tok;
        tok.state = s;
        tok.action = static_cast<int>(rng() % policy.vocab_size());
        tok.logp_old = policy.log_probability(tok.state, tok.action);
        tok.logp_new = tok.logp_old;
        tok.advantage = static_cast<double>(rng() % 100) / 50.0;  // >= 0
        batch.sequences.push_back({tok});
    }
    std::vector<double> before = policy.logits();
    auto grad = surrogate_gradient_tabular(policy, batch, grpo::ClipConfig{});
    for (const auto& seq : batch.sequences) {
        const auto& tok = seq[0];
        CHECK(grad[tok.state * policy.vocab_size() + tok.action] >= 0.0);
    }
}

TEST_CASE("run_training is bit-identical across reruns") {
    TrainConfig cfg;
    cfg.task_count = 4;
    cfg.iterations = 12;
    cfg.seed = 5;

    TrainingRun a = run_training(cfg);
    TrainingRun b = run_training(cfg);
    CHECK(a.report.final_policy_fingerprint == b.report.final_policy_fingerprint);
    REQUIRE(a.report.iterations.size() == b.report.iterations.size());
    for (std::size_t i = 0; i < a.report.iterations.size(); ++i) {
        CHECK(a.report.iterations[i].mean_reward == b.report.iterations[i].mean_reward);
        CHECK(a.report.iterations[i].objective == b.report.iterations[i].objective);
        CHECK(a.report.iterations[i].gradient_norm == b.report.iterations[i].gradient_norm);
    }
}

TEST_CASE("inner updates replay the batch and move ratios off 1") {
    TrainConfig cfg;
    cfg.task_count = 4;
    cfg.iterations = 6;
    cfg.inner_updates = 3;
    TrainingRun multi = run_training(cfg);

    cfg.inner_updates = 1;
    TrainingRun single = run_training(cfg);
    CHECK(multi.report.final_policy_fingerprint != single.report.final_policy_fingerprint);

    // After one ascent step the stored logp_old of a fresh batch no longer
    // matches the updated policy, so replayed ratios leave 1.
    cfg.inner_updates = 1;
    auto tasks = make_tasks(cfg.seed, cfg.task_count);
    TabularPolicy policy = make_policy(std::span<const MicroTask>(tasks));
    std::mt19937_64 rng(3);
    std::mt19937_64 replay(3);
    std::vector<TrainingGroup> groups;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        TrainingGroup group;
        group.input_id = tasks[t].input_id;
        group.gold = tasks[t].gold;
        for (int i = 0; i < cfg.group_size; ++i) {
            auto sample = sample_generation(policy, static_cast<int>(t), replay);
            group.generations.push_back(
                AnnotatedGeneration{std::move(sample.raw), std::move(sample.steps)});
        }
        groups.push_back(std::move(group));
    }
    train_step(policy, tasks, cfg, rng);
    bool any_ratio_off_one = false;
    for (const auto& group : groups) {
        for (const auto& gen : group.generations) {
            for (const auto& step : gen.steps) {
                double ratio =
                    std::exp(policy.log_probability(step.state, step.action) - step.logp);
                if (std::abs(ratio - 1.0) > 1e-6) any_ratio_off_one = true;
            }
        }
    }
    CHECK(any_ratio_off_one);
}

TEST_CASE("training improves the mean reward on a small task set") {
    TrainConfig cfg;
    cfg.task_count = 6;
    cfg.iterations = 160;
    cfg.seed = 42;

    TrainingRun run = run_training(cfg);
    double first = run.report.iterations.front().mean_reward;
    double last = run.report.iterations.back().mean_reward;
    CHECK(first < 0.55);
    CHECK(last > first + 0.2);
}
