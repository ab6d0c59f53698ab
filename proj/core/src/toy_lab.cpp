#include "aspectrl/toy_lab.hpp"

#include <cmath>
#include <stdexcept>

namespace aspectrl::toy {

namespace {

// Uniform double in [0,1), from the top 53 bits of the generator output.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct AspectOpinionPair {
    const char* aspect;
    const char* opinion;
    SentimentLabel polarity;
};

// Fixed pairings with known polarity; two per polarity class.
constexpr AspectOpinionPair kPairs[] = {
    {"battery", "great", SentimentLabel::positive},
    {"staff", "friendly", SentimentLabel::positive},
    {"screen", "dim", SentimentLabel::negative},
    {"service", "slow", SentimentLabel::negative},
    {"food", "average", SentimentLabel::neutral},
    {"price", "standard", SentimentLabel::neutral},
};
constexpr int kPairCount = 6;
constexpr int kTripletTokenBase = 10;

}  // namespace

Vocab::Vocab() {
    tokens_ = {
        "<think>", "</think>", "<answer>", "</answer>",  // 0..3
        "firstly", "therefore",                           // 4..5
        "positive", "negative", "neutral",                // 6..8
        "",                                               // 9: EOS
    };
    // Extraction answers are emitted as one compound triplet token whose
    // string is already the canonical "(aspect, opinion, polarity)"
    // serialization, one per pairing.
    for (const auto& pair : kPairs) {
        tokens_.push_back(std::string("(") + pair.aspect + ", " + pair.opinion + ", " +
                          to_string(pair.polarity) + ")");
    }
}

const Vocab& Vocab::instance() {
    static const Vocab vocab;
    return vocab;
}

int Vocab::id(const std::string& token) const {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (tokens_[i] == token) return static_cast<int>(i);
    }
    throw std::invalid_argument("Vocab: unknown token '" + token + "'");
}

int Vocab::eos() const { return 9; }

int Vocab::label_token(SentimentLabel label) const {
    switch (label) {
        case SentimentLabel::positive: return 6;
        case SentimentLabel::negative: return 7;
        case SentimentLabel::neutral: return 8;
    }
    return 8;
}

int Vocab::pair_count() const { return kPairCount; }

std::string Vocab::pair_aspect(int pair_index) const {
    return kPairs[pair_index].aspect;
}

std::string Vocab::pair_opinion(int pair_index) const {
    return kPairs[pair_index].opinion;
}

SentimentLabel Vocab::pair_polarity(int pair_index) const {
    return kPairs[pair_index].polarity;
}

int Vocab::triplet_token(int pair_index) const {
    if (pair_index < 0 || pair_index >= kPairCount) {
        throw std::out_of_range("Vocab: pair index out of range");
    }
    return kTripletTokenBase + pair_index;
}

std::string Vocab::render(std::span<const int> token_ids) const {
    std::string out;
    for (int id : token_ids) {
        if (id == eos()) continue;
        if (!out.empty()) out.push_back(' ');
        out += token(id);
    }
    return out;
}

std::vector<MicroTask> make_tasks(std::uint64_t seed, int count) {
    if (count < 1) throw std::invalid_argument("make_tasks: count must be >= 1");
    const Vocab& vocab = Vocab::instance();
    std::mt19937_64 rng(seed);

    std::vector<MicroTask> tasks;
    tasks.reserve(count);
    for (int i = 0; i < count; ++i) {
        const SentimentLabel polarity = static_cast<SentimentLabel>(i % 3);
        const Task kind = (i % 2 == 0) ? Task::absc : Task::aoste;

        // A pairing whose opinion word carries the required polarity.
        std::vector<int> candidates;
        for (int p = 0; p < vocab.pair_count(); ++p) {
            if (vocab.pair_polarity(p) == polarity) candidates.push_back(p);
        }
        const int pair_index =
            candidates[static_cast<std::size_t>(uniform01(rng) * candidates.size())];
        const std::string aspect = vocab.pair_aspect(pair_index);
        const std::string opinion = vocab.pair_opinion(pair_index);

        MicroTask task;
        task.input_id = "toy-" + std::to_string(i);
        task.prompt_tokens = {vocab.triplet_token(pair_index)};
        task.gold.id = task.input_id;
        task.gold.text = "the " + aspect + " is " + opinion;
        if (kind == Task::absc) {
            task.gold.payload = AbscGold{aspect, polarity};
        } else {
            task.gold.payload = AosteGold{{Triplet{aspect, opinion, polarity}}};
        }
        tasks.push_back(std::move(task));
    }
    return tasks;
}

TabularPolicy make_policy(int task_count) {
    return TabularPolicy(task_count * kMaxLength, Vocab::instance().size(), kMaxLength);
}

TabularPolicy make_policy(std::span<const MicroTask> tasks) {
    const Vocab& vocab = Vocab::instance();
    TabularPolicy policy = make_policy(static_cast<int>(tasks.size()));

    for (std::size_t t = 0; t < tasks.size(); ++t) {
        auto bias = [&](int pos, int token, double amount) {
            policy.row(state_index(static_cast<int>(t), pos))[token] += amount;
        };
        bias(0, vocab.think_open(), kScaffoldBias);
        bias(1, vocab.id("firstly"), kScaffoldBias);
        bias(2, vocab.id("therefore"), kScaffoldBias);
        bias(3, vocab.think_close(), kScaffoldBias);
        bias(4, vocab.answer_open(), kScaffoldBias);
        bias(6, vocab.answer_close(), kScaffoldBias);
        bias(7, vocab.eos(), kScaffoldBias);
        // The answer slot gets a class-level bias toward the task's answer
        // inventory, uniform within the class: which answer is right is
        // left entirely to the reward signal.
        if (tasks[t].gold.task() == Task::absc) {
            for (int label = 0; label < 3; ++label) {
                bias(5, vocab.label_token(static_cast<SentimentLabel>(label)),
                     kAnswerClassBias);
            }
        } else {
            for (int p = 0; p < vocab.pair_count(); ++p) {
                bias(5, vocab.triplet_token(p), kAnswerClassBias);
            }
        }
    }
    return policy;
}

SampleResult sample_generation(const TabularPolicy& policy, int task_index,
                               std::mt19937_64& rng) {
    const Vocab& vocab = Vocab::instance();
    SampleResult result;
    std::vector<int> emitted;

    for (int pos = 0; pos < policy.max_length(); ++pos) {
        const int state = state_index(task_index, pos);
        const std::vector<double> logps = policy.log_probabilities(state);

        const double u = uniform01(rng);
        double cumulative = 0.0;
        int action = policy.vocab_size() - 1;
        for (int k = 0; k < policy.vocab_size(); ++k) {
            cumulative += std::exp(logps[k]);
            if (u < cumulative) {
                action = k;
                break;
            }
        }

        result.steps.push_back(TokenStep{state, action, logps[action]});
        if (action == vocab.eos()) break;
        emitted.push_back(action);
    }

    result.raw.text = vocab.render(emitted);
    result.raw.token_count = result.steps.size();
    return result;
}

void TrainConfig::validate() const {
    if (group_size < 1) throw std::invalid_argument("group_size must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (task_count < 1) throw std::invalid_argument("task_count must be >= 1");
    if (inner_updates < 1) throw std::invalid_argument("inner_updates must be >= 1");
    reward.validate();
    format.validate();
    clip.validate();
    advantage.validate();
}

IterationStats train_step(TabularPolicy& policy, std::span<const MicroTask> tasks,
                          const TrainConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    if (tasks.empty()) throw std::invalid_argument("train_step: no tasks");

    std::vector<TrainingGroup> groups;
    groups.reserve(tasks.size());
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        TrainingGroup group;
        group.input_id = tasks[t].input_id;
        group.gold = tasks[t].gold;
        group.generations.reserve(cfg.group_size);
        for (int i = 0; i < cfg.group_size; ++i) {
            SampleResult sample = sample_generation(policy, static_cast<int>(t), rng);
            group.generations.push_back(
                AnnotatedGeneration{std::move(sample.raw), std::move(sample.steps)});
        }
        groups.push_back(std::move(group));
    }

    BuildResult built = build_training_batch(groups, cfg.reward, cfg.format, cfg.advantage,
                                             cfg.advantage_mode, cfg.retention);

    IterationStats stats;
    stats.mean_reward = built.stats.reward_mean;
    stats.mean_format_reward = built.stats.mean_format_reward;
    stats.mean_answer_reward = built.stats.mean_answer_reward;
    stats.retention_fraction = built.stats.retention_fraction;
    stats.correct_fraction = built.stats.correct_fraction;

    if (built.batch.sequences.empty()) {
        stats.batch_skipped = true;
        return stats;
    }

    stats.objective = grpo::group_objective(built.batch, cfg.clip);

    for (int k = 0; k < cfg.inner_updates; ++k) {
        std::vector<double> grad = surrogate_gradient_tabular(policy, built.batch, cfg.clip);
        if (k == 0) {
            double sq = 0.0;
            for (double g : grad) sq += g * g;
            stats.gradient_norm = std::sqrt(sq);
        }
        std::vector<double>& logits = policy.logits();
        for (std::size_t i = 0; i < logits.size(); ++i) {
            logits[i] += cfg.learning_rate * grad[i];
        }
    }
    return stats;
}

TrainingRun run_training(const TrainConfig& cfg) {
    cfg.validate();
    std::vector<MicroTask> tasks = make_tasks(cfg.seed, cfg.task_count);
    TabularPolicy policy = make_policy(std::span<const MicroTask>(tasks));
    std::mt19937_64 rng(cfg.seed);

    TrainingReport report;
    report.iterations.reserve(cfg.iterations);
    for (int it = 0; it < cfg.iterations; ++it) {
        IterationStats stats = train_step(policy, tasks, cfg, rng);
        stats.iteration = it;
        report.iterations.push_back(stats);
    }
    report.final_policy_fingerprint = policy.fingerprint();
    return TrainingRun{std::move(report), std::move(policy), std::move(tasks)};
}

}  // namespace aspectrl::toy
