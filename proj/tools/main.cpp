#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aspectrl/data_io.hpp"
#include "aspectrl/eval.hpp"
#include "aspectrl/rejection.hpp"
#include "aspectrl/reward.hpp"
#include "aspectrl/service.hpp"
#include "aspectrl/toy_lab.hpp"
#include "aspectrl/version.hpp"

namespace {

using namespace aspectrl;

struct CommonFlags {
    std::string task_name;
    std::optional<double> lambda, gamma, tau;
    std::optional<double> eps_low, eps_high, eps_std;
    std::optional<std::string> advantage_mode;
    std::optional<std::uint64_t> seed;
    std::string config_path;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags, bool with_task) {
    if (with_task) {
        cmd->add_option("--task", flags.task_name, "Task kind: absc or aoste")->required();
    }
    cmd->add_option("--lambda", flags.lambda, "Format weight in the combined reward");
    cmd->add_option("--gamma", flags.gamma, "|FN-FP| penalty scale");
    cmd->add_option("--tau", flags.tau, "F1 threshold of the correctness test");
    cmd->add_option("--eps-low", flags.eps_low, "Lower clip epsilon");
    cmd->add_option("--eps-high", flags.eps_high, "Upper clip epsilon");
    cmd->add_option("--eps-std", flags.eps_std, "Advantage denominator guard");
    cmd->add_option("--advantage-mode", flags.advantage_mode,
                    "Advantage normalization: full-group or retained-only");
    cmd->add_option("--seed", flags.seed, "RNG seed");
    cmd->add_option("--config", flags.config_path,
                    "JSON config file; command-line flags override its values");
}

struct EffectiveConfig {
    RewardConfig reward;
    FormatConfig format;
    grpo::ClipConfig clip;
    grpo::AdvantageConfig advantage;
    AdvantageMode advantage_mode = AdvantageMode::full_group;
    std::uint64_t seed = 42;
    std::optional<double> learning_rate;
    std::optional<int> iterations, group_size, task_count;
};

AdvantageMode parse_advantage_mode(const std::string& text) {
    if (text == "full-group") return AdvantageMode::full_group;
    if (text == "retained-only") return AdvantageMode::retained_only;
    throw std::invalid_argument("advantage-mode must be full-group or retained-only");
}

// Config file first, then flags on top.
EffectiveConfig resolve_config(const CommonFlags& flags) {
    EffectiveConfig cfg;
    if (!flags.config_path.empty()) {
        io::ConfigOverrides file = io::load_config(flags.config_path);
        if (file.lambda) cfg.reward.lambda = *file.lambda;
        if (file.gamma) cfg.reward.gamma = *file.gamma;
        if (file.tau) cfg.reward.tau = *file.tau;
        if (file.epsilon_low) cfg.clip.epsilon_low = *file.epsilon_low;
        if (file.epsilon_high) cfg.clip.epsilon_high = *file.epsilon_high;
        if (file.epsilon_std) cfg.advantage.epsilon_std = *file.epsilon_std;
        if (file.advantage_mode) cfg.advantage_mode = parse_advantage_mode(*file.advantage_mode);
        if (file.seed) cfg.seed = *file.seed;
        if (file.learning_rate) cfg.learning_rate = *file.learning_rate;
        if (file.iterations) cfg.iterations = *file.iterations;
        if (file.group_size) cfg.group_size = *file.group_size;
        if (file.task_count) cfg.task_count = *file.task_count;
        if (file.flow_saturation) cfg.format.flow_saturation_count = *file.flow_saturation;
        if (file.format_weights) {
            if (file.format_weights->size() != 3) {
                throw std::invalid_argument("format_weights must have three entries");
            }
            cfg.format.w_tag = (*file.format_weights)[0];
            cfg.format.w_flow = (*file.format_weights)[1];
            cfg.format.w_struct = (*file.format_weights)[2];
        }
    }
    if (flags.lambda) cfg.reward.lambda = *flags.lambda;
    if (flags.gamma) cfg.reward.gamma = *flags.gamma;
    if (flags.tau) cfg.reward.tau = *flags.tau;
    if (flags.eps_low) cfg.clip.epsilon_low = *flags.eps_low;
    if (flags.eps_high) cfg.clip.epsilon_high = *flags.eps_high;
    if (flags.eps_std) cfg.advantage.epsilon_std = *flags.eps_std;
    if (flags.advantage_mode) cfg.advantage_mode = parse_advantage_mode(*flags.advantage_mode);
    if (flags.seed) cfg.seed = *flags.seed;

    cfg.reward.validate();
    cfg.format.validate();
    cfg.clip.validate();
    cfg.advantage.validate();
    return cfg;
}

Task resolve_task(const std::string& name) {
    auto task = task_from_string(name);
    if (!task) throw std::invalid_argument("unknown task '" + name + "'");
    return *task;
}

std::map<std::string, const GoldRecord*> index_gold(const std::vector<GoldRecord>& golds) {
    std::map<std::string, const GoldRecord*> index;
    for (const GoldRecord& gold : golds) index[gold.id] = &gold;
    return index;
}

void write_text(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error(out_path + ": cannot open for writing");
    out << content;
}

int run_score(const CommonFlags& flags, const std::string& gold_path,
              const std::string& gens_path, const std::string& out_path) {
    EffectiveConfig cfg = resolve_config(flags);
    Task task = resolve_task(flags.task_name);
    std::vector<GoldRecord> golds = io::load_gold(gold_path, task);
    auto gold_index = index_gold(golds);

    std::vector<io::RewardFileRecord> records;
    for (const io::GenerationFileRecord& gen : io::load_generations(gens_path)) {
        auto it = gold_index.find(gen.id);
        if (it == gold_index.end()) {
            throw std::runtime_error("generations reference unknown id '" + gen.id + "'");
        }
        for (std::size_t i = 0; i < gen.samples.size(); ++i) {
            RawGeneration raw{gen.samples[i], 0};
            io::RewardFileRecord record;
            record.id = gen.id;
            record.sample_index = static_cast<int>(i);
            record.breakdown = score_generation(raw, *it->second, cfg.reward, cfg.format);
            record.correct = is_correct(raw, *it->second, cfg.reward);
            records.push_back(std::move(record));
        }
    }
    io::write_rewards(records, task, cfg.reward, out_path.empty() ? "/dev/stdout" : out_path);
    return 0;
}

int run_filter(const CommonFlags& flags, const std::string& gold_path,
               const std::string& gens_path, const std::string& out_path,
               const std::string& stats_path) {
    EffectiveConfig cfg = resolve_config(flags);
    Task task = resolve_task(flags.task_name);
    std::vector<GoldRecord> golds = io::load_gold(gold_path, task);
    auto gold_index = index_gold(golds);

    BatchStats stats;
    std::vector<io::GenerationFileRecord> retained_records;
    std::vector<double> all_rewards;
    for (const io::GenerationFileRecord& gen : io::load_generations(gens_path)) {
        auto it = gold_index.find(gen.id);
        if (it == gold_index.end()) {
            throw std::runtime_error("generations reference unknown id '" + gen.id + "'");
        }
        GenerationGroup group;
        group.input_id = gen.id;
        group.gold = *it->second;
        for (const std::string& sample : gen.samples) {
            group.generations.push_back(RawGeneration{sample, 0});
            all_rewards.push_back(
                score_generation({sample, 0}, *it->second, cfg.reward, cfg.format).r_total);
        }
        FilteredGroup filtered = filter_group(group, cfg.reward);

        ++stats.group_count;
        stats.total_generations += static_cast<int>(gen.samples.size());
        stats.retained_sequences += static_cast<int>(filtered.retained_indices.size());
        stats.correct_generations += static_cast<int>(gen.samples.size()) -
                                     static_cast<int>(filtered.retained_indices.size());
        stats.per_group_retained.push_back(static_cast<int>(filtered.retained_indices.size()));
        if (filtered.all_correct) {
            ++stats.skipped_groups;
            continue;
        }
        io::GenerationFileRecord retained;
        retained.id = gen.id;
        for (int idx : filtered.retained_indices) retained.samples.push_back(gen.samples[idx]);
        retained_records.push_back(std::move(retained));
    }
    if (stats.total_generations > 0) {
        stats.correct_fraction =
            static_cast<double>(stats.correct_generations) / stats.total_generations;
        stats.retention_fraction =
            static_cast<double>(stats.retained_sequences) / stats.total_generations;
        double sum = 0.0;
        for (double r : all_rewards) sum += r;
        stats.reward_mean = sum / all_rewards.size();
        double var = 0.0;
        for (double r : all_rewards) var += (r - stats.reward_mean) * (r - stats.reward_mean);
        stats.reward_std = std::sqrt(var / all_rewards.size());
    }

    io::write_generations(retained_records, out_path.empty() ? "/dev/stdout" : out_path);
    std::string stats_json = io::batch_stats_to_json(stats) + "\n";
    if (stats_path.empty()) {
        std::cout << stats_json;
    } else {
        write_text(stats_path, stats_json);
    }
    return 0;
}

int run_evaluate(const CommonFlags& flags, const std::string& gold_path,
                 const std::string& preds_path, bool csv, const std::string& out_path) {
    EffectiveConfig cfg = resolve_config(flags);
    (void)cfg;
    Task task = resolve_task(flags.task_name);
    std::vector<GoldRecord> golds = io::load_gold(gold_path, task);
    std::vector<io::PredictionRecord> preds = io::load_predictions(preds_path);

    std::map<std::string, const io::PredictionRecord*> pred_index;
    for (const io::PredictionRecord& pred : preds) pred_index[pred.id] = &pred;
    if (preds.size() != golds.size()) {
        throw std::runtime_error("predictions and gold records do not cover the same ids");
    }

    // A prediction may be a full trace (tags present) or a bare answer body.
    auto answer_text = [](const std::string& prediction) -> std::string {
        if (prediction.find(std::string(kAnswerOpenTag)) != std::string::npos) {
            return parse_trace(RawGeneration{prediction, 0}).answer_text;
        }
        return prediction;
    };

    std::string rendered;
    if (task == Task::absc) {
        std::vector<std::pair<std::optional<SentimentLabel>, SentimentLabel>> pairs;
        for (const GoldRecord& gold : golds) {
            auto it = pred_index.find(gold.id);
            if (it == pred_index.end()) {
                throw std::runtime_error("no prediction for id '" + gold.id + "'");
            }
            pairs.emplace_back(parse_answer_absc(answer_text(it->second->prediction)),
                               gold.absc().label);
        }
        eval::AbscMetrics metrics = eval::evaluate_absc(pairs);
        rendered = csv ? eval::to_csv(metrics) : eval::to_text(metrics);
    } else {
        std::vector<std::pair<TripletSet, TripletSet>> pairs;
        for (const GoldRecord& gold : golds) {
            auto it = pred_index.find(gold.id);
            if (it == pred_index.end()) {
                throw std::runtime_error("no prediction for id '" + gold.id + "'");
            }
            auto parsed = parse_answer_aoste(answer_text(it->second->prediction));
            pairs.emplace_back(parsed ? parsed->triplets : TripletSet{},
                               gold.aoste().triplets);
        }
        eval::AosteMetrics metrics = eval::evaluate_aoste(pairs);
        rendered = csv ? eval::to_csv(metrics) : eval::to_text(metrics);
    }
    write_text(out_path, rendered);
    return 0;
}

int run_train_toy(const CommonFlags& flags, std::optional<double> lr_flag,
                  std::optional<int> iterations_flag, std::optional<int> group_flag,
                  std::optional<int> tasks_flag, std::optional<int> inner_flag,
                  const std::string& retention_name, const std::string& out_path) {
    EffectiveConfig cfg = resolve_config(flags);

    toy::TrainConfig train;
    train.reward = cfg.reward;
    train.format = cfg.format;
    train.clip = cfg.clip;
    train.advantage = cfg.advantage;
    train.advantage_mode = cfg.advantage_mode;
    train.seed = cfg.seed;
    if (cfg.learning_rate) train.learning_rate = *cfg.learning_rate;
    if (cfg.iterations) train.iterations = *cfg.iterations;
    if (cfg.group_size) train.group_size = *cfg.group_size;
    if (cfg.task_count) train.task_count = *cfg.task_count;
    if (lr_flag) train.learning_rate = *lr_flag;
    if (iterations_flag) train.iterations = *iterations_flag;
    if (group_flag) train.group_size = *group_flag;
    if (tasks_flag) train.task_count = *tasks_flag;
    if (inner_flag) train.inner_updates = *inner_flag;
    if (retention_name == "keep-all") {
        train.retention = RetentionPolicy::keep_all;
    } else if (!retention_name.empty() && retention_name != "drop-correct") {
        throw std::invalid_argument("retention must be drop-correct or keep-all");
    }
    train.validate();

    toy::TrainingRun run = toy::run_training(train);
    if (!out_path.empty()) io::write_training_report(run.report, out_path);

    const toy::IterationStats& last = run.report.iterations.back();
    std::cout << "iterations=" << run.report.iterations.size()
              << " final_mean_reward=" << last.mean_reward
              << " final_correct_fraction=" << last.correct_fraction
              << " final_retention_fraction=" << last.retention_fraction << "\n";
    return 0;
}

int run_serve(const CommonFlags& flags, std::string bind, int threads,
              std::size_t max_body) {
    EffectiveConfig cfg = resolve_config(flags);

    if (bind.empty()) {
        if (const char* env = std::getenv("ASPECTRL_BIND")) bind = env;
    }
    service::ServiceOptions options;
    options.reward = cfg.reward;
    options.format = cfg.format;
    options.worker_threads = threads;
    options.max_body_bytes = max_body;
    if (!bind.empty()) {
        std::size_t colon = bind.rfind(':');
        if (colon == std::string::npos) {
            throw std::invalid_argument("bind address must be host:port");
        }
        options.host = bind.substr(0, colon);
        options.port = std::stoi(bind.substr(colon + 1));
    }

    service::RewardServer server(options);
    int port = server.start();
    std::cout << "listening on " << options.host << ":" << port << "\n";
    server.run();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sentiment-aware reward scoring, rejection sampling, and toy GRPO training"};
    app.require_subcommand(1);
    app.set_version_flag("--version", aspectrl::kVersion);

    CommonFlags score_flags, filter_flags, eval_flags, train_flags, serve_flags;
    std::string gold_path, gens_path, preds_path, out_path, stats_path;

    CLI::App* score = app.add_subcommand("score", "Score generations against gold records");
    add_common_flags(score, score_flags, true);
    score->add_option("gold", gold_path, "Gold JSONL file")->required();
    score->add_option("generations", gens_path, "Generations JSONL file")->required();
    score->add_option("-o,--output", out_path, "Reward JSONL output (default stdout)");

    std::string filter_gold, filter_gens, filter_out, filter_stats;
    CLI::App* filter = app.add_subcommand("filter", "Retain only incorrect generations");
    add_common_flags(filter, filter_flags, true);
    filter->add_option("gold", filter_gold, "Gold JSONL file")->required();
    filter->add_option("generations", filter_gens, "Generations JSONL file")->required();
    filter->add_option("-o,--output", filter_out, "Retained generations output");
    filter->add_option("--stats", filter_stats, "Filter stats JSON output (default stdout)");

    std::string eval_gold, eval_preds, eval_out;
    bool eval_csv = false;
    CLI::App* evaluate = app.add_subcommand("evaluate", "Corpus metrics for predictions");
    add_common_flags(evaluate, eval_flags, true);
    evaluate->add_option("gold", eval_gold, "Gold JSONL file")->required();
    evaluate->add_option("predictions", eval_preds, "Predictions JSONL file")->required();
    evaluate->add_flag("--csv", eval_csv, "Emit CSV instead of aligned text");
    evaluate->add_option("-o,--output", eval_out, "Output file (default stdout)");

    std::optional<double> train_lr;
    std::optional<int> train_iterations, train_group, train_tasks, train_inner;
    std::string train_retention, train_out;
    CLI::App* train = app.add_subcommand("train-toy", "Train the tabular toy policy");
    add_common_flags(train, train_flags, false);
    train->add_option("--learning-rate", train_lr, "Ascent step size");
    train->add_option("--iterations", train_iterations, "Training iterations");
    train->add_option("--group-size", train_group, "Samples per input (G)");
    train->add_option("--task-count", train_tasks, "Number of micro-tasks");
    train->add_option("--inner-updates", train_inner, "Updates per sampled batch");
    train->add_option("--retention", train_retention,
                      "drop-correct (default) or keep-all (disables rejection sampling)");
    train->add_option("-o,--output", train_out, "Training report JSONL output");

    std::string serve_bind;
    int serve_threads = 8;
    std::size_t serve_max_body = 8 * 1024 * 1024;
    CLI::App* serve = app.add_subcommand("serve", "Run the JSON-over-HTTP scoring service");
    add_common_flags(serve, serve_flags, false);
    serve->add_option("--bind", serve_bind, "host:port (or env ASPECTRL_BIND)");
    serve->add_option("--threads", serve_threads, "Worker pool size");
    serve->add_option("--max-body-bytes", serve_max_body, "Request body size limit");

    try {
        app.parse(argc, argv);
        if (score->parsed()) return run_score(score_flags, gold_path, gens_path, out_path);
        if (filter->parsed()) {
            return run_filter(filter_flags, filter_gold, filter_gens, filter_out, filter_stats);
        }
        if (evaluate->parsed()) {
            return run_evaluate(eval_flags, eval_gold, eval_preds, eval_csv, eval_out);
        }
        if (train->parsed()) {
            return run_train_toy(train_flags, train_lr, train_iterations, train_group,
                                 train_tasks, train_inner, train_retention, train_out);
        }
        if (serve->parsed()) {
            return run_serve(serve_flags, serve_bind, serve_threads, serve_max_body);
        }
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
