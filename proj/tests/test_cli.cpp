#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "aspectrl/data_io.hpp"
#include "aspectrl/reward.hpp"

using namespace aspectrl;
namespace fs = std::filesystem;

namespace {

const char* kCli = ASPECTRL_CLI_BINARY;

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("aspectrl-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path file(const std::string& name) const { return path / name; }
};

struct CommandResult {
    int exit_code;
    std::string out;
    std::string err;
};

CommandResult run_cli(const std::string& args, const TempDir& dir,
                      const std::string& env_prefix = "") {
    fs::path out_file = dir.file("cmd.out");
    fs::path err_file = dir.file("cmd.err");
    std::string command = env_prefix + (env_prefix.empty() ? "" : " ") + kCli + " " + args +
                          " >" + out_file.string() + " 2>" + err_file.string();
    int status = std::system(command.c_str());
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    int exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return {exit_code, slurp(out_file), slurp(err_file)};
}

void write_absc_fixture(const TempDir& dir) {
    std::vector<GoldRecord> gold;
    gold.push_back({"ex1", "the battery is great", AbscGold{"battery", SentimentLabel::positive}, ""});
    gold.push_back({"ex2", "the screen is dim", AbscGold{"screen", SentimentLabel::negative}, ""});
    io::write_gold(gold, Task::absc, dir.file("gold.jsonl"));

    std::vector<io::GenerationFileRecord> gens;
    gens.push_back({"ex1",
                    {"<think>firstly a therefore b</think><answer>positive</answer>",
                     "<think>plain</think><answer>negative</answer>"}});
    gens.push_back({"ex2", {"<answer>negative</answer>"}});
    io::write_generations(gens, dir.file("gens.jsonl"));
}

}  // namespace

TEST_CASE("cli score matches library scoring item for item") {
    TempDir dir;
    write_absc_fixture(dir);

    auto result = run_cli("score --task absc --lambda 0.2 --gamma 0.05 " +
                              dir.file("gold.jsonl").string() + " " +
                              dir.file("gens.jsonl").string() + " -o " +
                              dir.file("rewards.jsonl").string(),
                          dir);
    REQUIRE(result.exit_code == 0);

    auto gold = io::load_gold(dir.file("gold.jsonl"), Task::absc);
    auto gens = io::load_generations(dir.file("gens.jsonl"));
    auto rewards = io::load_rewards(dir.file("rewards.jsonl"));
    REQUIRE(rewards.size() == 3);

    std::size_t row = 0;
    RewardConfig reward_cfg;
    FormatConfig format_cfg;
    for (std::size_t g = 0; g < gens.size(); ++g) {
        for (std::size_t s = 0; s < gens[g].samples.size(); ++s, ++row) {
            RawGeneration raw{gens[g].samples[s], 0};
            auto expected = score_generation(raw, gold[g], reward_cfg, format_cfg);
            CHECK(rewards[row].id == gens[g].id);
            CHECK(rewards[row].sample_index == static_cast<int>(s));
            CHECK(rewards[row].breakdown.r_total == expected.r_total);
            CHECK(rewards[row].correct == is_correct(raw, gold[g], reward_cfg));
        }
    }
}

TEST_CASE("cli score is byte-reproducible") {
    TempDir dir;
    write_absc_fixture(dir);
    std::string base = "score --task absc " + dir.file("gold.jsonl").string() + " " +
                       dir.file("gens.jsonl").string() + " -o ";
    REQUIRE(run_cli(base + dir.file("a.jsonl").string(), dir).exit_code == 0);
    REQUIRE(run_cli(base + dir.file("b.jsonl").string(), dir).exit_code == 0);

    std::ifstream a(dir.file("a.jsonl")), b(dir.file("b.jsonl"));
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK_FALSE(sa.str().empty());
}

TEST_CASE("cli filter writes retained generations plus stats") {
    TempDir dir;
    write_absc_fixture(dir);
    auto result = run_cli("filter --task absc " + dir.file("gold.jsonl").string() + " " +
                              dir.file("gens.jsonl").string() + " -o " +
                              dir.file("retained.jsonl").string() + " --stats " +
                              dir.file("stats.json").string(),
                          dir);
    REQUIRE(result.exit_code == 0);

    auto retained = io::load_generations(dir.file("retained.jsonl"));
    // ex1 keeps only its incorrect second sample; ex2's generation is correct,
    // so the whole group disappears.
    REQUIRE(retained.size() == 1);
    CHECK(retained[0].id == "ex1");
    REQUIRE(retained[0].samples.size() == 1);
    CHECK(retained[0].samples[0].find("negative") != std::string::npos);

    std::ifstream stats_in(dir.file("stats.json"));
    std::stringstream stats;
    stats << stats_in.rdbuf();
    CHECK(stats.str().find("\"skipped_groups\":1") != std::string::npos);
}

TEST_CASE("cli evaluate prints metrics") {
    TempDir dir;
    write_absc_fixture(dir);
    std::vector<io::PredictionRecord> preds = {{"ex1", "positive"}, {"ex2", "positive"}};
    io::write_predictions(preds, dir.file("preds.jsonl"));

    auto result = run_cli("evaluate --task absc " + dir.file("gold.jsonl").string() + " " +
                              dir.file("preds.jsonl").string(),
                          dir);
    REQUIRE(result.exit_code == 0);
    CHECK(result.out.find("accuracy  0.500000") != std::string::npos);
    CHECK(result.out.find("macro_f1") != std::string::npos);

    SUBCASE("csv form") {
        auto csv = run_cli("evaluate --csv --task absc " + dir.file("gold.jsonl").string() +
                               " " + dir.file("preds.jsonl").string(),
                           dir);
        REQUIRE(csv.exit_code == 0);
        CHECK(csv.out.find("accuracy,0.500000") != std::string::npos);
    }
}

TEST_CASE("cli error contract: nonzero exit and a single-line diagnostic") {
    TempDir dir;
    write_absc_fixture(dir);

    SUBCASE("lambda out of range") {
        auto result = run_cli("score --task absc --lambda 1.5 " +
                                  dir.file("gold.jsonl").string() + " " +
                                  dir.file("gens.jsonl").string(),
                              dir);
        CHECK(result.exit_code == 2);
        CHECK(result.err.find("lambda out of range") != std::string::npos);
        CHECK(std::count(result.err.begin(), result.err.end(), '\n') == 1);
    }
    SUBCASE("unknown flag") {
        auto result = run_cli("score --task absc --bogus 1 x y", dir);
        CHECK(result.exit_code == 2);
        CHECK_FALSE(result.err.empty());
    }
    SUBCASE("missing file") {
        auto result = run_cli("score --task absc /nonexistent/gold.jsonl /nonexistent/gens.jsonl",
                              dir);
        CHECK(result.exit_code == 1);
        CHECK(result.err.find("error:") != std::string::npos);
    }
    SUBCASE("unknown task") {
        auto result = run_cli("score --task quad " + dir.file("gold.jsonl").string() + " " +
                                  dir.file("gens.jsonl").string(),
                              dir);
        CHECK(result.exit_code == 2);
        CHECK(result.err.find("unknown task") != std::string::npos);
    }
    SUBCASE("malformed bind address from the environment") {
        auto result = run_cli("serve", dir, "ASPECTRL_BIND=nonsense");
        CHECK(result.exit_code == 2);
        CHECK(result.err.find("host:port") != std::string::npos);
    }
}

TEST_CASE("cli train-toy with a seed is reproducible byte for byte") {
    TempDir dir;
    std::string base = "train-toy --iterations 8 --task-count 4 --seed 11 -o ";
    auto r1 = run_cli(base + dir.file("r1.jsonl").string(), dir);
    auto r2 = run_cli(base + dir.file("r2.jsonl").string(), dir);
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);

    std::ifstream a(dir.file("r1.jsonl")), b(dir.file("r2.jsonl"));
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK_FALSE(sa.str().empty());
}

TEST_CASE("cli config file values are overridden by flags") {
    TempDir dir;
    write_absc_fixture(dir);
    {
        std::ofstream cfg(dir.file("config.json"));
        cfg << R"({"lambda":0.9,"gamma":0.2})";
    }
    // Config alone applies lambda 0.9; the flag wins when both are given.
    auto with_flag = run_cli("score --task absc --config " + dir.file("config.json").string() +
                                 " --lambda 0.2 " + dir.file("gold.jsonl").string() + " " +
                                 dir.file("gens.jsonl").string() + " -o " +
                                 dir.file("flag.jsonl").string(),
                             dir);
    REQUIRE(with_flag.exit_code == 0);
    std::ifstream in(dir.file("flag.jsonl"));
    std::string header;
    std::getline(in, header);
    CHECK(header.find("\"lambda\":0.2") != std::string::npos);
    CHECK(header.find("\"gamma\":0.2") != std::string::npos);
}
