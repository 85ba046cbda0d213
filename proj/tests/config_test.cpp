#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <gravopt/config.hpp>

using namespace gravopt;
namespace fs = std::filesystem;

namespace {

class SeedEnv : public ::testing::Test {
protected:
    void SetUp() override { ::unsetenv(seed_env_var); }
    void TearDown() override { ::unsetenv(seed_env_var); }
};

fs::path temp_file(const std::string& name, const std::string& text) {
    const auto dir = fs::temp_directory_path() / ("gravopt_config_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const auto p = dir / name;
    std::ofstream(p) << text;
    return p;
}

}  // namespace

TEST(Config, EmptyFileGivesDefaults) {
    const auto cfg = config_from_toml("");
    EXPECT_EQ(cfg.gsa, GsaConfig{});
    EXPECT_EQ(cfg.gsa.population, 30u);
    EXPECT_EQ(cfg.gsa.max_iterations, 15u);
    EXPECT_EQ(cfg.space, SearchSpace::hyperparameter_default());
    EXPECT_EQ(cfg.objective.type, "toy-trainer");
    EXPECT_FALSE(cfg.file_seed.has_value());
    EXPECT_EQ(cfg.parallelism, 1u);
}

TEST(Config, TomlFullExample) {
    const auto cfg = config_from_toml(R"(
[gsa]
population = 12
max_iterations = 4
g0 = 5.5
g_schedule = "power"
beta = 0.3
kbest_final = 2
seed = 99
parallelism = 3

[space.neurons]
kind = "integer"
lower = 5
upper = 50

[space.alpha]
kind = "continuous"
lower = 0.0
upper = 1.0

[space.batch_size]
kind = "integer"
lower = 1
upper = 8

[objective]
type = "toy-trainer"
retries = 0
strict = true

[objective.toy_trainer]
epochs = 3
lr0 = 0.02
)");
    EXPECT_EQ(cfg.gsa.population, 12u);
    EXPECT_EQ(cfg.gsa.max_iterations, 4u);
    EXPECT_EQ(cfg.gsa.g0, 5.5);
    EXPECT_EQ(cfg.gsa.g_schedule, GSchedule::power);
    EXPECT_EQ(cfg.gsa.beta, 0.3);
    EXPECT_EQ(cfg.gsa.kbest_final, 2u);
    EXPECT_EQ(cfg.file_seed, 99u);
    EXPECT_EQ(cfg.parallelism, 3u);
    ASSERT_EQ(cfg.space.size(), 3u);
    // declaration order, not alphabetical
    EXPECT_EQ(cfg.space[0].name, "neurons");
    EXPECT_EQ(cfg.space[1].name, "alpha");
    EXPECT_EQ(cfg.space[2].name, "batch_size");
    EXPECT_EQ(cfg.space[0].kind, DimensionKind::integer);
    EXPECT_EQ(cfg.failure.retries, 0);
    EXPECT_TRUE(cfg.failure.strict);
    EXPECT_EQ(cfg.objective.toy.epochs, 3);
    EXPECT_EQ(cfg.objective.toy.lr0, 0.02);
}

TEST(Config, JsonEquivalent) {
    const auto path = temp_file("c.json", R"({"gsa": {"population": 7, "seed": 3},
        "space": {"b": {"kind": "integer", "lower": 1, "upper": 4}, "a": {"lower": -1, "upper": 1}},
        "objective": {"type": "benchmark", "function": "rastrigin"}})");
    const auto cfg = load_config(path);
    EXPECT_EQ(cfg.gsa.population, 7u);
    EXPECT_EQ(cfg.file_seed, 3u);
    EXPECT_EQ(cfg.space[0].name, "b");
    EXPECT_EQ(cfg.space[1].kind, DimensionKind::continuous);
    EXPECT_EQ(cfg.objective.function, "rastrigin");
    EXPECT_EQ(make_objective(cfg)->name(), "rastrigin");
}

TEST(Config, External) {
    const auto cfg = config_from_toml(R"(
[objective]
type = "external"
command = ["python3", "worker.py", "--seed", "1"]
timeout = 30
)");
    EXPECT_EQ(cfg.objective.command, (std::vector<std::string>{"python3", "worker.py", "--seed", "1"}));
    EXPECT_EQ(cfg.objective.timeout, 30.0);
    EXPECT_EQ(config_from_toml("[objective]\ntype = \"external\"\ncommand = \"w\"\n").objective.command,
              std::vector<std::string>{"w"});
}

TEST(Config, Rejections) {
    for (const char* text : {
             "[gsa]\npopulaton = 3\n",
             "[extra]\nx = 1\n",
             "[gsa]\npopulation = 0\n",
             "[gsa]\npopulation = -4\n",
             "[gsa]\npopulation = \"ten\"\n",
             "[gsa]\ng_schedule = \"cubic\"\n",
             "[gsa]\nkbest_final = 40\n",
             "[gsa]\nsense = \"maximize\"\n",
             "[space.x]\nkind = \"integer\"\nlower = 0.5\nupper = 3\n",
             "[space.x]\nlower = 3\nupper = 1\n",
             "[space.x]\nlower = 0\n",
             "[space.x]\nlower = 0\nupper = 1\nstep = 2\n",
             "[objective]\ntype = \"external\"\n",
             "[objective]\ntype = \"quantum\"\n",
             "[objective]\ntype = \"benchmark\"\nfunction = \"nosuch\"\n",
             "[objective.toy_trainer]\nlr_drop = 2.0\n",
             "this is = = not toml",
         }) {
        EXPECT_THROW(config_from_toml(text), ConfigError) << text;
    }
    EXPECT_THROW(load_config("/nonexistent/file.toml"), ConfigError);
    EXPECT_THROW(load_config(temp_file("c.yaml", "a: 1")), ConfigError);
    EXPECT_THROW(load_config(temp_file("bad.json", "{")), ConfigError);
}

TEST_F(SeedEnv, Precedence) {
    EXPECT_EQ(resolve_seed(std::nullopt, std::nullopt), default_seed);
    EXPECT_EQ(resolve_seed(std::nullopt, 5), 5u);
    ::setenv(seed_env_var, "77", 1);
    EXPECT_EQ(resolve_seed(std::nullopt, 5), 77u);
    EXPECT_EQ(resolve_seed(std::nullopt, std::nullopt), 77u);
    EXPECT_EQ(resolve_seed(9, 5), 9u);
    ::setenv(seed_env_var, "", 1);
    EXPECT_EQ(resolve_seed(std::nullopt, 5), 5u);
    ::setenv(seed_env_var, "seven", 1);
    EXPECT_THROW(resolve_seed(std::nullopt, 5), ConfigError);
    EXPECT_EQ(resolve_seed(1, 5), 1u);
}

TEST(Config, RoundTrip) {
    const auto cfg = config_from_toml(R"(
[gsa]
population = 9
g0 = 12.25
tau = 1e-8
[space.neurons]
kind = "integer"
lower = 5
upper = 50
[space.rate]
lower = 0.1
upper = 0.9
[objective]
penalty_margin = 3.5
[objective.toy_trainer]
dataset_seed = 7
)");
    const auto json = config_to_json(cfg, 1234);
    const auto back = config_from_json(nlohmann::ordered_json::parse(json.dump()));
    EXPECT_EQ(back.gsa.population, cfg.gsa.population);
    EXPECT_EQ(back.gsa.g0, cfg.gsa.g0);
    EXPECT_EQ(back.gsa.tau, cfg.gsa.tau);
    EXPECT_EQ(back.space, cfg.space);
    EXPECT_EQ(back.objective, cfg.objective);
    EXPECT_EQ(back.failure.penalty_margin, 3.5);
    EXPECT_EQ(back.file_seed, 1234u);
    EXPECT_EQ(config_to_json(back, 1234).dump(), json.dump());
}
