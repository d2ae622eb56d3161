#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"

using namespace cocycle_forge;
using namespace cocycle_forge::cli;

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::path(CF_SCRATCH) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run(const std::string& cmd, const Json& config, const fs::path& out, unsigned threads = 1) {
    std::ostringstream log;
    const int code = run_command(cmd, config_from_json(config), RunOptions{out.string(), threads}, log);
    if (code != kOk) std::cerr << log.str();
    return code;
}

int run_binary(const std::string& args) {
    const int status = std::system((std::string(CF_BINARY) + " " + args + " 2>/dev/null").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, DefaultsAreWrittenBack) {
    const ExperimentConfig c = config_from_json(Json{{"n_points", 20}, {"seed", 5}});
    const Json j = to_json(c);
    EXPECT_EQ(j.at("n_points").get<std::size_t>(), 20u);
    EXPECT_EQ(j.at("seed").get<std::uint64_t>(), 5u);
    EXPECT_EQ(j.at("delta").get<double>(), 0.05);
    EXPECT_EQ(j.at("cocycle").get<std::string>(), "elliptic-island");
    EXPECT_TRUE(c.seed_given);
    // resolved config parses back to itself
    EXPECT_EQ(to_json(config_from_json(j)), j);
}

TEST(Config, Rejections) {
    EXPECT_THROW(config_from_json(Json{{"n_pointz", 20}}), ConfigError);
    EXPECT_THROW(config_from_json(Json{{"delta", "small"}}), ConfigError);
    EXPECT_THROW(config_from_json(Json{{"base", "torus"}}), ConfigError);
    EXPECT_THROW(config_from_json(Json{{"matrix", {1, 0, 0}}}), ConfigError);
    EXPECT_THROW(config_from_json(Json{{"nested", {{"a", 1}}}}), ConfigError);
    EXPECT_THROW(config_from_json(Json::array()), ConfigError);
}

TEST(Commands, LeOfConstantDiagonal) {
    const fs::path out = scratch("le_diag");
    ASSERT_EQ(run("le", {{"n_points", 8}, {"cocycle", "constant"}, {"matrix", {2, 0, 0, 0.5}}}, out), kOk);
    const Json r = read_json_file((out / "report.json").string());
    EXPECT_NEAR(r["exponent"]["le"].get<double>(), std::log(2.0), 1e-14);
    EXPECT_EQ(r["command"], "le");
    EXPECT_EQ(r["config"]["n_max"], 64);
    const std::string csv = slurp(out / "le_vs_n.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,a_n_over_n,running_inf");
    EXPECT_NE(csv.find("\n1,0.69314718056,0.69314718056\n"), std::string::npos);
}

TEST(Commands, DichotomyVerdicts) {
    const fs::path out = scratch("dichotomy");
    ASSERT_EQ(run("dichotomy", {{"n_points", 10}, {"cocycle", "rotation"}, {"theta", 0.7}}, out), kOk);
    EXPECT_EQ(read_json_file((out / "verdict.json").string())["verdict"]["verdict"], "ZERO");
    ASSERT_EQ(run("dichotomy", {{"n_points", 10}, {"cocycle", "constant"}}, out), kOk);
    EXPECT_EQ(read_json_file((out / "verdict.json").string())["verdict"]["verdict"], "UNIFORM");
    ASSERT_EQ(run("dichotomy", {{"n_points", 400}, {"seed", 7}},
                  out),
              kOk);
    EXPECT_EQ(read_json_file((out / "verdict.json").string())["verdict"]["verdict"], "PERTURBABLE");
}

TEST(Commands, CastleWorkedExample) {
    const fs::path out = scratch("castle");
    ASSERT_EQ(run("castle", {{"n_points", 10}, {"horizon", 3}}, out), kOk);
    const Json r = read_json_file((out / "castle.json").string());
    EXPECT_EQ(r["base_points"], Json({0, 3, 6}));
    EXPECT_TRUE(r["maximal"].get<bool>());
    EXPECT_EQ(slurp(out / "tower_heights.csv"), "height,towers,points\n3,2,6\n4,1,4\n");
}

TEST(Commands, ExitCodes) {
    const fs::path out = scratch("exit_codes");
    // a cycle shorter than 3H
    EXPECT_EQ(run("castle", {{"n_points", 8}, {"horizon", 3}}, out), kInfeasible);
    // sampled cocycle without a seed
    EXPECT_EQ(run("dichotomy", {{"n_points", 100}}, out), kConfigError);
    EXPECT_EQ(run("frobnicate", Json::object(), out), kConfigError);
    // a single cycle leaves nothing to demonstrate
    EXPECT_EQ(run("demo-discontinuity", {{"n_points", 10}, {"cocycle", "diagonal-h"}}, out), kConfigError);
    // 2-cycles make the castle step impossible
    std::vector<Mat2> v(400);
    for (std::size_t i = 0; i < 400; ++i) v[i] = i % 2 ? rotation(1.0) : Mat2::diag(3.0, 1.0 / 3.0);
    const std::string file = (out / "short.json").string();
    write_json_file(file, json_of(Cocycle(v), FiniteBase::cyclic(400, 200)));
    EXPECT_EQ(run("perturb", {{"cocycle", "file"}, {"cocycle_file", file}, {"m", 4}, {"epsilon", 0.5}}, out),
              kInfeasible);
    EXPECT_TRUE(fs::exists(out / "report.json"));
}

TEST(Binary, ExitCodesAndSeedFlag) {
    const fs::path out = scratch("binary_codes");
    const fs::path cfg = out / "c.json";
    write_json_file(cfg.string(), Json{{"n_points", 50}});
    EXPECT_EQ(run_binary("dichotomy --config " + cfg.string() + " --out " + out.string()), kConfigError);
    EXPECT_EQ(run_binary("dichotomy --config " + cfg.string() + " --out " + out.string() + " --seed 3"), kOk);
    EXPECT_EQ(read_json_file((out / "verdict.json").string())["config"]["seed"], 3);
    EXPECT_EQ(run_binary("dichotomy --config " + (out / "missing.json").string()), kConfigError);
    EXPECT_EQ(run_binary("le"), kConfigError);
    EXPECT_EQ(run_binary("dichotomy --config " + cfg.string() + " --seed 3 --threads 0"), kConfigError);
}

TEST(Binary, ByteIdenticalAcrossThreadCounts) {
    const fs::path root = scratch("threads");
    const fs::path cfg = root / "perturb.json";
    write_json_file(cfg.string(), Json{{"n_points", 2000}, {"seed", 4}, {"island_block", 8}, {"island_rotations", 4},
                                       {"island_hyperbolic", 3.0}, {"m", 4}, {"epsilon", 0.5}, {"delta", 0.3},
                                       {"lusin", true}, {"lusin_samples", 32}});
    const fs::path le_cfg = root / "le.json";
    write_json_file(le_cfg.string(), Json{{"n_points", 600}, {"seed", 2}, {"cocycle", "random"}});
    for (const char* cmd : {"perturb", "le", "dichotomy"}) {
        const fs::path& c = std::string(cmd) == "perturb" ? cfg : le_cfg;
        std::vector<std::string> reports;
        for (unsigned t : {1u, 2u, 8u}) {
            const fs::path out = root / (std::string(cmd) + std::to_string(t));
            ASSERT_EQ(run_binary(std::string(cmd) + " --config " + c.string() + " --out " + out.string() +
                                 " --threads " + std::to_string(t)),
                      kOk)
                << cmd << " threads " << t;
            std::string all;
            for (const auto& e : fs::directory_iterator(out)) all += e.path().filename().string() + slurp(e.path());
            reports.push_back(all);
        }
        EXPECT_EQ(reports[0], reports[1]) << cmd;
        EXPECT_EQ(reports[0], reports[2]) << cmd;
    }
}

TEST(Binary, ThreadsFromEnvironment) {
    const fs::path out = scratch("env_threads");
    const fs::path cfg = out / "c.json";
    write_json_file(cfg.string(), Json{{"n_points", 50}, {"cocycle", "rotation"}});
    ASSERT_EQ(setenv("COCYCLE_FORGE_THREADS", "abc", 1), 0);
    EXPECT_EQ(run_binary("le --config " + cfg.string() + " --out " + out.string()), kConfigError);
    ASSERT_EQ(setenv("COCYCLE_FORGE_THREADS", "3", 1), 0);
    EXPECT_EQ(run_binary("le --config " + cfg.string() + " --out " + out.string()), kOk);
    unsetenv("COCYCLE_FORGE_THREADS");
}
