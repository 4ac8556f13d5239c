#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "deepiot/commands.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("deepiot_cli_" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("fit-surface emits the expected grid") {
    TempDir tmp;
    const std::string out = tmp.file("fit.csv");
    REQUIRE(deepiot::run_cli({"fit-surface", "--out", out, "--fb-min", "5", "--fb-max", "20", "--fb-steps", "4",
                              "--a-min", "1", "--a-max", "4"}) == 0);
    const auto rows = lines_of(slurp(out));
    REQUIRE(rows.size() == 1 + 4 * 4);
    CHECK(rows[0] == "eta_fb_db,a,eta_req_db");
    // the (20, 1) grid point sits at the frozen hand value
    CHECK(rows[4] == "20,1,-0.626285837");
    // the (5, 4) point likewise
    CHECK(rows[13] == "5,4,-0.772171969");
}

TEST_CASE("fit-surface supports the alternate constant set") {
    TempDir tmp;
    const std::string out = tmp.file("fit2.csv");
    REQUIRE(deepiot::run_cli({"fit-surface", "--out", out, "--fit", "k36r14", "--fb-min", "20", "--fb-max", "20",
                              "--fb-steps", "1", "--a-min", "1", "--a-max", "1"}) == 0);
    const auto rows = lines_of(slurp(out));
    REQUIRE(rows.size() == 2);
    // floor of the alternate set is -1.8; the value must sit inside (floor, floor + 1/u4)
    std::stringstream ss(rows[1]);
    std::string fb, a, eta;
    std::getline(ss, fb, ',');
    std::getline(ss, a, ',');
    std::getline(ss, eta, ',');
    const double v = std::stod(eta);
    CHECK(v > -1.8);
    CHECK(v < -1.8 + 1.0 / 0.085);
}

TEST_CASE("power command is deterministic and internally consistent") {
    TempDir tmp;
    const std::string out1 = tmp.file("p1.csv");
    const std::string out2 = tmp.file("p2.csv");
    const std::vector<std::string> base = {"power", "--preset", "calibrated", "--samples", "20000",
                                           "--a-max", "2", "--seed", "9"};
    auto run1 = base;
    run1.insert(run1.end(), {"--out", out1});
    auto run2 = base;
    run2.insert(run2.end(), {"--out", out2});
    REQUIRE(deepiot::run_cli(run1) == 0);
    REQUIRE(deepiot::run_cli(run2) == 0);
    CHECK(slurp(out1) == slurp(out2)); // byte-identical under the same seed

    const std::string out3 = tmp.file("p3.csv");
    std::vector<std::string> other = {"power", "--preset", "calibrated", "--samples", "20000",
                                      "--a-max", "2", "--seed", "10", "--out", out3};
    REQUIRE(deepiot::run_cli(other) == 0);
    CHECK(slurp(out3) != slurp(out1)); // the seed drives the Monte-Carlo column

    const auto rows = lines_of(slurp(out1));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "a,analytic_mean_power,mc_mean_power,mc_std_error,reduction_vs_polar_pct,reduction_vs_turbo_pct");
}

TEST_CASE("lifespan command evaluates baselines") {
    TempDir tmp;
    const std::string out = tmp.file("life.csv");
    const std::string per = tmp.file("per.csv");
    REQUIRE(deepiot::run_cli({"lifespan", "--preset", "calibrated", "-L", "2", "-M", "2", "--episodes", "40",
                              "--seed", "3", "--policy", "nofeedback_turbo", "--policy", "uniform", "--out", out,
                              "--per-episode", per}) == 0);
    const auto rows = lines_of(slurp(out));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "policy,L,episodes,mean_lifespan,ci95_lo,ci95_hi");
    CHECK(rows[1].substr(0, 17) == "nofeedback_turbo,");
    const auto per_rows = lines_of(slurp(per));
    CHECK(per_rows.size() == 1 + 2 * 40);
}

TEST_CASE("config files override presets") {
    TempDir tmp;
    const std::string cfg_path = tmp.file("cfg.json");
    {
        std::ofstream out(cfg_path);
        out << R"({"preset": "calibrated", "L": 1, "M": 2, "rho": 50.0})";
    }
    const std::string out = tmp.file("life.csv");
    REQUIRE(deepiot::run_cli({"lifespan", "--config", cfg_path, "--episodes", "30", "--seed", "4",
                              "--policy", "nofeedback_turbo", "--out", out}) == 0);
    const auto rows = lines_of(slurp(out));
    REQUIRE(rows.size() == 2);
    // rho 50 at the calibrated drain of ~8.5 per cycle lives for ~6 cycles
    std::stringstream ss(rows[1]);
    std::string cell;
    std::getline(ss, cell, ','); // policy
    std::getline(ss, cell, ','); // L
    CHECK(cell == "1");
    std::getline(ss, cell, ','); // episodes
    std::getline(ss, cell, ','); // mean
    const double mean = std::stod(cell);
    CHECK(mean > 2.0);
    CHECK(mean < 12.0);
}

TEST_CASE("train writes checkpoints the evaluator can load") {
    TempDir tmp;
    const std::string prefix = tmp.file("run");
    REQUIRE(deepiot::run_cli({"train", "--algo", "itpg", "--preset", "calibrated", "-L", "2", "-M", "2",
                              "--episodes", "40", "--seed", "6", "--out-prefix", prefix}) == 0);
    CHECK(fs::exists(prefix + ".net"));
    CHECK(fs::exists(prefix + "_log.csv"));
    CHECK(fs::exists(prefix + "_options.json"));

    const std::string out = tmp.file("itpg_life.csv");
    REQUIRE(deepiot::run_cli({"lifespan", "--preset", "calibrated", "-L", "2", "-M", "2", "--episodes", "20",
                              "--seed", "7", "--policy", "itpg", "--checkpoint", prefix + ".net", "--out",
                              out}) == 0);
    CHECK(lines_of(slurp(out)).size() == 2);

    SUBCASE("evaluation without a checkpoint is an error") {
        CHECK(deepiot::run_cli({"lifespan", "--preset", "calibrated", "-L", "2", "-M", "2", "--episodes", "5",
                                "--seed", "7", "--policy", "itpg", "--out", out}) != 0);
    }
}

TEST_CASE("energy-trace runs to full depletion") {
    TempDir tmp;
    const std::string out = tmp.file("trace.csv");
    REQUIRE(deepiot::run_cli({"energy-trace", "--preset", "calibrated", "-L", "2", "-M", "2", "--runs", "2",
                              "--seed", "8", "--policy", "uniform", "--out", out}) == 0);
    const auto rows = lines_of(slurp(out));
    CHECK(rows[0] == "policy,seed,cycle,device,energy,alloc");
    CHECK(rows.size() > 100); // a few hundred cycles of two devices, two runs
}

TEST_CASE("oracle-check passes on the shipped default grids") {
    CHECK(deepiot::run_cli({"oracle-check", "--preset", "calibrated", "-L", "1", "-M", "4", "--out",
                            "/dev/null"}) == 0);
}
