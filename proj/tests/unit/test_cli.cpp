#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ltpolicy/cli.hpp"

namespace fs = std::filesystem;
using ltp::cli::run_cli;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("ltp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write_config(const std::string& name, const json& j) const {
        const auto p = dir_ / name;
        std::ofstream(p) << j.dump(2);
        return p.string();
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    static json simulate_config(double beta, double T, long reps) {
        return {{"model", {{"rates", {1, 1}}, {"prices", {2, 1}}, {"horizon", T}, {"alpha", 1.5}}},
                {"policy", {{"type", "beta_lt"}, {"beta", beta}}},
                {"replications", reps},
                {"master_seed", 7}};
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SimulatePrintsJsonWithoutOutput) {
    const auto r = cli({"simulate", "--config", write_config("s.json", simulate_config(1.5, 100, 200)),
                        "--deterministic"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto brace = r.out.rfind('}');
    const json j = json::parse(r.out.substr(0, brace + 1));
    EXPECT_EQ(j.at("command"), "simulate");
    EXPECT_EQ(j.at("estimate").at("replications"), 200);
    EXPECT_FALSE(j.contains("generated_at"));
    EXPECT_NE(r.out.find("mean_regret="), std::string::npos);
}

TEST_F(CliTest, WritesJsonAndCsvMirrors) {
    const auto r = cli({"simulate", "--config", write_config("s.json", simulate_config(1.5, 100, 50)), "--out",
                        path("sub/run.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_TRUE(fs::exists(path("sub/run.json")));
    ASSERT_TRUE(fs::exists(path("sub/run.csv")));
    const auto csv = slurp(path("sub/run.csv"));
    EXPECT_EQ(csv.rfind("# generated_at=", 0), 0u);
    EXPECT_NE(csv.find(ltp::kSweepCsvHeader), std::string::npos);
    EXPECT_TRUE(json::parse(slurp(path("sub/run.json"))).contains("generated_at"));
}

TEST_F(CliTest, NonPositiveBetaIsValidationError) {
    for (double beta : {0.0, -1.0}) {
        const auto r = cli({"simulate", "--config", write_config("b.json", simulate_config(beta, 100, 10))});
        EXPECT_EQ(r.code, 2);
        EXPECT_NE(r.err.find("policy.beta"), std::string::npos) << r.err;
    }
}

TEST_F(CliTest, SingleReplicationFlaggedDegenerate) {
    const auto r = cli({"simulate", "--config", write_config("s.json", simulate_config(1.5, 100, 1000)), "--reps", "1",
                        "--out", path("one"), "--deterministic"});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(slurp(path("one.json")));
    EXPECT_TRUE(j.at("estimate").at("degenerate").get<bool>());
    EXPECT_EQ(j.at("estimate").at("std_error"), 0.0);
    EXPECT_NE(r.out.find("degenerate"), std::string::npos);
}

TEST_F(CliTest, FlagsOverrideConfig) {
    const auto cfg = write_config("s.json", simulate_config(1.5, 100, 1000));
    ASSERT_EQ(cli({"simulate", "--config", cfg, "--reps", "30", "--seed", "123", "--out", path("o"), "--deterministic"}).code, 0);
    const json j = json::parse(slurp(path("o.json")));
    EXPECT_EQ(j.at("estimate").at("replications"), 30);
    EXPECT_EQ(j.at("master_seed"), 123u);
}

TEST_F(CliTest, DeterministicAcrossThreadCounts) {
    json sweep{{"model", {{"rates", {1, 1}}, {"prices", {2, 1}}}},
               {"sweep", {{"betas", {1.25, 1.5}}, {"horizons", {100}}, {"alphas", {1.0, 1.5}}}},
               {"replications", 300},
               {"master_seed", 3}};
    const auto sim = write_config("s.json", simulate_config(1.5, 200, 500));
    const auto sw = write_config("w.json", sweep);
    for (const auto& [cmd, cfg] : std::vector<std::pair<std::string, std::string>>{{"simulate", sim}, {"sweep-beta", sw}}) {
        std::string json_ref, csv_ref;
        for (const char* threads : {"1", "4", "8"}) {
            const auto prefix = path(cmd + "_t" + threads);
            ASSERT_EQ(cli({cmd, "--config", cfg, "--threads", threads, "--out", prefix, "--deterministic"}).code, 0);
            const auto j = slurp(prefix + ".json");
            const auto c = slurp(prefix + ".csv");
            if (json_ref.empty()) {
                json_ref = j;
                csv_ref = c;
                EXPECT_EQ(c.rfind("beta,", 0), 0u);
            } else {
                EXPECT_EQ(j, json_ref) << cmd << " threads=" << threads;
                EXPECT_EQ(c, csv_ref) << cmd << " threads=" << threads;
            }
        }
    }
}

TEST_F(CliTest, ParseAndValidationExitCodes) {
    const auto cfg = write_config("s.json", simulate_config(1.5, 100, 10));
    EXPECT_EQ(cli({"simulate"}).code, 2);
    EXPECT_EQ(cli({"--config", cfg}).code, 2);
    EXPECT_EQ(cli({"bogus", "--config", cfg}).code, 2);
    EXPECT_EQ(cli({"simulate", "--config", cfg, "--frobnicate"}).code, 2);
    EXPECT_EQ(cli({"simulate", "--config", cfg, "--reps", "abc"}).code, 2);
    EXPECT_EQ(cli({"simulate", "--config", cfg, "--threads", "-1"}).code, 2);
    EXPECT_EQ(cli({"simulate", "--config", path("missing.json")}).code, 2);
    EXPECT_EQ(cli({"--help"}).code, 0);
    auto bad = simulate_config(1.5, 100, 10);
    bad["replicatoins"] = 5;
    const auto r = cli({"simulate", "--config", write_config("bad.json", bad)});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("replicatoins"), std::string::npos);
}

TEST_F(CliTest, ThresholdsRejectSeedAndReps) {
    json t{{"model", {{"rates", {1, 1}}, {"prices", {2, 1}}}}, {"thresholds", {{"t_max", 30}, {"t_cut", 25}}}};
    const auto cfg = write_config("t.json", t);
    EXPECT_EQ(cli({"thresholds", "--config", cfg, "--seed", "1"}).code, 2);
    EXPECT_EQ(cli({"thresholds", "--config", cfg, "--reps", "1"}).code, 2);
    EXPECT_EQ(cli({"thresholds", "--config", cfg, "--deterministic"}).code, 0);
}

TEST_F(CliTest, RuntimeFailureExitsOne) {
    json t{{"model", {{"rates", {1, 1}}, {"prices", {2, 1}}}},
           {"thresholds", {{"t_max", 50}, {"t_cut", 40}, {"max_inventory", 10}}}};
    const auto r = cli({"thresholds", "--config", write_config("t.json", t)});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("max_inventory"), std::string::npos);
}

TEST_F(CliTest, ExcursionExamplesEndToEnd) {
    json e{{"model", {{"rates", {1, 1}}, {"prices", {2, 1}}, {"horizon", 100}}},
           {"excursion", {{"beta", 1.5}, {"excursions", 100000}, {"identity_samples", 1000}}},
           {"tail_bound", {{"alpha", 2.5}, {"n", {100, 1000, 10000}}, {"simulate_n", {200}}}},
           {"replications", 2000},
           {"master_seed", 1}};
    ASSERT_EQ(cli({"excursion", "--config", write_config("e.json", e), "--out", path("e"), "--deterministic"}).code, 0);
    const json j = json::parse(slurp(path("e.json")));
    EXPECT_NEAR(j["stats"]["nu"].get<double>(), 0.7274733554, 1e-9);
    EXPECT_LE(j["stats"]["nu_residual"].get<double>(), 1e-12);
    EXPECT_DOUBLE_EQ(j["stats"]["above_fraction"].get<double>(), 0.5);
    EXPECT_NEAR(j["stats"]["expected_above"].get<double>(), j["stats"]["expected_below"].get<double>(), 1e-12);
    EXPECT_DOUBLE_EQ(j["dlp_at_alpha_equal_beta"]["z2"].get<double>(), 0.5);
    EXPECT_DOUBLE_EQ(j["dlp_at_alpha_equal_beta"]["objective"].get<double>(), 250.0);
    EXPECT_LE(j["ratio_identity"]["max_abs_error_vs_dlp_z2"].get<double>(), 1e-12);
    EXPECT_LE(j["simulated"]["rel_error_above"].get<double>(), 0.02);
    const auto& table = j["tail_bound"]["table"];
    EXPECT_NEAR(table[0]["bound"].get<double>(), 13.5335, 1e-3);
    EXPECT_LT(table[2]["bound"].get<double>(), table[1]["bound"].get<double>());
    EXPECT_TRUE(j["tail_bound"]["simulated"][0]["within_bound"].get<bool>());
    EXPECT_EQ(slurp(path("e.csv")).rfind("n,bound,simulated_frequency,std_error,replications\n", 0), 0u);
}

TEST_F(CliTest, ThresholdExamplesEndToEnd) {
    json t{{"model", {{"rates", {1, 1}}, {"prices", {2, 1}}}},
           {"thresholds", {{"t_max", 100}, {"t_cut", 100}, {"compare_prices", {0.1, 1.9}}}}};
    ASSERT_EQ(cli({"thresholds", "--config", write_config("t.json", t), "--out", path("t"), "--deterministic"}).code, 0);
    const json j = json::parse(slurp(path("t.json")));
    EXPECT_NEAR(j["eo_slope"].get<double>(), 1.4420, 0.015);
    const auto theta = ltp::ThresholdTable::read_csv_file(path("t_theta.csv"));
    EXPECT_EQ(theta.value_at(0.0), 0);
    for (std::size_t i = 1; i < theta.size(); ++i) EXPECT_GE(theta.values()[i], theta.values()[i - 1]);
    double lo = 1e9, hi = 0.0;
    for (const auto& row : j["price_comparison"]) {
        lo = std::min(lo, row["slope"].get<double>());
        hi = std::max(hi, row["slope"].get<double>());
    }
    EXPECT_EQ(j["price_comparison"].size(), 3u);
    EXPECT_LE(hi - lo, 0.02 * lo);
    // The EO file is itself a policy descriptor.
    json sim = simulate_config(1.5, 200, 100);
    sim["policy"] = json::parse(slurp(path("t_eo.json")));
    EXPECT_EQ(cli({"simulate", "--config", write_config("eo.json", sim), "--deterministic"}).code, 0);
}

TEST_F(CliTest, DtmcExamplesEndToEnd) {
    json d{{"model", {{"rates", {1, 1}}}},
           {"dtmc", {{"beta", 1.5}, {"truncation", 200}, {"compare_truncation", 100}, {"g_excursions", 20000},
                     {"occupancy_steps", 200000}, {"horizons", {10, 100}}, {"kernel_min_entry", 1e-12}}},
           {"replications", 2000},
           {"master_seed", 1}};
    ASSERT_EQ(cli({"dtmc", "--config", write_config("d.json", d), "--out", path("d"), "--deterministic"}).code, 0);
    const json j = json::parse(slurp(path("d.json")));
    EXPECT_LE(j["max_row_sum_error"].get<double>(), 1e-9);
    EXPECT_LE(j["stationary"]["residual"].get<double>(), 1e-8);
    EXPECT_LE(j["truncation_comparison"]["relative_change"].get<double>(), 0.01);
    EXPECT_LE(j["restricted"]["plus_vs_dm1_max_abs_diff"].get<double>(), 1e-12);
    EXPECT_LE(j["occupancy"]["tv_distance"].get<double>(), 0.03);
    for (const auto& row : j["abs_position"]) EXPECT_TRUE(row["within_bound"].get<bool>());
    EXPECT_TRUE(fs::exists(path("d_kernel.csv")));
    EXPECT_EQ(slurp(path("d_pi.csv")).rfind("i,pi_i\n", 0), 0u);
    // beta outside (lambda_1, lambda_12)
    d["dtmc"]["beta"] = 2.5;
    EXPECT_EQ(cli({"dtmc", "--config", write_config("d2.json", d)}).code, 2);
}

TEST_F(CliTest, CheckedInConfigsRun) {
    for (const auto& entry : fs::directory_iterator(LTP_CONFIG_DIR)) {
        if (entry.path().extension() != ".json") continue;
        const json cfg = json::parse(slurp(entry.path()));
        std::string command = "simulate";
        if (cfg.contains("sweep")) command = "sweep-beta";
        if (cfg.contains("dtmc")) command = "dtmc";
        if (cfg.contains("excursion")) command = "excursion";
        if (cfg.contains("thresholds")) command = "thresholds";
        std::vector<std::string> args{command, "--config", entry.path().string(), "--out",
                                      path(entry.path().stem().string()), "--deterministic"};
        if (command != "thresholds") {
            args.push_back("--reps");
            args.push_back("2");
        }
        const auto r = cli(args);
        EXPECT_EQ(r.code, 0) << entry.path() << ": " << r.err;
    }
}

TEST_F(CliTest, BinaryExitCodes) {
    const std::string bin = LTP_BINARY;
    auto status = [](const std::string& cmd) {
        const int s = std::system((cmd + " > /dev/null 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    const auto good = write_config("s.json", simulate_config(1.5, 50, 20));
    const auto bad = write_config("b.json", simulate_config(-1.0, 50, 20));
    json t{{"model", {{"rates", {1, 1}}, {"prices", {2, 1}}}},
           {"thresholds", {{"t_max", 50}, {"t_cut", 40}, {"max_inventory", 10}}}};
    const auto failing = write_config("t.json", t);
    EXPECT_EQ(status(bin + " simulate --config " + good), 0);
    EXPECT_EQ(status(bin + " simulate --config " + bad), 2);
    EXPECT_EQ(status(bin + " thresholds --config " + failing), 1);
    EXPECT_EQ(status(bin + " nonsense"), 2);
}
