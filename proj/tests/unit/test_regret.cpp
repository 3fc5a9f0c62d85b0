#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ltpolicy/regret.hpp"

using namespace ltp;

namespace {

ModelParams canonical(double alpha, double T) { return ModelParams::from_alpha({1.0, 1.0}, {2.0, 1.0}, alpha, T); }

}  // namespace

TEST(Parallel, CompensatedSumAndStats) {
    const std::vector<double> xs{1e16, 1.0, -1e16, 1.0};
    EXPECT_DOUBLE_EQ(compensated_sum(xs), 2.0);
    const std::vector<double> ys{1.0, 2.0, 3.0, 4.0};
    const auto s = sample_stats(ys);
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_NEAR(s.std_error, std::sqrt((5.0 / 3.0) / 4.0), 1e-15);
    EXPECT_DOUBLE_EQ(sample_stats(std::vector<double>{7.0}).std_error, 0.0);
}

TEST(Parallel, VisitsEveryIndexOnceAndRethrows) {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) EXPECT_EQ(h, 1);
    EXPECT_THROW(parallel_for(100, 4, [](std::size_t i) { if (i == 57) throw std::runtime_error("x"); }),
                 std::runtime_error);
}

TEST(Regret, ThreadCountInvariant) {
    const auto p = canonical(1.5, 200.0);
    const auto a = estimate_regret(p, BetaLT{1.5}, 500, 11, 1);
    for (unsigned t : {2u, 4u, 8u}) EXPECT_EQ(estimate_regret(p, BetaLT{1.5}, 500, 11, t), a);
}

TEST(Regret, SeedChangesResult) {
    const auto p = canonical(1.5, 200.0);
    EXPECT_NE(estimate_regret(p, BetaLT{1.5}, 200, 1, 1).mean_regret,
              estimate_regret(p, BetaLT{1.5}, 200, 2, 1).mean_regret);
}

TEST(Regret, CommonRandomNumbersAcrossInventory) {
    // Arrivals depend on rates, horizon and seed only, so cells that differ in
    // alpha see identical streams.
    const auto a = canonical(1.25, 100.0);
    const auto b = canonical(1.75, 100.0);
    for (std::uint64_t r = 0; r < 20; ++r) EXPECT_EQ(sample_arrivals(a, {9, r}), sample_arrivals(b, {9, r}));
}

TEST(Regret, HindsightDominanceHolds) {
    for (double alpha : {0.5, 1.5, 2.5}) {
        const auto est = estimate_regret(canonical(alpha, 300.0), BetaLT{1.5}, 400, 3, 1);
        EXPECT_EQ(est.dominance_violations, 0);
        EXPECT_GE(est.mean_regret, 0.0);
        EXPECT_NEAR(est.mean_hindsight - est.mean_policy_revenue, est.mean_regret, 1e-9);
    }
}

TEST(Regret, NoCustomersNoRegret) {
    const ModelParams p({1e-9, 1e-9}, {2.0, 1.0}, 50, 100.0);
    const auto est = estimate_regret(p, BetaLT{1.5}, 1000, 5, 1);
    EXPECT_EQ(est.mean_regret, 0.0);
    EXPECT_EQ(est.mean_hindsight, 0.0);
}

TEST(Regret, BoundedByAbsoluteFinalPosition) {
    // Regret is at most p_1 times the expected absolute final position.
    for (double beta : {1.1, 1.5, 1.9}) {
        const auto est = estimate_regret(canonical(1.5, 500.0), BetaLT{beta}, 1000, 17, 1);
        EXPECT_LE(est.mean_regret, 2.0 * est.mean_abs_final_position + 1e-9) << beta;
    }
}

TEST(Regret, SingleReplicationIsDegenerate) {
    const auto est = estimate_regret(canonical(1.5, 50.0), BetaLT{1.5}, 1, 1, 1);
    EXPECT_TRUE(est.degenerate());
    EXPECT_EQ(est.std_error, 0.0);
    EXPECT_TRUE(to_json(est).at("degenerate").get<bool>());
}

TEST(Regret, RejectsBadInputs) {
    EXPECT_THROW(estimate_regret(canonical(1.5, 50.0), BetaLT{1.5}, 0, 1, 1), ValidationError);
    EXPECT_THROW(estimate_regret(canonical(1.5, 50.0), BetaLT{-1.0}, 10, 1, 1), ValidationError);
}

TEST(Sweep, OrderingAndSingleCellConsistency) {
    SweepGrid g;
    g.rates = {1.0, 1.0};
    g.prices = {2.0, 1.0};
    g.betas = {1.25, 1.75};
    g.horizons = {50.0, 100.0};
    g.alphas = {1.0, 2.0};
    g.replications = 100;
    g.master_seed = 4;
    g.threads = 1;
    const auto table = run_sweep(g);
    ASSERT_EQ(table.size(), 8u);
    std::size_t i = 0;
    for (double b : g.betas)
        for (double T : g.horizons)
            for (double a : g.alphas) {
                EXPECT_EQ(*table[i].beta, b);
                EXPECT_EQ(table[i].horizon, T);
                EXPECT_EQ(table[i].alpha, a);
                EXPECT_EQ(table[i].n, static_cast<long>(std::lround(a * T)));
                EXPECT_EQ(table[i].estimate, estimate_regret(canonical(a, T), BetaLT{b}, 100, 4, 1));
                ++i;
            }
}

TEST(Sweep, NonBetaPolicyHasNoBetaAxis) {
    SweepGrid g;
    g.rates = {1.0, 1.0};
    g.prices = {2.0, 1.0};
    g.horizons = {50.0};
    g.alphas = {1.5};
    g.replications = 20;
    g.policy = AcceptAll{};
    const auto table = run_sweep(g);
    ASSERT_EQ(table.size(), 1u);
    EXPECT_FALSE(table[0].beta.has_value());
    g.betas = {1.5};
    EXPECT_THROW(run_sweep(g), ValidationError);
}

TEST(Sweep, EmptyTableIsHeaderOnly) {
    EXPECT_EQ(tabulate({}, TableFormat::csv), std::string(kSweepCsvHeader) + "\n");
}

TEST(Sweep, OneCellOneRow) {
    SweepGrid g;
    g.rates = {1.0, 1.0};
    g.prices = {2.0, 1.0};
    g.betas = {1.5};
    g.horizons = {20.0};
    g.alphas = {1.5};
    g.replications = 10;
    const auto csv = tabulate(run_sweep(g), TableFormat::csv);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
    EXPECT_EQ(csv.rfind("1.5,20,1.5,30,10,", std::string(kSweepCsvHeader).size() + 1),
              std::string(kSweepCsvHeader).size() + 1);
}

TEST(Sweep, JsonRoundTrip) {
    SweepGrid g;
    g.rates = {1.0, 1.0};
    g.prices = {2.0, 1.0};
    g.betas = {1.1, 1.5};
    g.horizons = {30.0};
    g.alphas = {0.7, 1.3};
    g.replications = 50;
    g.master_seed = 99;
    auto table = run_sweep(g);
    const auto text = tabulate(table, TableFormat::json);
    EXPECT_EQ(sweep_from_json(nlohmann::json::parse(text)), table);

    SweepTable none{{std::nullopt, 10.0, 1.0, 10, RegretEstimate{0.25, 0.0, 1, 3.0, 2.75, 1.0, 0}}};
    EXPECT_EQ(sweep_from_json(sweep_to_json(none)), none);
}
