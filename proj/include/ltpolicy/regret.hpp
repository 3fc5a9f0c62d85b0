#pragma once

// Monte Carlo regret estimation with common random numbers.
//
// Replication i of every estimate draws its arrivals from SeedSpec{master_seed, i},
// so any two estimates that share (rates, T, master_seed) see identical
// streams. Per-replication results are stored by index and reduced in index
// order, which makes every reported number independent of the thread count.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltpolicy/core.hpp"
#include "ltpolicy/csv.hpp"
#include "ltpolicy/hindsight.hpp"
#include "ltpolicy/parallel.hpp"
#include "ltpolicy/policies.hpp"

namespace ltp {

struct RegretEstimate {
    double mean_regret = 0.0;
    double std_error = 0.0;
    long replications = 0;
    double mean_hindsight = 0.0;
    double mean_policy_revenue = 0.0;
    double mean_abs_final_position = 0.0;  // Monte Carlo estimate of Delta_beta(n, T)
    long dominance_violations = 0;         // replications where the policy beat hindsight

    bool degenerate() const noexcept { return replications < 2; }
    bool operator==(const RegretEstimate&) const = default;
};

// Per-replication regret below this is treated as a hindsight-dominance failure.
inline constexpr double kDominanceSlack = 1e-9;

inline RegretEstimate estimate_regret(const ModelParams& params, const PolicySpec& spec,
                                      long replications, std::uint64_t master_seed,
                                      unsigned threads = 0) {
    require(replications >= 1, "replications must be >= 1", "replications");
    validate_policy(params, spec);

    const auto count = static_cast<std::size_t>(replications);
    std::vector<double> regret(count), hindsight(count), revenue(count), abs_final(count);
    parallel_for(count, threads, [&](std::size_t i) {
        const auto arrivals = sample_arrivals(params, SeedSpec{master_seed, i});
        const SimOutcome out = run_policy(params, spec, arrivals);
        const HindsightSolution best = hindsight_optimal(params, arrivals);
        hindsight[i] = best.revenue;
        revenue[i] = out.revenue;
        regret[i] = best.revenue - out.revenue;
        abs_final[i] = std::abs(static_cast<double>(out.final_inventory_position));
    });

    RegretEstimate est;
    est.replications = replications;
    const SampleStats rs = sample_stats(regret);
    est.mean_regret = rs.mean;
    est.std_error = rs.std_error;
    est.mean_hindsight = sample_stats(hindsight).mean;
    est.mean_policy_revenue = sample_stats(revenue).mean;
    est.mean_abs_final_position = sample_stats(abs_final).mean;
    for (std::size_t i = 0; i < count; ++i)
        if (regret[i] < -kDominanceSlack * std::max(1.0, hindsight[i])) ++est.dominance_violations;
    return est;
}

struct SweepGrid {
    std::vector<double> rates;
    std::vector<double> prices;
    std::vector<double> betas;  // only for a beta-LT template; must be empty otherwise
    std::vector<double> horizons;
    std::vector<double> alphas;
    long replications = 1;
    std::uint64_t master_seed = 0;
    PolicySpec policy = BetaLT{1.0};
    unsigned threads = 0;
};

struct SweepCell {
    std::optional<double> beta;
    double horizon = 0.0;
    double alpha = 0.0;
    long n = 0;
    RegretEstimate estimate;

    bool operator==(const SweepCell&) const = default;
};

using SweepTable = std::vector<SweepCell>;

// Cells are ordered beta-major, then horizon, then alpha.
inline SweepTable run_sweep(const SweepGrid& grid) {
    const bool beta_axis = std::holds_alternative<BetaLT>(grid.policy);
    require(!grid.horizons.empty(), "sweep needs at least one horizon", "sweep.horizons");
    require(!grid.alphas.empty(), "sweep needs at least one alpha", "sweep.alphas");
    if (beta_axis)
        require(!grid.betas.empty(), "beta-LT sweep needs at least one beta", "sweep.betas");
    else
        require(grid.betas.empty(), "betas axis only applies to beta_lt policies", "sweep.betas");

    std::vector<std::optional<double>> betas;
    if (beta_axis)
        betas.assign(grid.betas.begin(), grid.betas.end());
    else
        betas.push_back(std::nullopt);

    SweepTable table;
    for (const auto& beta : betas) {
        for (double T : grid.horizons) {
            for (double alpha : grid.alphas) {
                const ModelParams params =
                    ModelParams::from_alpha(grid.rates, grid.prices, alpha, T);
                const PolicySpec spec = beta ? PolicySpec{BetaLT{*beta}} : grid.policy;
                SweepCell cell{beta, T, alpha, params.initial_inventory(), {}};
                cell.estimate =
                    estimate_regret(params, spec, grid.replications, grid.master_seed, grid.threads);
                table.push_back(cell);
            }
        }
    }
    return table;
}

inline constexpr const char* kSweepCsvHeader =
    "beta,T,alpha,n,replications,mean_regret,std_error,mean_hindsight,mean_abs_final_position";

inline void write_sweep_csv(std::ostream& os, const SweepTable& table) {
    os << kSweepCsvHeader << '\n';
    for (const auto& c : table) {
        if (c.beta) os << Num{*c.beta};
        os << ',' << Num{c.horizon} << ',' << Num{c.alpha} << ',' << c.n << ',' << c.estimate.replications
           << ',' << Num{c.estimate.mean_regret} << ',' << Num{c.estimate.std_error} << ','
           << Num{c.estimate.mean_hindsight} << ',' << Num{c.estimate.mean_abs_final_position} << '\n';
    }
}

inline nlohmann::json to_json(const RegretEstimate& e) {
    return {{"mean_regret", e.mean_regret},
            {"std_error", e.std_error},
            {"replications", e.replications},
            {"mean_hindsight", e.mean_hindsight},
            {"mean_policy_revenue", e.mean_policy_revenue},
            {"mean_abs_final_position", e.mean_abs_final_position},
            {"dominance_violations", e.dominance_violations},
            {"degenerate", e.degenerate()}};
}

inline RegretEstimate regret_from_json(const nlohmann::json& j) {
    RegretEstimate e;
    e.mean_regret = j.at("mean_regret").get<double>();
    e.std_error = j.at("std_error").get<double>();
    e.replications = j.at("replications").get<long>();
    e.mean_hindsight = j.at("mean_hindsight").get<double>();
    e.mean_policy_revenue = j.at("mean_policy_revenue").get<double>();
    e.mean_abs_final_position = j.at("mean_abs_final_position").get<double>();
    e.dominance_violations = j.at("dominance_violations").get<long>();
    return e;
}

inline nlohmann::json sweep_to_json(const SweepTable& table) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : table) {
        nlohmann::json j = to_json(c.estimate);
        j["beta"] = c.beta ? nlohmann::json(*c.beta) : nlohmann::json(nullptr);
        j["T"] = c.horizon;
        j["alpha"] = c.alpha;
        j["n"] = c.n;
        cells.push_back(std::move(j));
    }
    return {{"cells", std::move(cells)}};
}

inline SweepTable sweep_from_json(const nlohmann::json& j) {
    SweepTable table;
    for (const auto& c : j.at("cells")) {
        SweepCell cell;
        if (!c.at("beta").is_null()) cell.beta = c.at("beta").get<double>();
        cell.horizon = c.at("T").get<double>();
        cell.alpha = c.at("alpha").get<double>();
        cell.n = c.at("n").get<long>();
        cell.estimate = regret_from_json(c);
        table.push_back(cell);
    }
    return table;
}

enum class TableFormat { csv, json };

inline std::string tabulate(const SweepTable& table, TableFormat format) {
    if (format == TableFormat::json) return sweep_to_json(table).dump(2) + "\n";
    std::ostringstream os;
    write_sweep_csv(os, table);
    return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw RuntimeError("failed writing '" + path + "'");
}

}  // namespace ltp
