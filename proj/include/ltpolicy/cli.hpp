#pragma once

// The `ltp` command line: subcommands simulate, sweep-beta, dtmc, excursion
// and thresholds, each driven by a strict JSON config. Flags override the
// matching config keys. Exit codes: 0 ok, 1 runtime failure, 2 bad input.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ltpolicy/config.hpp"
#include "ltpolicy/csv.hpp"
#include "ltpolicy/dp.hpp"
#include "ltpolicy/dtmc.hpp"
#include "ltpolicy/excursion.hpp"
#include "ltpolicy/regret.hpp"

namespace ltp::cli {

using nlohmann::json;

struct RunContext {
    bool deterministic = false;
    std::string timestamp;  // used only when not deterministic
};

struct OutputFile {
    std::string suffix;  // appended to the output prefix, e.g. ".json" or "_pi.csv"
    std::string content;
};

struct CommandResult {
    std::string output;  // prefix; empty prints the JSON report to stdout
    std::vector<OutputFile> files;
    std::string summary;
};

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

inline std::string stamped_csv(const std::string& body, const RunContext& ctx) {
    if (ctx.deterministic) return body;
    return "# generated_at=" + ctx.timestamp + "\n" + body;
}

inline std::string stamped_json(json j, const RunContext& ctx) {
    if (!ctx.deterministic) j["generated_at"] = ctx.timestamp;
    return j.dump(2) + "\n";
}

struct Common {
    std::uint64_t master_seed = 1;
    long replications = 0;
    unsigned threads = 0;
    std::string output;
};

inline Common read_common(config::Reader& root, bool seeded, long default_reps) {
    Common c;
    root.get_or<std::string>("description", "");
    c.output = root.get_or<std::string>("output", "");
    const long threads = root.get_or<long>("threads", 0);
    require(threads >= 0, "threads must be >= 0", "threads");
    c.threads = static_cast<unsigned>(threads);
    if (seeded) {
        c.master_seed = root.get_or<std::uint64_t>("master_seed", 1);
        c.replications = root.get_or<long>("replications", default_reps);
        require(c.replications >= 0, "replications must be >= 0", "replications");
    }
    return c;
}

inline std::string format_double(double x, int precision = 6) {
    std::ostringstream os;
    os << std::setprecision(precision) << x;
    return os.str();
}

// ---------------------------------------------------------------- simulate

inline CommandResult cmd_simulate(const json& cfg, const RunContext& ctx) {
    config::Reader root(cfg, "");
    const Common c = read_common(root, true, 1000);
    require(c.replications >= 1, "replications must be >= 1", "replications");
    const auto model = config::read_model(root.child("model"), true, true);
    const ModelParams p = model.instance();
    const PolicySpec spec = config::read_policy(root.child("policy"), model.rates, model.prices);
    root.finish();

    const RegretEstimate est = estimate_regret(p, spec, c.replications, c.master_seed, c.threads);
    const double alpha = model.alpha ? *model.alpha : p.alpha();
    std::optional<double> beta;
    if (const auto* b = std::get_if<BetaLT>(&spec)) beta = b->beta;
    const SweepTable table{{beta, p.horizon(), alpha, p.initial_inventory(), est}};

    json report{{"command", "simulate"},
                {"model",
                 {{"rates", model.rates},
                  {"prices", model.prices},
                  {"horizon", p.horizon()},
                  {"alpha", alpha},
                  {"initial_inventory", p.initial_inventory()}}},
                {"policy", config::policy_to_json(spec)},
                {"master_seed", c.master_seed},
                {"estimate", to_json(est)}};

    std::ostringstream csv;
    write_sweep_csv(csv, table);
    std::ostringstream summary;
    summary << "simulate: policy=" << policy_kind(spec) << " T=" << p.horizon()
            << " n=" << p.initial_inventory() << " reps=" << est.replications
            << " mean_regret=" << format_double(est.mean_regret)
            << " std_error=" << format_double(est.std_error);
    if (est.degenerate()) summary << " (degenerate: one replication, no error estimate)";
    if (est.dominance_violations > 0)
        summary << " WARNING: " << est.dominance_violations << " replications beat hindsight";
    return {c.output,
            {{".json", stamped_json(report, ctx)}, {".csv", stamped_csv(csv.str(), ctx)}},
            summary.str()};
}

// -------------------------------------------------------------- sweep-beta

inline CommandResult cmd_sweep_beta(const json& cfg, const RunContext& ctx) {
    config::Reader root(cfg, "");
    const Common c = read_common(root, true, 1000);
    require(c.replications >= 1, "replications must be >= 1", "replications");
    const auto model = config::read_model(root.child("model"), true, false);
    SweepGrid grid;
    grid.rates = model.rates;
    grid.prices = model.prices;
    if (auto pr = root.maybe_child("policy"))
        grid.policy = config::read_policy(std::move(*pr), model.rates, model.prices);
    {
        auto sw = root.child("sweep");
        grid.betas = sw.get_or<std::vector<double>>("betas", {});
        grid.horizons = sw.get<std::vector<double>>("horizons");
        grid.alphas = sw.get<std::vector<double>>("alphas");
        for (double b : grid.betas) require(b > 0.0, "beta must be positive", "sweep.betas");
        for (double t : grid.horizons) require(t > 0.0, "horizons must be positive", "sweep.horizons");
        for (double a : grid.alphas) require(a > 0.0, "alphas must be positive", "sweep.alphas");
        sw.finish();
    }
    root.finish();
    grid.replications = c.replications;
    grid.master_seed = c.master_seed;
    grid.threads = c.threads;

    const SweepTable table = run_sweep(grid);
    json report = sweep_to_json(table);
    report["command"] = "sweep-beta";
    report["model"] = {{"rates", model.rates}, {"prices", model.prices}};
    report["policy"] = policy_kind(grid.policy);
    report["master_seed"] = c.master_seed;
    report["replications"] = c.replications;

    const SweepCell* best = &table.front();
    for (const auto& cell : table)
        if (cell.estimate.mean_regret < best->estimate.mean_regret) best = &cell;
    std::ostringstream summary;
    summary << "sweep-beta: " << table.size() << " cells x " << c.replications
            << " reps; lowest mean_regret=" << format_double(best->estimate.mean_regret);
    if (best->beta) summary << " at beta=" << *best->beta;
    summary << " T=" << best->horizon << " alpha=" << best->alpha;
    return {c.output,
            {{".json", stamped_json(report, ctx)}, {".csv", stamped_csv(tabulate(table, TableFormat::csv), ctx)}},
            summary.str()};
}

// -------------------------------------------------------------------- dtmc

inline CommandResult cmd_dtmc(const json& cfg, const RunContext& ctx) {
    config::Reader root(cfg, "");
    const Common c = read_common(root, true, 0);
    const auto model = config::read_model(root.child("model"), false, false);
    require(model.rates.size() == 2, "the chain is defined for two classes", "model.rates");
    auto d = root.child("dtmc");
    const auto beta = d.get<double>("beta");
    const int M = static_cast<int>(d.get_or<long>("truncation", DtmcModel::kDefaultTruncation));
    const int nodes = static_cast<int>(d.get_or<long>("quadrature_nodes", DtmcModel::kDefaultNodes));
    const int compare_M = static_cast<int>(d.get_or<long>("compare_truncation", 0));
    const long g_excursions = d.get_or<long>("g_excursions", 100000);
    const int g_bins = static_cast<int>(d.get_or<long>("g_bins", 64));
    const long occupancy_steps = d.get_or<long>("occupancy_steps", 0);
    const auto horizons = d.get_or<std::vector<long>>("horizons", {10, 100, 1000});
    const double min_entry = d.get_or<double>("kernel_min_entry", 0.0);
    d.finish();
    root.finish();

    require(beta > model.rates[0] && beta < model.rates[0] + model.rates[1],
            "need lambda_1 < beta < lambda_1 + lambda_2", "dtmc.beta");
    require(M >= 2, "truncation must be >= 2", "dtmc.truncation");
    require(compare_M == 0 || compare_M >= 2, "compare_truncation must be 0 or >= 2",
            "dtmc.compare_truncation");
    require(g_excursions >= 0 && occupancy_steps >= 0, "counts must be >= 0", "dtmc");
    for (long h : horizons) require(h >= 1, "horizons must be >= 1", "dtmc.horizons");

    const ChainRates cr = rescale(model.rates[0], model.rates[1], beta);
    const DtmcModel chain(cr, M, nodes);
    double row_err = 0.0;
    for (int i = -M; i <= M; ++i) row_err = std::max(row_err, std::abs(chain.kernel().row_sum(i) - 1.0));
    const StationaryDist pi = stationary(chain);
    const double bound = abs_position_bound(pi);

    json report{{"command", "dtmc"},
                {"model", {{"rates", model.rates}, {"beta", beta}}},
                {"rescaled", {{"lambda1", cr.lambda1}, {"lambda12", cr.lambda12}}},
                {"truncation", M},
                {"quadrature_nodes", nodes},
                {"max_row_sum_error", row_err},
                {"quadrature_check_max_error", quadrature_validation_error(chain)},
                {"stationary",
                 {{"method", pi.method},
                  {"iterations", pi.iterations},
                  {"residual", pi.residual},
                  {"pi0", pi.pi0},
                  {"first_moment_abs", pi.first_moment_abs}}},
                {"abs_position_bound", bound}};

    if (compare_M > 0) {
        const StationaryDist other = stationary(DtmcModel(cr, compare_M, nodes));
        report["truncation_comparison"] = {
            {"truncation", compare_M},
            {"first_moment_abs", other.first_moment_abs},
            {"relative_change", std::abs(other.first_moment_abs - pi.first_moment_abs) / pi.first_moment_abs}};
    }

    const BandedKernel plus = restricted_plus_kernel(chain);
    const BandedKernel dm1 = dm1_arrival_kernel(cr.lambda12, M);
    double plus_diff = 0.0;
    for (int i = 0; i <= M; ++i)
        for (int j = 0; j <= M; ++j) plus_diff = std::max(plus_diff, std::abs(plus.entry(i, j) - dm1.entry(i, j)));
    json restricted{{"plus_vs_dm1_max_abs_diff", plus_diff}};
    if (g_excursions > 0) {
        const GEstimate g = estimate_g(cr, g_excursions, c.master_seed, g_bins);
        const BandedKernel minus = restricted_minus_kernel(chain, g);
        const auto se = restricted_minus_row0_stderr(chain, g);
        long violations = 0;
        double worst_excess = -1.0;
        // Mass removed from the jumps below 0 reappears at 0, so only j <= -1 is compared.
        for (int m = 1; m <= M; ++m) {
            const double excess = minus.entry(0, -m) - poisson_pmf(cr.lambda1, m);
            worst_excess = std::max(worst_excess, excess);
            if (excess > 3.0 * se[static_cast<std::size_t>(m)] + 1e-15) ++violations;
        }
        restricted["g_excursions"] = g_excursions;
        restricted["g_bins"] = g_bins;
        restricted["minus_row0_sum"] = minus.row_sum(0);
        restricted["minus_row0_max_excess_over_md1"] = worst_excess;
        restricted["minus_row0_dominance_violations_3sigma"] = violations;
    }
    report["restricted"] = restricted;

    if (occupancy_steps > 0) {
        const auto path = simulate_chain_path(cr, 0, occupancy_steps, c.master_seed);
        std::vector<double> freq(pi.pi.size(), 0.0);
        for (std::size_t s = 1; s < path.size(); ++s) {
            const long x = std::clamp<long>(path[s], -M, M);
            freq[static_cast<std::size_t>(x + M)] += 1.0;
        }
        double tv = 0.0;
        for (std::size_t k = 0; k < freq.size(); ++k)
            tv += std::abs(freq[k] / static_cast<double>(occupancy_steps) - pi.pi[k]);
        report["occupancy"] = {{"steps", occupancy_steps}, {"tv_distance", 0.5 * tv}};
    }

    CommandResult res;
    res.output = c.output;
    std::ostringstream kernel_csv, pi_csv;
    chain.kernel().write_csv(kernel_csv, min_entry);
    write_stationary_csv(pi_csv, pi);

    if (c.replications > 0) {
        const auto est = simulate_abs_position(cr, 0, horizons, c.replications, c.master_seed, c.threads);
        json rows = json::array();
        std::ostringstream csv;
        csv << "T,replications,mean_abs_position,std_error,bound,within_bound\n";
        for (const auto& e : est) {
            const bool ok = e.mean_abs - 2.0 * e.std_error <= bound;
            rows.push_back({{"T", e.steps}, {"mean_abs_position", e.mean_abs}, {"std_error", e.std_error}, {"within_bound", ok}});
            csv << e.steps << ',' << c.replications << ',' << Num{e.mean_abs} << ',' << Num{e.std_error} << ',' << Num{bound} << ','
                << (ok ? 1 : 0) << '\n';
        }
        report["abs_position"] = rows;
        report["replications"] = c.replications;
        res.files.push_back({"_abs_position.csv", stamped_csv(csv.str(), ctx)});
    }
    report["master_seed"] = c.master_seed;

    res.files.insert(res.files.begin(), {{".json", stamped_json(report, ctx)},
                                         {"_kernel.csv", stamped_csv(kernel_csv.str(), ctx)},
                                         {"_pi.csv", stamped_csv(pi_csv.str(), ctx)}});
    std::ostringstream summary;
    summary << "dtmc: M=" << M << " residual=" << format_double(pi.residual, 3) << " pi0=" << format_double(pi.pi0)
            << " sum|i|pi_i=" << format_double(pi.first_moment_abs) << " bound=" << format_double(bound);
    res.summary = summary.str();
    return res;
}

// --------------------------------------------------------------- excursion

inline CommandResult cmd_excursion(const json& cfg, const RunContext& ctx) {
    config::Reader root(cfg, "");
    const Common c = read_common(root, true, 10000);
    const auto model = config::read_model(root.child("model"), true, true);
    require(model.rates.size() == 2, "excursions are defined for two classes", "model.rates");
    auto e = root.child("excursion");
    const auto beta = e.get<double>("beta");
    const long excursions = e.get_or<long>("excursions", 100000);
    const long identity_samples = e.get_or<long>("identity_samples", 1000);
    e.finish();
    std::optional<double> tail_alpha;
    std::vector<long> tail_n, tail_sim_n;
    if (auto t = root.maybe_child("tail_bound")) {
        tail_alpha = t->get<double>("alpha");
        tail_n = t->get_or<std::vector<long>>("n", {100, 200, 500, 1000, 10000});
        tail_sim_n = t->get_or<std::vector<long>>("simulate_n", {});
        t->finish();
    }
    root.finish();

    const double l1 = model.rates[0], l2 = model.rates[1], l12 = l1 + l2;
    require(beta > l1 && beta < l12, "need lambda_1 < beta < lambda_1 + lambda_2", "excursion.beta");
    require(excursions >= 0 && identity_samples >= 0, "counts must be >= 0", "excursion");

    const ExcursionStats st = excursion_stats(l1, l2, beta);
    const double T = model.horizon.value_or(100.0);
    const DlpSolution at_beta = solve_dlp(model.rates, model.prices, beta * T, T);

    json report{{"command", "excursion"},
                {"model", {{"rates", model.rates}, {"prices", model.prices}, {"beta", beta}}},
                {"stats",
                 {{"nu", st.nu},
                  {"nu_residual", std::abs(st.nu * std::exp(-st.nu) - (l12 / beta) * std::exp(-l12 / beta))},
                  {"kappa", st.kappa},
                  {"expected_above", st.expected_above},
                  {"expected_below", st.expected_below},
                  {"above_fraction", st.above_fraction}}},
                {"dlp_at_alpha_equal_beta",
                 {{"horizon", T}, {"z1", at_beta.z1}, {"z2", at_beta.z2}, {"objective", at_beta.objective}}},
                {"master_seed", c.master_seed}};
    if (model.alpha || model.initial_inventory) {
        const DlpSolution inst = solve_dlp(model.instance());
        report["dlp"] = {{"z1", inst.z1}, {"z2", inst.z2}, {"objective", inst.objective}};
    }

    if (identity_samples > 0) {
        Rng rng(Rng::derive_key({c.master_seed, 0}, 0x1D));
        std::uniform_real_distribution<double> rate(0.1, 5.0), unit(0.0, 1.0);
        double worst_fraction = 0.0, worst_dlp = 0.0;
        for (long k = 0; k < identity_samples; ++k) {
            const double a = rate(rng), b = rate(rng);
            double u = unit(rng);
            u = std::clamp(u, 1e-6, 1.0 - 1e-6);
            const double bt = a + u * b;
            const ExcursionStats s = excursion_stats(a, b, bt);
            const std::vector<double> rs{a, b}, ps{2.0, 1.0};
            const DlpSolution z = solve_dlp(rs, ps, bt, 1.0);
            worst_fraction = std::max(worst_fraction, std::abs(s.above_fraction - (bt - a) / b));
            worst_dlp = std::max(worst_dlp, std::abs(s.above_fraction - z.z2));
        }
        report["ratio_identity"] = {{"samples", identity_samples},
                                    {"max_abs_error_vs_closed_form", worst_fraction},
                                    {"max_abs_error_vs_dlp_z2", worst_dlp}};
    }

    if (excursions > 0) {
        const ExcursionSample s = simulate_excursions(l1, l2, beta, excursions, c.master_seed);
        report["simulated"] = {{"excursions", excursions},
                               {"mean_above", s.mean_above},
                               {"se_above", s.se_above},
                               {"mean_below", s.mean_below},
                               {"se_below", s.se_below},
                               {"rel_error_above", std::abs(s.mean_above / st.expected_above - 1.0)},
                               {"rel_error_below", std::abs(s.mean_below / st.expected_below - 1.0)}};
    }

    std::ostringstream csv;
    csv << "n,bound,simulated_frequency,std_error,replications\n";
    if (tail_alpha) {
        require(*tail_alpha > l12, "the tail bound needs alpha > lambda_1 + lambda_2", "tail_bound.alpha");
        const double r1 = l1 / *tail_alpha, r2 = l2 / *tail_alpha;
        const double delta = 1.0 - (r1 + r2);
        json rows = json::array();
        for (long n : tail_n) {
            require(n >= 1, "n must be >= 1", "tail_bound.n");
            const double b = crossing_tail_bound(r1 + r2, delta, n);
            rows.push_back({{"n", n}, {"bound", b}});
            csv << n << ',' << Num{b} << ",,," << '\n';
        }
        json sims = json::array();
        for (long n : tail_sim_n) {
            require(n >= 1, "n must be >= 1", "tail_bound.simulate_n");
            require(c.replications >= 1, "crossing simulation needs replications >= 1", "replications");
            const CrossingFrequency f = simulate_crossing_frequency(r1, r2, n, c.replications, c.master_seed, c.threads);
            sims.push_back({{"n", n},
                            {"frequency", f.frequency},
                            {"std_error", f.std_error},
                            {"bound", f.bound},
                            {"within_bound", f.frequency - 3.0 * f.std_error <= std::min(1.0, f.bound)}});
            csv << n << ',' << Num{f.bound} << ',' << Num{f.frequency} << ',' << Num{f.std_error} << ',' << c.replications << '\n';
        }
        report["tail_bound"] = {{"alpha", *tail_alpha},
                                {"rescaled_lambda12", r1 + r2},
                                {"delta", delta},
                                {"table", rows},
                                {"simulated", sims}};
    }

    std::ostringstream summary;
    summary << "excursion: nu=" << format_double(st.nu, 10) << " E[A]=" << format_double(st.expected_above)
            << " E[B]=" << format_double(st.expected_below) << " above_fraction=" << format_double(st.above_fraction);
    return {c.output,
            {{".json", stamped_json(report, ctx)}, {".csv", stamped_csv(csv.str(), ctx)}},
            summary.str()};
}

// -------------------------------------------------------------- thresholds

inline CommandResult cmd_thresholds(const json& cfg, const RunContext& ctx) {
    config::Reader root(cfg, "");
    const Common c = read_common(root, false, 0);
    const auto model = config::read_model(root.child("model"), true, false);
    require(model.rates.size() == 2, "the threshold recursion is defined for two classes", "model.rates");
    auto t = root.child("thresholds");
    DpOptions opt;
    opt.dt = t.get_or<double>("dt", 1e-3);
    opt.t_max = t.get_or<double>("t_max", 120.0);
    opt.max_inventory = t.get_or<long>("max_inventory", 0);
    const double t_cut = t.get_or<double>("t_cut", 100.0);
    const auto compare = t.get_or<std::vector<double>>("compare_prices", {});
    const bool write_values = t.get_or<bool>("write_values", false);
    t.finish();
    root.finish();
    require(opt.dt > 0.0 && opt.dt <= 1e-2, "dt must lie in (0, 1e-2]", "thresholds.dt");
    require(opt.t_max > 0.0, "t_max must be positive", "thresholds.t_max");
    require(t_cut > 0.0 && t_cut <= opt.t_max, "t_cut must lie in (0, t_max]", "thresholds.t_cut");
    require(opt.max_inventory >= 0, "max_inventory must be >= 0", "thresholds.max_inventory");
    for (double p2 : compare)
        require(p2 > 0.0 && p2 < model.prices[0], "compared online prices must lie in (0, p_1)",
                "thresholds.compare_prices");

    struct Row {
        double p2;
        double slope;
        double width;
        long theta_cut;
    };
    auto mean_width = [](const ThresholdTable& th, double lo, double hi) {
        std::vector<double> ts;
        for (double b : th.breakpoints())
            if (b >= lo && b <= hi) ts.push_back(b);
        return ts.size() < 2 ? 0.0 : (ts.back() - ts.front()) / static_cast<double>(ts.size() - 1);
    };

    const ModelParams base(model.rates, model.prices, 1, opt.t_max);
    const ValueGrid grid = compute_optimal_thresholds(base, opt);
    const ExtrapolatedOptimal eo = build_eo(grid, t_cut);
    std::vector<Row> rows{{model.prices[1], eo.slope, mean_width(grid.thresholds, 0.8 * t_cut, t_cut),
                           grid.thresholds.value_at(t_cut)}};
    for (double p2 : compare) {
        const ModelParams alt(model.rates, {model.prices[0], p2}, 1, opt.t_max);
        const ValueGrid g = compute_optimal_thresholds(alt, opt);
        rows.push_back({p2, threshold_slope(g.thresholds, 0.8 * t_cut, t_cut),
                        mean_width(g.thresholds, 0.8 * t_cut, t_cut), g.thresholds.value_at(t_cut)});
    }

    std::ostringstream theta_csv, table_csv;
    grid.thresholds.write_csv(theta_csv);
    table_csv << "p2,slope,mean_step_width,theta_at_t_cut\n";
    json cmp = json::array();
    for (const auto& r : rows) {
        table_csv << Num{r.p2} << ',' << Num{r.slope} << ',' << Num{r.width} << ',' << r.theta_cut << '\n';
        cmp.push_back({{"p2", r.p2}, {"slope", r.slope}, {"mean_step_width", r.width}, {"theta_at_t_cut", r.theta_cut}});
    }
    json report{{"command", "thresholds"},
                {"model", {{"rates", model.rates}, {"prices", model.prices}}},
                {"dt", grid.dt},
                {"t_max", grid.t_max},
                {"max_inventory", grid.max_inventory},
                {"t_cut", t_cut},
                {"breakpoints", grid.thresholds.size()},
                {"eo_slope", eo.slope},
                {"theta_at_t_cut", grid.thresholds.value_at(t_cut)},
                {"price_comparison", cmp}};

    CommandResult res{c.output,
                      {{".json", stamped_json(report, ctx)},
                       {".csv", stamped_csv(table_csv.str(), ctx)},
                       {"_theta.csv", stamped_csv(theta_csv.str(), ctx)},
                       {"_eo.json", config::policy_to_json(eo).dump(2) + "\n"}},
                      {}};
    if (write_values) {
        std::ostringstream v;
        grid.write_values_csv(v);
        res.files.push_back({"_values.csv", stamped_csv(v.str(), ctx)});
    }
    std::ostringstream summary;
    summary << "thresholds: theta(" << t_cut << ")=" << grid.thresholds.value_at(t_cut)
            << " eo_slope=" << format_double(eo.slope) << " step_width=" << format_double(rows.front().width);
    res.summary = summary.str();
    return res;
}

// ------------------------------------------------------------------ driver

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<long> reps;
    std::optional<std::string> out;
    std::optional<long> threads;
    bool deterministic = false;
};

inline json apply_overrides(json cfg, const std::string& command, const Flags& f) {
    if (!cfg.is_object()) throw ValidationError("expected an object", "config");
    if (command == "thresholds") {
        if (f.seed) throw ValidationError("does not apply to thresholds", "--seed");
        if (f.reps) throw ValidationError("does not apply to thresholds", "--reps");
    }
    if (f.seed) cfg["master_seed"] = *f.seed;
    if (f.reps) cfg["replications"] = *f.reps;
    if (f.out) cfg["output"] = *f.out;
    if (f.threads) cfg["threads"] = *f.threads;
    return cfg;
}

inline CommandResult run_command(const std::string& command, const json& cfg, const RunContext& ctx) {
    if (command == "simulate") return cmd_simulate(cfg, ctx);
    if (command == "sweep-beta") return cmd_sweep_beta(cfg, ctx);
    if (command == "dtmc") return cmd_dtmc(cfg, ctx);
    if (command == "excursion") return cmd_excursion(cfg, ctx);
    if (command == "thresholds") return cmd_thresholds(cfg, ctx);
    throw ValidationError("unknown command '" + command + "'");
}

inline std::string output_prefix(std::string out) {
    for (const char* ext : {".json", ".csv"}) {
        const std::string e(ext);
        if (out.size() > e.size() && out.compare(out.size() - e.size(), e.size(), e) == 0) {
            out.resize(out.size() - e.size());
            break;
        }
    }
    return out;
}

inline void write_outputs(const CommandResult& res, std::ostream& out) {
    if (res.output.empty()) {
        out << res.files.front().content;
        return;
    }
    const std::string prefix = output_prefix(res.output);
    const auto parent = std::filesystem::path(prefix).parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(parent, ec);
    }
    for (const auto& f : res.files) write_text_file(prefix + f.suffix, f.content);
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"Linear-threshold policies for two-class (and K-class) capacity allocation"};
    app.name("ltp");
    app.fallthrough();
    app.require_subcommand(1);
    Flags f;
    app.add_option("--config", f.config, "JSON config file")->required();
    app.add_option("--seed", f.seed, "master seed (overrides master_seed)");
    app.add_option("--reps", f.reps, "replications (overrides replications)");
    app.add_option("--out", f.out, "output prefix (overrides output)");
    app.add_option("--threads", f.threads, "worker threads, 0 = all cores (overrides threads)");
    app.add_flag("--deterministic", f.deterministic, "omit timestamps so reruns are byte-identical");
    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "estimate the regret of one policy on one instance"},
        {"sweep-beta", "regret over a grid of slopes, horizons and inventory ratios"},
        {"dtmc", "line-relative Markov chain: kernel, stationary law, bounds"},
        {"excursion", "excursion statistics, the deterministic LP and the crossing tail bound"},
        {"thresholds", "optimal thresholds by dynamic programming and the extrapolated policy"}};
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    std::vector<const char*> argv{"ltp"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        RunContext ctx{f.deterministic, f.deterministic ? std::string() : utc_timestamp()};
        if (f.threads && *f.threads < 0) throw ValidationError("must be >= 0", "--threads");
        if (f.reps && *f.reps < 0) throw ValidationError("must be >= 0", "--reps");
        const json cfg = apply_overrides(config::load_file(f.config), command, f);
        const CommandResult res = run_command(command, cfg, ctx);
        write_outputs(res, out);
        out << res.summary << '\n';
        return 0;
    } catch (const ValidationError& e) {
        err << "ltp " << command << ": invalid input: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "ltp " << command << ": error: " << e.what() << '\n';
        return 1;
    }
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return run_cli(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace ltp::cli
