#pragma once

// Optimal two-class thresholds from the continuous-time Bellman equation
//   dV(s,t)/dt = l1 (p1 + V(s-1,t) - V(s,t)) + l2 max(p2 + V(s-1,t) - V(s,t), 0),
// V(0,t) = V(s,0) = 0, integrated forward in remaining time with RK4, and the
// extrapolated-optimal policy built from them.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "ltpolicy/core.hpp"
#include "ltpolicy/csv.hpp"
#include "ltpolicy/error.hpp"
#include "ltpolicy/policies.hpp"

namespace ltp {

struct ValueGrid {
    double dt = 0.0;
    double t_max = 0.0;
    long max_inventory = 0;
    long stride = 1;               // V is kept every `stride` steps
    std::vector<double> times;     // remaining times of the kept columns
    std::vector<std::vector<double>> values;  // values[c][s]
    ThresholdTable thresholds;     // theta(t) on [0, t_max]

    double value(long s, std::size_t column) const {
        return values.at(column).at(static_cast<std::size_t>(s));
    }

    void write_values_csv(std::ostream& os) const {
        os << "s,t,V\n";
        for (std::size_t c = 0; c < times.size(); ++c)
            for (std::size_t s = 0; s < values[c].size(); ++s)
                os << s << ',' << Num{times[c]} << ',' << Num{values[c][s]} << '\n';
    }
};

struct DpOptions {
    double dt = 1e-3;
    double t_max = 120.0;
    long max_inventory = 0;        // 0 picks a size from the arrival rates
    long max_stored_columns = 2001;
    double tolerance = 1e-9;
};

inline long default_max_inventory(const ModelParams& p, double t_max) {
    return static_cast<long>(std::ceil(1.25 * p.total_rate() * t_max)) + 20;
}

inline ValueGrid compute_optimal_thresholds(const ModelParams& p, const DpOptions& opt = {}) {
    require(p.num_classes() == 2, "the threshold recursion is defined for two classes", "model.rates");
    require(opt.dt > 0.0 && opt.dt <= 1e-2, "dt must lie in (0, 1e-2]", "thresholds.dt");
    require(opt.t_max > 0.0, "t_max must be positive", "thresholds.t_max");
    const long S = opt.max_inventory > 0 ? opt.max_inventory : default_max_inventory(p, opt.t_max);
    require(S >= 1, "max_inventory must be >= 1", "thresholds.max_inventory");

    const double l1 = p.rate(0), l2 = p.rate(1);
    const double p1 = p.price(0), p2 = p.price(1);
    const long steps = std::lround(opt.t_max / opt.dt);
    require(steps >= 1, "t_max must cover at least one step", "thresholds.t_max");
    const auto n = static_cast<std::size_t>(S) + 1;

    ValueGrid g;
    g.dt = opt.dt;
    g.t_max = static_cast<double>(steps) * opt.dt;
    g.max_inventory = S;
    g.stride = std::max<long>(1, (steps + opt.max_stored_columns - 2) / std::max<long>(1, opt.max_stored_columns - 1));

    std::vector<double> v(n, 0.0), k1(n), k2(n), k3(n), k4(n), tmp(n), prev_dv(n, 0.0), dv(n, 0.0);
    auto rhs = [&](const std::vector<double>& x, std::vector<double>& out) {
        out[0] = 0.0;
        for (std::size_t s = 1; s < n; ++s) {
            const double d = x[s] - x[s - 1];
            out[s] = l1 * (p1 - d) + l2 * std::max(p2 - d, 0.0);
        }
    };

    std::vector<double> bp{0.0};
    std::vector<long> th{0};
    g.times.push_back(0.0);
    g.values.push_back(v);

    const double tol = opt.tolerance;
    auto fail = [&](const std::string& what, long k) {
        throw RuntimeError(what + " at t = " + std::to_string(static_cast<double>(k) * opt.dt) +
                           "; the step is too coarse, reduce dt");
    };

    for (long k = 1; k <= steps; ++k) {
        rhs(v, k1);
        for (std::size_t s = 0; s < n; ++s) tmp[s] = v[s] + 0.5 * opt.dt * k1[s];
        rhs(tmp, k2);
        for (std::size_t s = 0; s < n; ++s) tmp[s] = v[s] + 0.5 * opt.dt * k2[s];
        rhs(tmp, k3);
        for (std::size_t s = 0; s < n; ++s) tmp[s] = v[s] + opt.dt * k3[s];
        rhs(tmp, k4);
        for (std::size_t s = 0; s < n; ++s) {
            const double next = v[s] + opt.dt / 6.0 * (k1[s] + 2.0 * k2[s] + 2.0 * k3[s] + k4[s]);
            if (next < v[s] - tol) fail("value decreased in remaining time", k);
            v[s] = next;
        }

        long theta = 0;
        for (std::size_t s = 1; s < n; ++s) {
            dv[s] = v[s] - v[s - 1];
            if (dv[s] < -tol) fail("value decreased in inventory", k);
            if (s > 1 && dv[s] > dv[s - 1] + tol) fail("marginal value increased in inventory", k);
            if (dv[s] < prev_dv[s] - tol) fail("marginal value decreased in remaining time", k);
            if (p2 < dv[s]) ++theta;
        }
        prev_dv.swap(dv);

        if (theta >= S)
            throw RuntimeError("threshold reached max_inventory = " + std::to_string(S) +
                               " at t = " + std::to_string(static_cast<double>(k) * opt.dt) +
                               "; increase max_inventory");
        if (theta != th.back()) {
            bp.push_back(static_cast<double>(k) * opt.dt);
            th.push_back(theta);
        }
        if (k % g.stride == 0 || k == steps) {
            g.times.push_back(static_cast<double>(k) * opt.dt);
            g.values.push_back(v);
        }
    }
    g.thresholds = ThresholdTable(std::move(bp), std::move(th));
    return g;
}

// Least-squares slope of the (breakpoint, value) pairs with breakpoint in [lo, hi].
inline double threshold_slope(const ThresholdTable& table, double lo, double hi) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < table.size(); ++i) {
        const double t = table.breakpoints()[i];
        if (t >= lo && t <= hi) {
            xs.push_back(t);
            ys.push_back(static_cast<double>(table.values()[i]));
        }
    }
    if (xs.size() < 3)
        throw RuntimeError("only " + std::to_string(xs.size()) +
                           " threshold breakpoints in the fitting window; need at least 3");
    const double m = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= m;
    my /= m;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}

inline ExtrapolatedOptimal build_eo(const ThresholdTable& thresholds, double t_cut) {
    require(t_cut > 0.0, "t_cut must be positive", "thresholds.t_cut");
    return {thresholds.truncated(t_cut), t_cut, threshold_slope(thresholds, 0.8 * t_cut, t_cut)};
}

inline ExtrapolatedOptimal build_eo(const ValueGrid& grid, double t_cut) {
    require(t_cut <= grid.t_max, "t_cut must lie within the computed range", "thresholds.t_cut");
    return build_eo(grid.thresholds, t_cut);
}

}  // namespace ltp
