#pragma once

// Excursions of the beta-LT sample path around the beta-line, the two-class
// deterministic LP, and the crossing-probability tail bound for alpha above
// the total arrival rate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ltpolicy/core.hpp"
#include "ltpolicy/error.hpp"
#include "ltpolicy/parallel.hpp"
#include "ltpolicy/random.hpp"

namespace ltp {

// Root in (0, 1) of nu e^{-nu} = r e^{-r}, r = lambda12 / beta > 1.
inline double solve_nu(double lambda12, double beta) {
    require(beta > 0.0, "beta must be positive", "beta");
    require(lambda12 > beta, "need beta < lambda_12 so that lambda_12 / beta > 1", "beta");
    const double r = lambda12 / beta;
    const double target = r * std::exp(-r);
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid * std::exp(-mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct ExcursionStats {
    double nu = 0.0;
    double kappa = 0.0;
    double expected_above = 0.0;
    double expected_below = 0.0;
    double above_fraction = 0.0;  // E[A] / (E[A] + E[B])
};

inline ExcursionStats excursion_stats(double lambda1, double lambda2, double beta) {
    require(lambda1 > 0.0 && lambda2 > 0.0, "rates must be positive", "model.rates");
    require(beta > lambda1 && beta < lambda1 + lambda2,
            "need lambda_1 < beta < lambda_1 + lambda_2", "beta");
    const double l12 = lambda1 + lambda2;
    ExcursionStats s;
    s.nu = solve_nu(l12, beta);
    s.kappa = l12 - beta * s.nu;
    s.expected_above = 1.0 / s.kappa;
    s.expected_below = (l12 - beta) / (s.kappa * (beta - lambda1));
    s.above_fraction = s.expected_above / (s.expected_above + s.expected_below);
    const double direct = (beta - lambda1) / lambda2;
    if (std::abs(s.above_fraction - direct) > 1e-12 * std::max(1.0, direct))
        throw RuntimeError("excursion fraction disagrees with (beta - lambda_1) / lambda_2");
    return s;
}

struct DlpSolution {
    double z1 = 0.0;
    double z2 = 0.0;
    double objective = 0.0;
};

// max p1 l1 T z1 + p2 l2 T z2  s.t.  l1 T z1 + l2 T z2 <= n,  z in [0,1]^2.
// The inventory may be fractional here.
inline DlpSolution solve_dlp(std::span<const double> rates, std::span<const double> prices,
                             double inventory, double horizon) {
    require(rates.size() == 2 && prices.size() == 2, "the LP is defined for two classes",
            "model.rates");
    require(inventory >= 0.0 && horizon > 0.0, "need n >= 0 and T > 0");
    const double d1 = rates[0] * horizon;
    const double d2 = rates[1] * horizon;
    DlpSolution sol;
    if (d1 >= inventory) {
        sol.z1 = inventory / d1;
    } else {
        sol.z1 = 1.0;
        sol.z2 = std::min(1.0, (inventory - d1) / d2);
    }
    sol.objective = prices[0] * d1 * sol.z1 + prices[1] * d2 * sol.z2;
    return sol;
}

inline DlpSolution solve_dlp(const ModelParams& p) {
    require(p.num_classes() == 2, "the LP is defined for two classes", "model.rates");
    return solve_dlp(p.rates(), p.prices(), static_cast<double>(p.initial_inventory()), p.horizon());
}

// n exp(-delta^2 n / (2 lambda12 + 2 delta)), in units where alpha = 1.
inline double crossing_tail_bound(double lambda12, double delta, long n) {
    require(delta > 0.0, "delta must be positive (the bound is vacuous otherwise)", "delta");
    require(lambda12 > 0.0, "lambda_12 must be positive", "model.rates");
    require(n >= 1, "n must be >= 1", "n");
    const double nd = static_cast<double>(n);
    return nd * std::exp(-delta * delta * nd / (2.0 * lambda12 + 2.0 * delta));
}

struct ExcursionSample {
    long excursions = 0;
    double mean_above = 0.0;
    double se_above = 0.0;
    double mean_below = 0.0;
    double se_below = 0.0;
};

// Simulates complete excursions of the beta-LT path in original time units.
// Above or on the line every arrival (rate lambda_12) is accepted and the
// line-relative position X grows at rate beta between arrivals; the phase
// ends when an arrival drops X below zero. Below the line only offline
// arrivals (rate lambda_1) move X, and the phase ends when X climbs back to 0.
inline ExcursionSample simulate_excursions(double lambda1, double lambda2, double beta,
                                           long excursions, std::uint64_t seed) {
    require(excursions >= 1, "need at least one excursion", "excursions");
    require(beta > lambda1 && beta < lambda1 + lambda2,
            "need lambda_1 < beta < lambda_1 + lambda_2", "beta");
    const double l12 = lambda1 + lambda2;
    Rng rng(Rng::derive_key({seed, 0}, 0xE1));
    std::vector<double> above(static_cast<std::size_t>(excursions));
    std::vector<double> below(static_cast<std::size_t>(excursions));
    for (long e = 0; e < excursions; ++e) {
        double x = 0.0;
        double a = 0.0;
        while (x >= 0.0) {
            const double gap = rng.exponential(l12);
            a += gap;
            x += beta * gap - 1.0;
        }
        double b = 0.0;
        for (;;) {
            const double gap = rng.exponential(lambda1);
            if (x + beta * gap >= 0.0) {
                b += -x / beta;
                break;
            }
            b += gap;
            x += beta * gap - 1.0;
        }
        above[static_cast<std::size_t>(e)] = a;
        below[static_cast<std::size_t>(e)] = b;
    }
    const SampleStats sa = sample_stats(above);
    const SampleStats sb = sample_stats(below);
    return {excursions, sa.mean, sa.std_error, sb.mean, sb.std_error};
}

struct CrossingFrequency {
    long n = 0;
    long replications = 0;
    double frequency = 0.0;
    double std_error = 0.0;
    double bound = 0.0;
};

// Fraction of all-accept paths (alpha = 1, so T = n) whose inventory drops
// strictly below the lambda_12-line at some point of the horizon.
inline CrossingFrequency simulate_crossing_frequency(double lambda1, double lambda2, long n, long reps,
                                                     std::uint64_t seed, unsigned threads = 0) {
    const double l12 = lambda1 + lambda2;
    require(l12 < 1.0, "the bound applies when lambda_1 + lambda_2 < alpha = 1", "model.rates");
    require(n >= 1 && reps >= 1, "need n >= 1 and reps >= 1");
    const double T = static_cast<double>(n);
    std::vector<double> hit(static_cast<std::size_t>(reps), 0.0);
    parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t rep) {
        Rng rng({seed, rep}, 0xC7);
        double u = 0.0;
        long k = 0;
        for (;;) {
            u += rng.exponential(l12);
            if (u > T) break;
            ++k;
            // Between arrivals the line falls while inventory stays put, so
            // the first violation, if any, happens at an arrival.
            if (static_cast<double>(n - k) < l12 * (T - u)) {
                hit[rep] = 1.0;
                break;
            }
        }
    });
    const SampleStats s = sample_stats(hit);
    return {n, reps, s.mean, s.std_error, crossing_tail_bound(l12, 1.0 - l12, n)};
}

}  // namespace ltp
