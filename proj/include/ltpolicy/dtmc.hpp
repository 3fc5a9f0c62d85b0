#pragma once

// Discrete-time Markov chain of the beta-relative inventory position.
//
// Everything here works in rescaled units where the slope of the line is 1:
// given raw rates (lambda_1, lambda_2) and slope beta, time is stretched by
// beta so the chain only depends on lambda_1 / beta and lambda_12 / beta.
// The state X is "inventory minus t" observed at integer remaining times.
//
// The state space is truncated to [-M, M]; probability that would leave the
// window is folded onto the boundary state it would have crossed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ltpolicy/csv.hpp"
#include "ltpolicy/error.hpp"
#include "ltpolicy/parallel.hpp"
#include "ltpolicy/random.hpp"
#include "ltpolicy/special.hpp"

namespace ltp {

struct ChainRates {
    double lambda1 = 0.0;   // offline rate per unit of rescaled time
    double lambda12 = 0.0;  // total rate per unit of rescaled time
};

inline ChainRates rescale(double lambda1, double lambda2, double beta) {
    require(lambda1 > 0.0 && lambda2 > 0.0, "rates must be positive", "dtmc.rates");
    require(beta > 0.0, "beta must be positive", "dtmc.beta");
    return {lambda1 / beta, (lambda1 + lambda2) / beta};
}

// Row-banded transition matrix on the integer states [lo, hi]. Each row's
// non-zeros form one contiguous run of columns starting at `first`.
class BandedKernel {
public:
    struct Row {
        int first = 0;
        std::vector<double> q;
    };

    BandedKernel() = default;
    BandedKernel(int lo, int hi) : lo_(lo), hi_(hi), rows_(static_cast<std::size_t>(hi - lo + 1)) {}

    int lo() const noexcept { return lo_; }
    int hi() const noexcept { return hi_; }
    int size() const noexcept { return hi_ - lo_ + 1; }

    Row& row(int i) { return rows_.at(static_cast<std::size_t>(i - lo_)); }
    const Row& row(int i) const { return rows_.at(static_cast<std::size_t>(i - lo_)); }

    double entry(int i, int j) const {
        const Row& r = row(i);
        const int k = j - r.first;
        if (k < 0 || k >= static_cast<int>(r.q.size())) return 0.0;
        return r.q[static_cast<std::size_t>(k)];
    }

    double row_sum(int i) const {
        double s = 0.0;
        for (double v : row(i).q) s += v;
        return s;
    }

    // out = pi * Q, with pi indexed from lo.
    void left_multiply(std::span<const double> pi, std::span<double> out) const {
        std::fill(out.begin(), out.end(), 0.0);
        for (int i = lo_; i <= hi_; ++i) {
            const double w = pi[static_cast<std::size_t>(i - lo_)];
            if (w == 0.0) continue;
            const Row& r = row(i);
            double* dst = out.data() + (r.first - lo_);
            for (std::size_t k = 0; k < r.q.size(); ++k) dst[k] += w * r.q[k];
        }
    }

    // Entries not above min_entry are left out.
    void write_csv(std::ostream& os, double min_entry = 0.0) const {
        os << "i,j,q_ij\n";
        for (int i = lo_; i <= hi_; ++i) {
            const Row& r = row(i);
            for (std::size_t k = 0; k < r.q.size(); ++k)
                if (r.q[k] > min_entry) os << i << ',' << r.first + static_cast<int>(k) << ',' << Num{r.q[k]} << '\n';
        }
    }

private:
    int lo_ = 0;
    int hi_ = -1;
    std::vector<Row> rows_;
};

class DtmcModel {
public:
    static constexpr int kDefaultTruncation = 400;
    static constexpr int kDefaultNodes = 64;

    DtmcModel(ChainRates rates, int truncation = kDefaultTruncation,
              int quadrature_nodes = kDefaultNodes)
        : rates_(rates), m_(truncation), rule_(gauss_legendre(quadrature_nodes)) {
        require(rates.lambda1 > 0.0 && rates.lambda12 > rates.lambda1,
                "need 0 < lambda_1 < lambda_12", "dtmc.rates");
        require(truncation >= 2, "truncation must be >= 2", "dtmc.truncation");
        require(quadrature_nodes >= 2, "quadrature order must be >= 2", "dtmc.quadrature_nodes");
        build();
    }

    const ChainRates& rates() const noexcept { return rates_; }
    int truncation() const noexcept { return m_; }
    int quadrature_nodes() const noexcept { return static_cast<int>(rule_.nodes.size()); }
    const QuadratureRule& rule() const noexcept { return rule_; }
    // Truncated kernel with out-of-window mass folded onto +-M.
    const BandedKernel& kernel() const noexcept { return kernel_; }
    // Mass of row i that lies outside [-M, M] before folding.
    double outside_mass(int i) const { return outside_.at(static_cast<std::size_t>(i + m_)); }

    // Untruncated q_{i,j}; the above-to-below case integrates the crossing
    // time against the Erlang density of the (i+1)-th arrival.
    double kernel_entry(int i, int j) const {
        require(std::abs(i) <= m_ && std::abs(j) <= m_, "state outside truncation window");
        return raw_entry(rates_, rule_, i, j);
    }

    static double raw_entry(const ChainRates& r, const QuadratureRule& rule, int i, int j) {
        if (i >= 0 && j >= 1 && j <= i + 1) return poisson_pmf(r.lambda12, i - j + 1);
        if (i <= -1 && j <= i + 1) return poisson_pmf(r.lambda1, i - j + 1);
        if (i >= 0 && j <= 0) {
            return rule.integrate([&](double u) {
                return erlang_pdf(i + 1, r.lambda12, u) * poisson_pmf((1.0 - u) * r.lambda1, -j);
            });
        }
        return 0.0;
    }

private:
    void build() {
        const int M = m_;
        kernel_ = BandedKernel(-M, M);
        outside_.assign(static_cast<std::size_t>(2 * M + 1), 0.0);
        const std::size_t nodes = rule_.nodes.size();

        // below[k][m] = f((1 - u_k) lambda_1, m) for m = 0..M, by recurrence.
        std::vector<std::vector<double>> below(nodes, std::vector<double>(static_cast<std::size_t>(M) + 1));
        std::vector<double> below_tail(nodes);
        for (std::size_t k = 0; k < nodes; ++k) {
            const double x = (1.0 - rule_.nodes[k]) * rates_.lambda1;
            double f = std::exp(-x);
            for (int m = 0; m <= M; ++m) {
                below[k][static_cast<std::size_t>(m)] = f;
                f *= x / (m + 1.0);
            }
            below_tail[k] = poisson_tail(x, M + 1);
        }

        std::vector<double> weighted(nodes);
        for (int i = -M; i <= M; ++i) {
            auto& row = kernel_.row(i);
            row.first = -M;
            if (i >= 0) {
                const int top = std::min(i + 1, M);
                row.q.assign(static_cast<std::size_t>(top + M + 1), 0.0);
                for (std::size_t k = 0; k < nodes; ++k)
                    weighted[k] = rule_.weights[k] * erlang_pdf(i + 1, rates_.lambda12, rule_.nodes[k]);
                for (int m = 0; m <= M; ++m) {
                    double s = 0.0;
                    for (std::size_t k = 0; k < nodes; ++k) s += weighted[k] * below[k][static_cast<std::size_t>(m)];
                    row.q[static_cast<std::size_t>(M - m)] = s;
                }
                for (int j = 1; j <= top; ++j)
                    row.q[static_cast<std::size_t>(j + M)] = poisson_pmf(rates_.lambda12, i - j + 1);
                double tail = 0.0;
                for (std::size_t k = 0; k < nodes; ++k) tail += weighted[k] * below_tail[k];
                double over = 0.0;
                if (i == M) over = poisson_pmf(rates_.lambda12, 0);  // j = M + 1
                row.q.front() += tail;
                row.q.back() += over;
                outside_[static_cast<std::size_t>(i + M)] = tail + over;
            } else {
                row.q.assign(static_cast<std::size_t>(i + 1 + M + 1), 0.0);
                for (int j = -M; j <= i + 1; ++j)
                    row.q[static_cast<std::size_t>(j + M)] = poisson_pmf(rates_.lambda1, i - j + 1);
                // j < -M  <=>  more than i + 1 + M offline arrivals.
                const double tail = poisson_tail(rates_.lambda1, i + M + 2);
                row.q.front() += tail;
                outside_[static_cast<std::size_t>(i + M)] = tail;
            }
        }
    }

    ChainRates rates_;
    int m_;
    QuadratureRule rule_;
    BandedKernel kernel_;
    std::vector<double> outside_;
};

// Largest |q_ij(fixed Gauss-Legendre) - q_ij(adaptive Gauss-Kronrod)| over
// `samples` random above-to-below entries with |i|, |j| <= reach.
inline double quadrature_validation_error(const DtmcModel& model, int samples = 100,
                                          std::uint64_t seed = 1, int reach = 12) {
    Rng rng(seed);
    const ChainRates r = model.rates();
    const int span = std::min(reach, model.truncation());
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        const int i = static_cast<int>(rng() % static_cast<std::uint64_t>(span + 1));
        const int j = -static_cast<int>(rng() % static_cast<std::uint64_t>(span + 1));
        auto integrand = [&](double u) {
            return erlang_pdf(i + 1, r.lambda12, u) * poisson_pmf((1.0 - u) * r.lambda1, -j);
        };
        const double ref =
            boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, 1.0, 20, 1e-14);
        worst = std::max(worst, std::abs(ref - model.kernel_entry(i, j)));
    }
    return worst;
}

struct StationaryDist {
    int truncation = 0;
    std::vector<double> pi;  // pi[i + truncation] for i in [-M, M]
    double first_moment_abs = 0.0;
    double pi0 = 0.0;
    double residual = 0.0;  // ||pi Q - pi||_1 on the truncated kernel
    long iterations = 0;
    std::string method;

    double at(int i) const { return pi.at(static_cast<std::size_t>(i + truncation)); }

    // Wraps an arbitrary distribution on [-M, M] (odd length, centred on 0).
    static StationaryDist from_probabilities(std::vector<double> probs) {
        require(probs.size() % 2 == 1, "distribution must be centred on state 0");
        StationaryDist d;
        d.truncation = static_cast<int>(probs.size() / 2);
        d.pi = std::move(probs);
        d.refresh_moments();
        return d;
    }

    void refresh_moments() {
        std::vector<double> weighted(pi.size());
        for (std::size_t k = 0; k < pi.size(); ++k)
            weighted[k] = std::abs(static_cast<double>(static_cast<int>(k) - truncation)) * pi[k];
        first_moment_abs = compensated_sum(weighted);
        pi0 = pi[static_cast<std::size_t>(truncation)];
    }
};

struct StationaryOptions {
    double tolerance = 1e-10;     // target ||pi Q - pi||_1
    long max_iterations = 200000;
    int dense_fallback_limit = 1000;  // largest M for the dense solve
};

inline double stationary_residual(const BandedKernel& q, std::span<const double> pi) {
    std::vector<double> next(pi.size());
    q.left_multiply(pi, next);
    double r = 0.0;
    for (std::size_t k = 0; k < pi.size(); ++k) r += std::abs(next[k] - pi[k]);
    return r;
}

// Power iteration on the truncated kernel; if it has not reached the target
// residual within the budget, solve (Q^T - I) pi = 0, sum(pi) = 1 densely and
// polish the result with a few more power steps.
inline StationaryDist stationary(const DtmcModel& model, const StationaryOptions& opt = {}) {
    const ChainRates r = model.rates();
    require(r.lambda1 < 1.0 && r.lambda12 > 1.0,
            "stationary distribution needs lambda_1 < beta < lambda_12 (rescaled: lambda_1 < 1 < lambda_12)",
            "dtmc.beta");
    const BandedKernel& q = model.kernel();
    const int M = model.truncation();
    const std::size_t n = static_cast<std::size_t>(2 * M + 1);

    StationaryDist d;
    d.truncation = M;
    d.pi.assign(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n);

    auto normalize = [](std::vector<double>& v) {
        const double s = compensated_sum(v);
        for (double& x : v) x /= s;
    };

    constexpr long check_every = 25;
    long it = 0;
    double res = 1.0;
    while (it < opt.max_iterations) {
        q.left_multiply(d.pi, next);
        normalize(next);
        d.pi.swap(next);
        ++it;
        if (it % check_every == 0) {
            res = stationary_residual(q, d.pi);
            if (res <= opt.tolerance) break;
        }
    }
    d.method = "power";

    if (res > opt.tolerance) {
        if (M > opt.dense_fallback_limit)
            throw RuntimeError("stationary solve did not converge at truncation M = " +
                               std::to_string(M) + "; increase the truncation or iteration budget");
        const int N = static_cast<int>(n);
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(N, N);
        for (int i = -M; i <= M; ++i) {
            const auto& row = q.row(i);
            for (std::size_t k = 0; k < row.q.size(); ++k)
                a(row.first + static_cast<int>(k) + M, i + M) += row.q[k];
        }
        a -= Eigen::MatrixXd::Identity(N, N);
        a.row(N - 1).setOnes();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
        rhs(N - 1) = 1.0;
        const Eigen::VectorXd sol = a.partialPivLu().solve(rhs);
        for (std::size_t k = 0; k < n; ++k)
            d.pi[k] = std::max(sol(static_cast<Eigen::Index>(k)), 0.0);
        normalize(d.pi);
        for (int polish = 0; polish < 50; ++polish) {
            q.left_multiply(d.pi, next);
            normalize(next);
            d.pi.swap(next);
        }
        res = stationary_residual(q, d.pi);
        d.method = "dense";
    }

    d.iterations = it;
    d.residual = res;
    if (!(res <= 1e-8))
        throw RuntimeError("stationary residual " + std::to_string(res) + " above 1e-8 at M = " +
                           std::to_string(M) + "; increase the truncation");
    d.refresh_moments();
    return d;
}

// (1 / pi_0) * sum_i |i| pi_i: upper bound on E[|X_0| | X_T = 0] for every T.
inline double abs_position_bound(const StationaryDist& d) {
    require(d.pi0 > 0.0, "pi_0 must be positive");
    return d.first_moment_abs / d.pi0;
}

inline void write_stationary_csv(std::ostream& os, const StationaryDist& d) {
    os << "i,pi_i\n";
    for (int i = -d.truncation; i <= d.truncation; ++i) os << i << ',' << Num{d.at(i)} << '\n';
}

// Chain watched only on or above the line (states >= 0): a jump below is
// redirected to 0, the next state it occupies on the line.
inline BandedKernel restricted_plus_kernel(const DtmcModel& model) {
    const int M = model.truncation();
    const double l12 = model.rates().lambda12;
    BandedKernel k(0, M);
    for (int i = 0; i <= M; ++i) {
        auto& row = k.row(i);
        row.first = 0;
        const int top = std::min(i + 1, M);
        row.q.assign(static_cast<std::size_t>(top + 1), 0.0);
        row.q[0] = poisson_tail(l12, i + 1);
        for (int j = 1; j <= top; ++j) row.q[static_cast<std::size_t>(j)] = model.kernel_entry(i, j);
        if (i == M) row.q.back() += poisson_pmf(l12, 0);
    }
    return k;
}

// Arrival-time embedded chain of a D/M/1 queue with unit interarrival time
// and service rate mu: b_l = e^{-mu} mu^l / l!, row i = (1 - sum_{l<=i} b_l,
// b_i, ..., b_0). Built independently of the DTMC code as a cross-check.
inline BandedKernel dm1_arrival_kernel(double mu, int M) {
    std::vector<double> b(static_cast<std::size_t>(M) + 2);
    b[0] = std::exp(-mu);
    for (std::size_t l = 1; l < b.size(); ++l) b[l] = b[l - 1] * mu / static_cast<double>(l);
    BandedKernel k(0, M);
    for (int i = 0; i <= M; ++i) {
        auto& row = k.row(i);
        row.first = 0;
        const int top = std::min(i + 1, M);
        row.q.assign(static_cast<std::size_t>(top + 1), 0.0);
        double cum = 0.0;
        for (int l = 0; l <= i; ++l) cum += b[static_cast<std::size_t>(l)];
        row.q[0] = 1.0 - cum;
        for (int j = 1; j <= i + 1; ++j) {
            const double v = b[static_cast<std::size_t>(i + 1 - j)];
            row.q[static_cast<std::size_t>(std::min(j, M))] += v;
        }
    }
    return k;
}

// Histogram density of ceil(A) - A, where A is the time an excursion spends
// on or above the line (rescaled units).
struct GEstimate {
    std::vector<long> counts;
    long samples = 0;

    int bins() const noexcept { return static_cast<int>(counts.size()); }
    double bin_width() const noexcept { return 1.0 / static_cast<double>(counts.size()); }
    double density(int b) const {
        return static_cast<double>(counts.at(static_cast<std::size_t>(b))) /
               (static_cast<double>(samples) * bin_width());
    }
    double mass() const {
        double s = 0.0;
        for (int b = 0; b < bins(); ++b) s += density(b) * bin_width();
        return s;
    }
};

// Duration of the above-the-line phase of one excursion started on the line.
inline double sample_above_duration(const ChainRates& r, Rng& rng) {
    double u = 0.0;
    long k = 0;
    for (;;) {
        u += rng.exponential(r.lambda12);
        ++k;
        if (u < static_cast<double>(k)) return u;  // X = u - k < 0: jumped below the line
    }
}

inline GEstimate estimate_g(const ChainRates& r, long excursions, std::uint64_t seed, int bins = 64) {
    require(excursions >= 1, "need at least one excursion", "dtmc.g_excursions");
    require(bins >= 1, "need at least one bin", "dtmc.g_bins");
    GEstimate g;
    g.counts.assign(static_cast<std::size_t>(bins), 0);
    g.samples = excursions;
    Rng rng(Rng::derive_key({seed, 0}, 0x67));
    for (long e = 0; e < excursions; ++e) {
        const double a = sample_above_duration(r, rng);
        const double frac = std::ceil(a) - a;
        auto b = static_cast<int>(frac * bins);
        g.counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))]++;
    }
    return g;
}

namespace detail {

// phi[b][m] = (1 / width) * integral over bin b of f(u lambda_1, m) du.
inline std::vector<std::vector<double>> bin_averaged_pmf(const GEstimate& g, double lambda1, int M) {
    const QuadratureRule unit = gauss_legendre(8);
    const double w = g.bin_width();
    std::vector<std::vector<double>> phi(static_cast<std::size_t>(g.bins()),
                                         std::vector<double>(static_cast<std::size_t>(M) + 1, 0.0));
    for (int b = 0; b < g.bins(); ++b) {
        for (std::size_t k = 0; k < unit.nodes.size(); ++k) {
            const double u = (b + unit.nodes[k]) * w;
            const double x = u * lambda1;
            double f = std::exp(-x);
            for (int m = 0; m <= M; ++m) {
                phi[static_cast<std::size_t>(b)][static_cast<std::size_t>(m)] += unit.weights[k] * f;
                f *= x / (m + 1.0);
            }
        }
    }
    return phi;
}

}  // namespace detail

// Chain watched only on or below the line (states <= 0). Rows i <= -1 copy
// the full kernel; row 0 mixes f(u lambda_1, -j) over the estimated g.
inline BandedKernel restricted_minus_kernel(const DtmcModel& model, const GEstimate& g) {
    require(g.samples > 0 && std::abs(g.mass() - 1.0) <= 1e-9, "g estimate is not a normalized density");
    const int M = model.truncation();
    const double l1 = model.rates().lambda1;
    BandedKernel k(-M, 0);
    for (int i = -M; i <= -1; ++i) {
        auto& row = k.row(i);
        const auto& full = model.kernel().row(i);
        row.first = full.first;
        row.q = full.q;
    }
    const auto phi = detail::bin_averaged_pmf(g, l1, M);
    auto& row0 = k.row(0);
    row0.first = -M;
    row0.q.assign(static_cast<std::size_t>(M) + 1, 0.0);
    double total = 0.0;
    for (int m = 0; m <= M; ++m) {
        double s = 0.0;
        for (int b = 0; b < g.bins(); ++b)
            s += g.density(b) * g.bin_width() * phi[static_cast<std::size_t>(b)][static_cast<std::size_t>(m)];
        row0.q[static_cast<std::size_t>(M - m)] = s;
        total += s;
    }
    row0.q.front() += std::max(0.0, 1.0 - total);  // mass beyond -M
    return k;
}

// Monte Carlo standard error of each q-_{0,-m} entry (m = 0..M) implied by
// the histogram counts behind g.
inline std::vector<double> restricted_minus_row0_stderr(const DtmcModel& model, const GEstimate& g) {
    const int M = model.truncation();
    const auto phi = detail::bin_averaged_pmf(g, model.rates().lambda1, M);
    std::vector<double> se(static_cast<std::size_t>(M) + 1, 0.0);
    const double n = static_cast<double>(g.samples);
    for (int m = 0; m <= M; ++m) {
        double mean = 0.0;
        for (int b = 0; b < g.bins(); ++b)
            mean += static_cast<double>(g.counts[static_cast<std::size_t>(b)]) / n *
                    phi[static_cast<std::size_t>(b)][static_cast<std::size_t>(m)];
        double var = 0.0;
        for (int b = 0; b < g.bins(); ++b) {
            const double d = phi[static_cast<std::size_t>(b)][static_cast<std::size_t>(m)] - mean;
            var += static_cast<double>(g.counts[static_cast<std::size_t>(b)]) / n * d * d;
        }
        se[static_cast<std::size_t>(m)] = std::sqrt(var / n);
    }
    return se;
}

// One unit of rescaled time of the actual sample path, simulated from the
// arrival process rather than the kernel. On or above the line every arrival
// (rate lambda_12) is accepted until the (x+1)-th drops the path below; from
// then on only offline arrivals (rate lambda_1) move it.
inline long chain_step(long x, const ChainRates& r, Rng& rng) {
    double tau = 0.0;
    long base = x + 1;
    if (x >= 0) {
        long k = 0;
        for (;;) {
            tau += rng.exponential(r.lambda12);
            if (tau >= 1.0) return x + 1 - k;
            if (++k == x + 1) break;
        }
        base = 0;
    }
    long m = 0;
    for (;;) {
        tau += rng.exponential(r.lambda1);
        if (tau >= 1.0) break;
        ++m;
    }
    return base - m;
}

inline std::vector<long> simulate_chain_path(const ChainRates& r, long start, long steps,
                                             std::uint64_t seed) {
    Rng rng(Rng::derive_key({seed, 0}, 0x5A));
    std::vector<long> path;
    path.reserve(static_cast<std::size_t>(steps) + 1);
    path.push_back(start);
    long x = start;
    for (long s = 0; s < steps; ++s) {
        x = chain_step(x, r, rng);
        path.push_back(x);
    }
    return path;
}

struct AbsPositionEstimate {
    long steps = 0;
    double mean_abs = 0.0;
    double std_error = 0.0;
};

// E[|X| after `steps` steps | start], for each requested horizon, from
// independent replications (replication i uses stream (seed, i)).
inline std::vector<AbsPositionEstimate> simulate_abs_position(const ChainRates& r, long start,
                                                              std::vector<long> horizons, long reps,
                                                              std::uint64_t seed, unsigned threads = 0) {
    require(reps >= 1, "need at least one replication");
    std::sort(horizons.begin(), horizons.end());
    const long longest = horizons.empty() ? 0 : horizons.back();
    std::vector<std::vector<double>> values(horizons.size(), std::vector<double>(static_cast<std::size_t>(reps)));
    parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t rep) {
        Rng rng({seed, rep}, 0x5B);
        long x = start;
        std::size_t h = 0;
        for (long s = 1; s <= longest; ++s) {
            x = chain_step(x, r, rng);
            while (h < horizons.size() && horizons[h] == s) {
                values[h][rep] = std::abs(static_cast<double>(x));
                ++h;
            }
        }
    });
    std::vector<AbsPositionEstimate> out;
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        const SampleStats s = sample_stats(values[h]);
        out.push_back({horizons[h], s.mean, s.std_error});
    }
    return out;
}

}  // namespace ltp
