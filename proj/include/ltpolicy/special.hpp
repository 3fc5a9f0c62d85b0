#pragma once

// Poisson and Erlang probabilities plus fixed-order Gauss-Legendre rules.

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "ltpolicy/error.hpp"

namespace ltp {

// f(x, y): probability that a Poisson(x) variable equals y. Evaluated in log space.
inline double poisson_pmf(double x, long y) {
    require(x >= 0.0 && std::isfinite(x), "Poisson mean must be >= 0");
    require(y >= 0, "Poisson value must be >= 0");
    if (x == 0.0) return y == 0 ? 1.0 : 0.0;
    const double yd = static_cast<double>(y);
    return std::exp(yd * std::log(x) - x - std::lgamma(yd + 1.0));
}

// f+(x, y): probability that a Poisson(x) variable is >= y.
inline double poisson_tail(double x, long y) {
    require(x >= 0.0 && std::isfinite(x), "Poisson mean must be >= 0");
    require(y >= 0, "Poisson value must be >= 0");
    if (y == 0) return 1.0;
    if (x == 0.0) return 0.0;
    // P(N >= y) = P(Gamma(y, 1) <= x)
    return boost::math::gamma_p(static_cast<double>(y), x);
}

// h(w, x, y): Erlang density with shape w and rate x, evaluated at y.
inline double erlang_pdf(long w, double x, double y) {
    require(w >= 1, "Erlang shape must be >= 1");
    require(x > 0.0 && std::isfinite(x), "Erlang rate must be > 0");
    require(y >= 0.0, "Erlang argument must be >= 0");
    if (y == 0.0) return w == 1 ? x : 0.0;
    const double wd = static_cast<double>(w);
    return std::exp(wd * std::log(x) + (wd - 1.0) * std::log(y) - x * y - std::lgamma(wd));
}

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    template <class F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
        return s;
    }
};

// n-point Gauss-Legendre rule mapped to [a, b]. Roots of P_n by Newton's
// method from the usual cosine initial guesses.
inline QuadratureRule gauss_legendre(int n, double a = 0.0, double b = 1.0) {
    require(n >= 1, "quadrature order must be >= 1");
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[lo] = mid - half * z;
        rule.nodes[hi] = mid + half * z;
        rule.weights[lo] = half * w;
        rule.weights[hi] = half * w;
    }
    return rule;
}

}  // namespace ltp
