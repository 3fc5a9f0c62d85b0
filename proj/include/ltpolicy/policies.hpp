#pragma once

// Accept/reject policies executed over an arrival realization.
//
// All runners share the same bookkeeping: class-0 customers are accepted
// while stock remains, and once stock is gone every further class-0 arrival
// pushes the inventory position one unit below zero. Rejected lower-class
// customers after a stockout are not counted.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "ltpolicy/core.hpp"
#include "ltpolicy/csv.hpp"
#include "ltpolicy/error.hpp"

namespace ltp {

struct BetaLT {
    double beta;
};

struct VectorBetaLT {
    std::vector<double> betas;  // K-1 slopes, strictly increasing
};

struct AcceptAll {};

// Step function theta(t) = values[i] for t in [breakpoints[i], breakpoints[i+1]).
class ThresholdTable {
public:
    ThresholdTable() = default;
    ThresholdTable(std::vector<double> breakpoints, std::vector<long> values)
        : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
        validate();
    }

    static ThresholdTable constant(long value) { return ThresholdTable({0.0}, {value}); }

    long value_at(double t) const {
        const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
        if (it == breakpoints_.begin()) return values_.front();
        return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
    }

    const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    const std::vector<long>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

    // Keeps the steps that start at or before t_end.
    ThresholdTable truncated(double t_end) const {
        std::vector<double> bp;
        std::vector<long> v;
        for (std::size_t i = 0; i < breakpoints_.size() && breakpoints_[i] <= t_end; ++i) {
            bp.push_back(breakpoints_[i]);
            v.push_back(values_[i]);
        }
        return ThresholdTable(std::move(bp), std::move(v));
    }

    static ThresholdTable read_csv(std::istream& is) {
        std::vector<double> bp;
        std::vector<long> v;
        std::string line;
        bool header_seen = false;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            if (!header_seen) {
                header_seen = true;
                if (line.rfind("t_breakpoint", 0) == 0) continue;
            }
            std::istringstream ls(line);
            double t = 0.0;
            long value = 0;
            char comma = 0;
            if (!(ls >> t >> comma >> value) || comma != ',')
                throw ValidationError("malformed threshold row at line " + std::to_string(lineno));
            bp.push_back(t);
            v.push_back(value);
        }
        return ThresholdTable(std::move(bp), std::move(v));
    }

    static ThresholdTable read_csv_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw RuntimeError("cannot open threshold table '" + path + "'");
        try {
            return read_csv(in);
        } catch (const ValidationError& e) {
            throw ValidationError(path + ": " + e.what());
        }
    }

    void write_csv(std::ostream& os) const {
        os << "t_breakpoint,theta_value\n";
        for (std::size_t i = 0; i < values_.size(); ++i)
            os << Num{breakpoints_[i]} << ',' << values_[i] << '\n';
    }

private:
    void validate() const {
        require(!values_.empty() && values_.size() == breakpoints_.size(),
                "threshold table needs matching, non-empty breakpoint and value lists");
        require(breakpoints_.front() == 0.0, "first threshold breakpoint must be t = 0");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            require(values_[i] >= 0, "threshold values must be non-negative");
            if (i > 0) {
                require(breakpoints_[i] > breakpoints_[i - 1],
                        "threshold breakpoints must be strictly increasing");
                require(values_[i] >= values_[i - 1],
                        "threshold function must be non-decreasing in remaining time");
            }
        }
    }

    std::vector<double> breakpoints_;
    std::vector<long> values_;
};

// Exact thresholds up to t_cut, then floor(theta(t_cut) + slope * (t - t_cut)).
struct ExtrapolatedOptimal {
    ThresholdTable base;
    double t_cut = 0.0;
    double slope = 0.0;

    long value_at(double t) const {
        if (t <= t_cut) return base.value_at(t);
        return static_cast<long>(
            std::floor(static_cast<double>(base.value_at(t_cut)) + slope * (t - t_cut)));
    }
};

using PolicySpec = std::variant<BetaLT, VectorBetaLT, ThresholdTable, AcceptAll, ExtrapolatedOptimal>;

struct SimOutcome {
    double revenue = 0.0;
    std::vector<long> accepted_per_class;
    long final_inventory_position = 0;
    bool crossed_beta_line = false;
    std::optional<double> first_cross_time;

    long total_accepted() const {
        long s = 0;
        for (long a : accepted_per_class) s += a;
        return s;
    }
};

namespace detail {

// Inventory position plus acceptance counts.
struct Ledger {
    long position;
    std::vector<long> accepted;

    Ledger(long n, int k) : position(n), accepted(static_cast<std::size_t>(k), 0) {}

    void offer(int cls, bool admissible) {
        if (cls == 0) {
            if (position > 0) ++accepted[0];
            --position;
        } else if (position > 0 && admissible) {
            ++accepted[static_cast<std::size_t>(cls)];
            --position;
        }
    }

    SimOutcome finish(const ModelParams& p) const {
        SimOutcome out;
        out.accepted_per_class = accepted;
        out.final_inventory_position = position;
        for (int j = 0; j < p.num_classes(); ++j)
            out.revenue += static_cast<double>(accepted[static_cast<std::size_t>(j)]) * p.price(j);
        return out;
    }
};

// Classes below `gated` are always accepted, class `gated` only when the
// inventory is at or above slope * t, classes above `gated` never.
struct LineRule {
    double slope;
    int gated;

    bool admits(int cls, long position, double t) const {
        if (cls < gated) return true;
        if (cls == gated) return static_cast<double>(position) >= slope * t;
        return false;
    }
};

template <class Gate>
SimOutcome run_two_class(const ModelParams& p, const ArrivalRealization& r, Gate&& gate) {
    require(p.num_classes() == 2, "two-class policy needs exactly two classes");
    Ledger ledger(p.initial_inventory(), 2);
    for (const auto& a : r.events)
        ledger.offer(a.cls, a.cls == 0 || gate(ledger.position, a.remaining_time));
    return ledger.finish(p);
}

}  // namespace detail

// Returns a warning when beta lies outside (lambda_1, lambda_1 + lambda_2),
// where the bounded-regret guarantee does not apply.
inline std::optional<std::string> beta_lt_diagnostic(const ModelParams& p, double beta) {
    if (beta > p.rate(0) && beta < p.lambda12()) return std::nullopt;
    std::ostringstream os;
    os << "beta = " << beta << " is outside (lambda_1, lambda_1 + lambda_2) = (" << p.rate(0)
       << ", " << p.lambda12() << "); bounded regret is not guaranteed";
    return os.str();
}

// Accepts a class-1 (index 1) customer at remaining time t iff inventory >= beta * t.
// Also records the first remaining time at which the path meets or crosses
// the beta-line.
inline SimOutcome run_beta_lt(const ModelParams& p, double beta, const ArrivalRealization& r) {
    require(p.num_classes() == 2, "beta-LT needs exactly two classes");
    require(std::isfinite(beta) && beta > 0.0, "beta must be positive", "policy.beta");

    const double T = p.horizon();
    detail::Ledger ledger(p.initial_inventory(), 2);
    const double start_gap = static_cast<double>(p.initial_inventory()) - beta * T;
    bool crossed = start_gap == 0.0;
    std::optional<double> cross_time;
    if (crossed) cross_time = T;
    const bool start_above = start_gap > 0.0;

    auto check_upward_touch = [&](double t_next) {
        // Below the line the gap grows continuously; it closes at t* = s / beta.
        if (crossed || start_above || ledger.position <= 0) return;
        const double t_star = static_cast<double>(ledger.position) / beta;
        if (t_star >= t_next && t_star > 0.0) {
            crossed = true;
            cross_time = t_star;
        }
    };

    for (const auto& a : r.events) {
        const double t = a.remaining_time;
        check_upward_touch(t);
        ledger.offer(a.cls, a.cls == 0 || static_cast<double>(ledger.position) >= beta * t);
        if (!crossed && start_above && static_cast<double>(ledger.position) <= beta * t) {
            crossed = true;
            cross_time = t;
        }
    }
    check_upward_touch(0.0);

    SimOutcome out = ledger.finish(p);
    out.crossed_beta_line = crossed;
    out.first_cross_time = cross_time;
    return out;
}

// Online customers are accepted iff inventory strictly exceeds theta(t).
inline SimOutcome run_threshold_table(const ModelParams& p, const ThresholdTable& table,
                                      const ArrivalRealization& r) {
    return detail::run_two_class(p, r, [&](long s, double t) { return s > table.value_at(t); });
}

inline SimOutcome run_extrapolated_optimal(const ModelParams& p, const ExtrapolatedOptimal& eo,
                                           const ArrivalRealization& r) {
    return detail::run_two_class(p, r, [&](long s, double t) { return s > eo.value_at(t); });
}

inline SimOutcome run_accept_all(const ModelParams& p, const ArrivalRealization& r) {
    detail::Ledger ledger(p.initial_inventory(), p.num_classes());
    for (const auto& a : r.events) ledger.offer(a.cls, true);
    return ledger.finish(p);
}

inline void validate_vector_betas(const ModelParams& p, const std::vector<double>& betas) {
    const int K = p.num_classes();
    require(static_cast<int>(betas.size()) == K - 1, "need K-1 slopes for K classes",
            "policy.betas");
    double cum = 0.0;
    for (int j = 0; j < K - 1; ++j) {
        cum += p.rate(j);
        const double b = betas[static_cast<std::size_t>(j)];
        require(std::isfinite(b), "slopes must be finite", "policy.betas");
        if (j > 0)
            require(b > betas[static_cast<std::size_t>(j) - 1], "slopes must be strictly increasing",
                    "policy.betas");
        const double upper = cum + p.rate(j + 1);
        if (!(b > cum && b < upper)) {
            std::ostringstream os;
            os << "slope " << j + 1 << " = " << b << " must lie strictly between " << cum
               << " and " << upper;
            throw ValidationError(os.str(), "policy.betas");
        }
    }
}

// K-class linear threshold policy. With alpha = n/T:
//  * alpha < betas[0]: class 0 always, class 1 gated by the betas[0]-line,
//    classes >= 2 never;
//  * alpha >= betas[K-2]: classes < K-1 always, class K-1 gated by the
//    betas[K-2]-line;
//  * otherwise alpha lies in [betas[k-2], betas[k-1]] for some class count k:
//    accept classes 0..k-1 until the path leaves the open cone between the two
//    lines (stopping time S), then follow the line it left through.
// For the first two regimes the gated rule coincides with "accept only/all
// until the line is reached", because the gate is closed below (open above)
// the line until the path first meets it. first_cross_time holds S when a
// cone phase ran.
inline SimOutcome run_vector_beta_lt(const ModelParams& p, const std::vector<double>& betas,
                                     const ArrivalRealization& r) {
    validate_vector_betas(p, betas);
    const int K = p.num_classes();
    const double T = p.horizon();
    const long n = p.initial_inventory();
    const double alpha = p.alpha();
    detail::Ledger ledger(n, K);

    auto run_rule = [&](detail::LineRule rule, std::size_t from) {
        for (std::size_t e = from; e < r.events.size(); ++e) {
            const auto& a = r.events[e];
            ledger.offer(a.cls, rule.admits(a.cls, ledger.position, a.remaining_time));
        }
    };

    if (alpha < betas.front()) {
        run_rule({betas.front(), 1}, 0);
        return ledger.finish(p);
    }
    // alpha == betas.back() would start on the cone's upper boundary and stop
    // at S = T with the same rule, so it is folded in here.
    if (alpha >= betas.back()) {
        run_rule({betas.back(), K - 1}, 0);
        return ledger.finish(p);
    }

    // Cone regime: smallest k with alpha <= betas[k-1] (k counts accepted classes).
    int k = 2;
    while (alpha > betas[static_cast<std::size_t>(k - 1)]) ++k;
    const double lo = betas[static_cast<std::size_t>(k - 2)];
    const double hi = betas[static_cast<std::size_t>(k - 1)];
    const detail::LineRule lower{lo, k - 1};
    const detail::LineRule upper{hi, k};

    auto in_cone = [&](double t) {
        const double s = static_cast<double>(ledger.position);
        return s > lo * t && s < hi * t;
    };
    auto exited_below = [&](double t) { return static_cast<double>(ledger.position) <= lo * t; };

    std::optional<detail::LineRule> after;
    double stop_time = T;
    std::size_t e = 0;
    if (!in_cone(T)) {
        after = exited_below(T) ? lower : upper;
    } else {
        for (; e < r.events.size(); ++e) {
            const auto& a = r.events[e];
            // Between arrivals the path can only leave through the upper line,
            // which it touches at t* = s / hi.
            const double t_star = static_cast<double>(ledger.position) / hi;
            if (t_star >= a.remaining_time) {
                stop_time = t_star;
                after = upper;
                break;
            }
            ledger.offer(a.cls, a.cls < k);
            if (!in_cone(a.remaining_time)) {
                stop_time = a.remaining_time;
                after = exited_below(a.remaining_time) ? lower : upper;
                ++e;
                break;
            }
        }
        if (!after) {
            // No further arrivals: the path exits through the upper line
            // (or has already hit zero, which is on or below the lower one).
            stop_time = ledger.position > 0 ? static_cast<double>(ledger.position) / hi : 0.0;
            after = upper;
        }
    }
    run_rule(*after, e);
    SimOutcome out = ledger.finish(p);
    out.crossed_beta_line = true;
    out.first_cross_time = stop_time;
    return out;
}

inline SimOutcome run_policy(const ModelParams& p, const PolicySpec& spec,
                             const ArrivalRealization& r) {
    return std::visit(
        [&](const auto& s) -> SimOutcome {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, BetaLT>) return run_beta_lt(p, s.beta, r);
            else if constexpr (std::is_same_v<S, VectorBetaLT>) return run_vector_beta_lt(p, s.betas, r);
            else if constexpr (std::is_same_v<S, ThresholdTable>) return run_threshold_table(p, s, r);
            else if constexpr (std::is_same_v<S, AcceptAll>) return run_accept_all(p, r);
            else return run_extrapolated_optimal(p, s, r);
        },
        spec);
}

// Checks a policy against an instance before any replication is run.
inline void validate_policy(const ModelParams& p, const PolicySpec& spec) {
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, BetaLT>) {
                require(p.num_classes() == 2, "beta-LT needs exactly two classes", "policy");
                require(std::isfinite(s.beta) && s.beta > 0.0, "beta must be positive",
                        "policy.beta");
            } else if constexpr (std::is_same_v<S, VectorBetaLT>) {
                validate_vector_betas(p, s.betas);
            } else if constexpr (std::is_same_v<S, ThresholdTable> ||
                                 std::is_same_v<S, ExtrapolatedOptimal>) {
                require(p.num_classes() == 2, "threshold policies need exactly two classes",
                        "policy");
            }
        },
        spec);
}

inline std::string policy_kind(const PolicySpec& spec) {
    constexpr const char* names[] = {"beta_lt", "vector_beta_lt", "threshold_table", "accept_all",
                                     "extrapolated_optimal"};
    return names[spec.index()];
}

}  // namespace ltp
