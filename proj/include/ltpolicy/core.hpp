#pragma once

// Problem instances and arrival streams.
//
// Time convention: `t` is the time *remaining* until the end of the horizon,
// so a horizon of length T starts at t = T and ends at t = 0. Arrival streams
// are generated forward in elapsed time u = T - t and converted on output.
//
// Classes are indexed from 0 in every vector (class 0 is the highest-price,
// "offline" class). Files written for humans use 1-based class labels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ltpolicy/csv.hpp"
#include "ltpolicy/error.hpp"
#include "ltpolicy/random.hpp"

namespace ltp {

class ModelParams {
public:
    ModelParams(std::vector<double> rates, std::vector<double> prices,
                long initial_inventory, double horizon)
        : rates_(std::move(rates)), prices_(std::move(prices)),
          n_(initial_inventory), horizon_(horizon) {
        require(rates_.size() >= 2, "need at least two customer classes", "model.rates");
        require(prices_.size() == rates_.size(), "prices and rates must have the same length",
                "model.prices");
        for (double r : rates_)
            require(std::isfinite(r) && r > 0.0, "arrival rates must be positive", "model.rates");
        for (double p : prices_)
            require(std::isfinite(p) && p > 0.0, "prices must be positive", "model.prices");
        for (std::size_t j = 1; j < prices_.size(); ++j)
            require(prices_[j] < prices_[j - 1], "prices must be strictly decreasing",
                    "model.prices");
        require(n_ >= 1, "initial inventory must be >= 1", "model.initial_inventory");
        require(std::isfinite(horizon_) && horizon_ > 0.0, "horizon must be positive",
                "model.horizon");
    }

    // Builds an instance from the inventory-to-horizon ratio: n = round(alpha * T).
    static ModelParams from_alpha(std::vector<double> rates, std::vector<double> prices,
                                  double alpha, double horizon) {
        require(std::isfinite(alpha) && alpha > 0.0, "alpha must be positive", "model.alpha");
        const long n = std::lround(alpha * horizon);
        return ModelParams(std::move(rates), std::move(prices), n, horizon);
    }

    int num_classes() const noexcept { return static_cast<int>(rates_.size()); }
    std::span<const double> rates() const noexcept { return rates_; }
    std::span<const double> prices() const noexcept { return prices_; }
    double rate(int j) const { return rates_.at(static_cast<std::size_t>(j)); }
    double price(int j) const { return prices_.at(static_cast<std::size_t>(j)); }
    long initial_inventory() const noexcept { return n_; }
    double horizon() const noexcept { return horizon_; }
    double alpha() const noexcept { return static_cast<double>(n_) / horizon_; }
    // lambda_1 + lambda_2; the total rate in the two-class problem.
    double lambda12() const noexcept { return rates_[0] + rates_[1]; }
    double total_rate() const noexcept {
        double s = 0.0;
        for (double r : rates_) s += r;
        return s;
    }

private:
    std::vector<double> rates_;
    std::vector<double> prices_;
    long n_;
    double horizon_;
};

struct Arrival {
    double remaining_time;  // in [0, T]
    int cls;                // 0-based class index

    bool operator==(const Arrival&) const = default;
};

// One sampled multi-class Poisson stream. Events are ordered by decreasing
// remaining time, i.e. in the order they happen.
struct ArrivalRealization {
    double horizon = 0.0;
    std::vector<Arrival> events;
    std::vector<long> per_class_counts;

    bool operator==(const ArrivalRealization&) const = default;
};

// Each class draws its exponential gaps from its own substream, so class j's
// arrivals depend only on (seed, j, lambda_j, T).
inline ArrivalRealization sample_arrivals(std::span<const double> rates, double horizon,
                                          SeedSpec seed) {
    require(horizon >= 0.0 && std::isfinite(horizon), "horizon must be >= 0");
    ArrivalRealization out;
    out.horizon = horizon;
    out.per_class_counts.assign(rates.size(), 0);

    // (elapsed time, class), merged so ties keep lower class first.
    std::vector<std::pair<double, int>> merged, klass, scratch;
    for (std::size_t j = 0; j < rates.size(); ++j) {
        require(rates[j] > 0.0, "arrival rates must be positive");
        Rng rng(seed, j);
        klass.clear();
        double u = rng.exponential(rates[j]);
        while (u <= horizon) {
            klass.emplace_back(u, static_cast<int>(j));
            u += rng.exponential(rates[j]);
        }
        out.per_class_counts[j] = static_cast<long>(klass.size());
        scratch.resize(merged.size() + klass.size());
        std::merge(merged.begin(), merged.end(), klass.begin(), klass.end(), scratch.begin(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
        merged.swap(scratch);
    }

    out.events.reserve(merged.size());
    for (const auto& [u, j] : merged) out.events.push_back({horizon - u, j});
    return out;
}

inline ArrivalRealization sample_arrivals(const ModelParams& params, SeedSpec seed) {
    return sample_arrivals(params.rates(), params.horizon(), seed);
}

// N_{j,T}(t): number of class-j arrivals with remaining time in [t, T].
inline long count_remaining(const ArrivalRealization& r, int cls, double t) {
    require(t >= 0.0 && t <= r.horizon, "t must lie in [0, T]");
    require(cls >= 0 && static_cast<std::size_t>(cls) < r.per_class_counts.size(),
            "class index out of range");
    const auto end = std::partition_point(r.events.begin(), r.events.end(),
                                          [t](const Arrival& a) { return a.remaining_time >= t; });
    return std::count_if(r.events.begin(), end, [cls](const Arrival& a) { return a.cls == cls; });
}

inline void write_realization_csv(std::ostream& os, const ArrivalRealization& r) {
    os << "remaining_time,class_index\n";
    for (const auto& a : r.events) os << Num{a.remaining_time} << ',' << (a.cls + 1) << '\n';
}

}  // namespace ltp
