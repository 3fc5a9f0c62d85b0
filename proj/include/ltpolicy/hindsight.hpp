#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "ltpolicy/core.hpp"

namespace ltp {

struct HindsightSolution {
    std::vector<long> accepted_per_class;
    double revenue = 0.0;
};

// With unit demands and a single capacity, filling demand in price order is
// exactly optimal. For two classes this is min{n, N_1} offline sales and the
// remainder (up to N_2) online.
inline HindsightSolution hindsight_optimal(std::span<const double> prices, long inventory,
                                           std::span<const long> demand) {
    HindsightSolution sol;
    sol.accepted_per_class.assign(demand.size(), 0);
    long left = inventory;
    for (std::size_t j = 0; j < demand.size() && left > 0; ++j) {
        const long take = std::min(left, demand[j]);
        sol.accepted_per_class[j] = take;
        sol.revenue += static_cast<double>(take) * prices[j];
        left -= take;
    }
    return sol;
}

inline HindsightSolution hindsight_optimal(const ModelParams& p, const ArrivalRealization& r) {
    return hindsight_optimal(p.prices(), p.initial_inventory(), r.per_class_counts);
}

}  // namespace ltp
