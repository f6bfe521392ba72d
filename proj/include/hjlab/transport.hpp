#pragma once

#include "hjlab/common.hpp"

#include <span>

namespace hjlab {

struct TransportPlan {
    Matrix flow;  // supply.size() x demand.size()
    double cost = 0.0;
    long pivots = 0;
};

/// Exact balanced transportation problem min sum flow_ij cost_ij.
///
/// Northwest-corner start, MODI potentials on the basis tree, most-negative
/// reduced cost entering. After a run of degenerate pivots the entering and
/// leaving choices switch to Bland's lowest-index rule, which cannot cycle.
/// Demand is rescaled to the supply total before solving.
TransportPlan transport_simplex(std::span<const double> supply, std::span<const double> demand,
                                const Matrix& cost);

/// W2^2 between two measures on the line via the monotone coupling.
/// coords must be sorted ascending; masses are point masses.
double quantile_w2_squared(std::span<const double> coords, std::span<const double> mass0,
                           std::span<const double> mass1);

}  // namespace hjlab
