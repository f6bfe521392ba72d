#pragma once

#include "hjlab/heat.hpp"
#include "hjlab/transport.hpp"

#include <optional>
#include <span>

namespace hjlab {

/// log R_{0 eps}(i, j) = log mu0_i w_i + log p_{eps/2}[i](j) w_j, the two-time
/// marginal of the slowed Brownian motion started from mu0.
struct ReferenceCoupling {
    Matrix log_entries;
    double eps = 0.0;
};

/// Kernel time eps/2 must lie in the resolution window of the space.
ReferenceCoupling reference_coupling(const HeatOperator& op, const Density& mu0, double eps);

/// Transport plan in point masses, with row/column sums checked against the
/// marginal masses.
struct Coupling {
    Matrix plan;
    Matrix log_plan;
};

struct SinkhornOptions {
    double tol = 1e-11;
    int max_iter = 100000;
    /// Warm start for the log-domain potentials.
    std::optional<Field> f0;
    std::optional<Field> g0;
};

struct SinkhornResult {
    Coupling coupling;
    double cost = 0.0;            // H(plan | R), +inf if infeasible
    int iterations = 0;
    double marginal_defect = 0.0; // max of row and column sup-defects (mass units)
    bool converged = false;
    Field f;                      // log-domain dual potentials
    Field g;
    /// Dual objective after each iteration; nondecreasing, converges to cost.
    std::vector<double> dual_history;

    /// Largest decrease between consecutive dual values (0 when monotone).
    double dual_descent() const;
};

/// Static Schrodinger problem min H(plan | R) over couplings of (mu0, mu1) by
/// alternating log-domain scaling. Throws ConvergenceError when max_iter is
/// reached; returns cost +inf when mu1 charges a column where R vanishes.
SinkhornResult sinkhorn(const DiscreteSpace& space, const ReferenceCoupling& ref,
                        const Density& mu0, const Density& mu1,
                        const SinkhornOptions& options = {});

/// H(mu1 | p_{eps/2}[x] m): the cost when mu0 is the point mass at x.
double dirac_schrodinger_cost(const HeatOperator& op, Index x, const Density& mu1, double eps);

struct W2Result {
    double w2_squared = 0.0;
    /// Monotone-coupling value on interval spaces, NaN otherwise.
    double quantile_w2_squared = std::numeric_limits<double>::quiet_NaN();
    long pivots = 0;
};

/// W2^2 by the transportation simplex on the supports (at most 256 points each).
W2Result exact_w2(const DiscreteSpace& space, const Density& mu0, const Density& mu1);

struct GammaRow {
    double eps = 0.0;
    double cost = 0.0;
    double eps_cost = 0.0;
    double half_w2sq = 0.0;
    double gap = 0.0;
    int iterations = 0;
    double marginal_defect = 0.0;
    double dual_descent = 0.0;
    bool skipped = false;  // eps/2 outside the resolution window
};

/// eps C_eps(mu0, mu1) against W2^2 / 2 along a decreasing eps list, with
/// potentials warm-started from the previous eps.
std::vector<GammaRow> gamma_sweep(const HeatOperator& op, const Density& mu0, const Density& mu1,
                                  std::span<const double> eps_list,
                                  const SinkhornOptions& options = {});

}  // namespace hjlab
