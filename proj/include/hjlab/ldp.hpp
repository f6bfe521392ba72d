#pragma once

#include "hjlab/heat.hpp"

#include <functional>
#include <span>

namespace hjlab {

/// Times for which the discrete kernel behaves like the small-time continuum
/// kernel: [10 mesh^2, diam^2].
struct ResolutionWindow {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double t) const { return t >= lo && t <= hi; }
};

ResolutionWindow resolution_window(const DiscreteSpace& space);

/// Throws ResolutionError naming the first offending time; also requires a
/// strictly decreasing grid of at least three positive times.
void check_time_grid(const DiscreteSpace& space, std::span<const double> t_grid);

/// I(z) = d(x, z)^2 / 4.
struct RateFunction {
    Index base_point = 0;
    Field values;
};

RateFunction rate_function(const DiscreteSpace& space, Index x);

/// Small-time values v(t) and their extrapolation to t = 0 by a least-squares
/// line through the three smallest times.
struct LimitFit {
    std::vector<double> t_grid;
    std::vector<double> values;
    double fitted_limit = 0.0;
    double slope = 0.0;
    double fit_residual = 0.0;  // rms residual of the three-point fit
    double target = 0.0;
    ResolutionWindow window;

    double abs_err() const { return std::abs(fitted_limit - target); }
    double rel_err() const;
};

/// Fits v(t) = a + b t over the three smallest times; a is the fitted limit.
LimitFit fit_limit(std::span<const double> t_grid, std::span<const double> values);

/// v(t) = t log p_t[x](y), target -d(x, y)^2 / 4.
LimitFit varadhan_pointwise(const HeatOperator& op, Index x, Index y,
                            std::span<const double> t_grid);

enum class SetKind { Open, Closed };

/// v(t) = t log mu_t[x](A), target -min_A I. Every point set of a finite
/// space is clopen, so the lower and upper bound targets coincide.
LimitFit ldp_set_bounds(const HeatOperator& op, Index x, std::span<const Index> set,
                        std::span<const double> t_grid, SetKind kind = SetKind::Closed);

/// Several sets sharing one kernel evaluation per time.
std::vector<LimitFit> ldp_set_bounds(const HeatOperator& op, Index x,
                                     std::span<const std::vector<Index>> sets,
                                     std::span<const double> t_grid);

/// v(t) = t log sum_j e^{phi_j / t} p_t[x](j) w_j, target max_z (phi(z) - I(z)).
LimitFit varadhan_lemma_check(const HeatOperator& op, Index x, const Field& phi,
                              std::span<const double> t_grid);

/// sum_i p_i log(p_i / q_i) over point masses, 0 log 0 = 0, +inf when p charges
/// a point where q is below 1e-300.
double relative_entropy_masses(std::span<const double> p, std::span<const double> q);

/// H(sigma | nu) for densities against the same space measure.
double relative_entropy(const DiscreteSpace& space, const Density& sigma, const Density& nu);

using RadiusRule = std::function<double(double)>;

/// r(t) = max(4 mesh, t^{1/4} diam / 8).
RadiusRule default_radius_rule(const DiscreteSpace& space);

struct GammaDiracFit {
    LimitFit fit;
    std::vector<double> radii;
    /// mu_t[x] conditioned to B_{r(t)}(z), as densities; concentrates at z.
    std::vector<Field> conditioned;
    /// max over t of |H(nu_t | mu_t) + log mu_t(B)| (conditioning identity).
    double entropy_identity_defect = 0.0;
};

/// v(t) = -t log mu_t[x](B_{r(t)}(z)), target I(z).
GammaDiracFit gamma_dirac_check(const HeatOperator& op, Index x, Index z,
                                std::span<const double> t_grid, const RadiusRule& radius);

}  // namespace hjlab
