#pragma once

#include "hjlab/heat.hpp"

#include <functional>
#include <optional>
#include <span>

namespace hjlab {

/// A field given as a function of the grid coordinate, so it can be resampled
/// on a refined grid.
using Profile = std::function<double(double)>;

Field sample(const DiscreteSpace& space, const Profile& profile);

struct HopfLaxResult {
    Field values;
    std::vector<Index> argopt;  // optimizing y per point, lowest index on ties
};

/// Q_t f(x) = min_y { f(y) + d(x, y)^2 / (2t) }, exact scan over all points.
HopfLaxResult hopf_lax_inf(const DiscreteSpace& space, const Field& f, double t);

/// max_y { f(y) - d(x, y)^2 / (2t) } = -Q_t(-f)(x).
HopfLaxResult hopf_lax_sup(const DiscreteSpace& space, const Field& f, double t);

struct ViscousSolution {
    Field phi0;
    double t = 0.0;
    double eps = 0.0;
    Field values;
    Field log_shift;  // per-point max used in the log-sum-exp
    bool resolution_warning = false;
};

/// phi_t^eps = eps log h_{eps t / 2}(e^{phi / eps}), evaluated entirely in the
/// log domain against the log-kernel. A warning is set when eps t / 2 falls
/// below mesh^2 / 100.
ViscousSolution viscous_semigroup(const HeatOperator& op, const Field& phi, double t, double eps);

struct ContractionReport {
    double sup_initial = 0.0;
    double sup_evolved = 0.0;
    double lip_initial = 0.0;
    double lip_evolved = 0.0;
    double lap_neg_initial = 0.0;  // ||(L phi)^-||_inf
    double lap_neg_evolved = 0.0;
    double lap_scale = 0.0;        // ||L phi||_inf
    double bound_lip = 0.0;        // e^{-K eps t / 2} Lip(phi)
    double bound_lap = 0.0;        // ||(L phi)^-|| + K^- t e^{K^- eps t} Lip(phi)^2
    double rtol = 0.0;
    bool pass_sup = false;
    bool pass_lip = false;
    bool pass_lap = false;
    bool pass() const { return pass_sup && pass_lip && pass_lap; }
};

/// Default mesh coefficient of the contraction tolerance: 0 on the flat grid
/// spaces, 1 on graphs.
double default_mesh_coefficient(const DiscreteSpace& space);

ContractionReport contraction_check(const HeatOperator& op, const Field& phi, double t,
                                    double eps, std::optional<double> mesh_coefficient = {});
ContractionReport contraction_check(const HeatOperator& op, const ViscousSolution& sol,
                                    std::optional<double> mesh_coefficient = {});

struct SweepRow {
    double eps = 0.0;
    double sup_error = 0.0;
    double mean_error = 0.0;
    ContractionReport contraction;
    bool resolution_warning = false;
};

struct SweepTable {
    double t = 0.0;
    std::vector<SweepRow> rows;
    /// sup |Q_sup phi (n) - Q_sup phi (refined)| over shared points; NaN when
    /// the space cannot be refined.
    double floor = std::numeric_limits<double>::quiet_NaN();
};

/// Errors |phi_t^eps - hopf_lax_sup(phi, t)| along a decreasing eps list.
SweepTable convergence_sweep(const HeatOperator& op, const Field& phi, double t,
                             std::span<const double> eps_list);
/// As above; the profile is also sampled on the refined grid to measure the
/// discretization floor.
SweepTable convergence_sweep(const HeatOperator& op, const Profile& phi, double t,
                             std::span<const double> eps_list);

/// Hopf-Lax self-difference between the space and its refinement.
double discretization_floor(const DiscreteSpace& space, const Profile& phi, double t);

/// C(t, phi) = ||(L phi)^-||_inf + K^- t Lip(phi)^2.
double laplacian_constant(const HeatOperator& op, const Field& phi, double t);

struct IntegratedBound {
    double lhs = 0.0;  // sum_i Q_t(-phi)_i (L eta)_i w_i
    double rhs = 0.0;  // C(t, phi) sum_i eta_i w_i
};

IntegratedBound laplacian_bound_integrated(const HeatOperator& op, const Field& phi, double t,
                                           const Field& eta);

/// max_i |(Q_{t+dt} f - Q_{t-dt} f) / (2 dt) + slope(Q_t f)_i^2 / 2|.
double hopflax_residual(const DiscreteSpace& space, const Field& f, double t, double dt);

}  // namespace hjlab
