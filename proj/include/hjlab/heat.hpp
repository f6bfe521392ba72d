#pragma once

#include "hjlab/mmspace.hpp"

#include <Eigen/SparseCore>

namespace hjlab {

/// Nearest-neighbour conductance c_ab (symmetric, nonnegative).
struct Conductance {
    Index a = 0;
    Index b = 0;
    double value = 0.0;
};

/// Measure-symmetric Markov generator (Lf)_i = (1/w_i) sum_j c_ij (f_j - f_i).
/// This is the Laplacian itself, not one half of it: every time scaling in the
/// library (kernel time eps*t/2 for the viscous semigroup, rate d^2/4 for the
/// heat kernel) assumes this convention.
class Generator {
public:
    explicit Generator(SpacePtr space);

    const DiscreteSpace& space() const { return *space_; }
    const SpacePtr& space_ptr() const { return space_; }
    const Matrix& action() const { return action_; }
    const std::vector<Conductance>& conductances() const { return conductances_; }
    Field apply(const Field& f) const;
    /// max_i |L_ii|, the uniformization rate.
    double max_rate() const;
    /// L + max_rate() I, entrywise nonnegative.
    const Eigen::SparseMatrix<double>& shifted() const { return shifted_; }

private:
    SpacePtr space_;
    std::vector<Conductance> conductances_;
    Matrix action_;
    Eigen::SparseMatrix<double> shifted_;
};

/// Conductances: c = 1/h on interval and circle edges (second difference in the
/// interior, zero-flux ends, periodic closure); c = (w_a + w_b) / (2 len^2) on
/// graph edges.
Generator assemble_generator(SpacePtr space);

/// Heat kernel p_t[i](j), a density in j against the space measure.
struct KernelMatrix {
    double t = 0.0;
    Matrix density;      // spectral sum
    Matrix log_density;  // positive-arithmetic route, accurate far below underflow of the spectral sum
    Index flagged = 0;   // entries below 1e-300
};

class HeatOperator {
public:
    static constexpr Index kDefaultCap = 2048;

    explicit HeatOperator(Generator gen, Index cap = kDefaultCap);

    const Generator& generator() const { return gen_; }
    const DiscreteSpace& space() const { return gen_.space(); }
    /// 0 = lambda_0 <= lambda_1 <= ... (units 1/time).
    const Field& eigenvalues() const { return lambda_; }
    /// Columns orthonormal in sum_i w_i f_i g_i.
    const Matrix& eigenfields() const { return u_; }
    /// ||L f + sum_k lambda_k <u_k, f> u_k|| / ||L f|| on a fixed pseudo-random field.
    double reconstruction_residual() const;

    KernelMatrix kernel(double t) const;
    /// Transition masses e^{tL}(i, j) = p_t[i](j) w_j, computed by uniformization
    /// and repeated squaring so that every operation is on nonnegative numbers.
    Matrix transition(double t) const;
    /// log p_t[i](j) from transition(t), symmetrized.
    Matrix log_kernel(double t) const;
    /// h_t f by spectral application; t = 0 returns f.
    Field apply(double t, const Field& f) const;

private:
    Generator gen_;
    Field lambda_;
    Matrix u_;
};

HeatOperator spectral_decomposition(const Generator& gen, Index cap = HeatOperator::kDefaultCap);

struct OracleValue {
    double value = 0.0;
    double tail_bound = 0.0;  // bound on the omitted winding terms
    bool sufficient = true;   // tail_bound below 1e-14 * value
};

/// Wrapped Gaussian sum_{|k| <= terms} (4 pi t)^{-1/2} exp(-(x - y + kC)^2 / (4t)),
/// the heat kernel of the continuum circle of circumference C.
OracleValue circle_kernel_oracle(double circumference, double t, double x, double y, int terms);

/// Closed-form discrete Fourier series of the kernel of the n-point cycle
/// (eigenvalues 2(1 - cos(2 pi k / n)) / h^2). Independent of the eigensolver.
double circle_lattice_kernel(Index n, double circumference, double t, Index i, Index j);

struct KernelReport {
    double mass_error = 0.0;
    double asymmetry = 0.0;
    double min_entry = 0.0;
    Index flagged = 0;
    double ck_defect = 0.0;  // max |p_s * W * p_t - p_{s+t}|
};

/// Mass, symmetry and positivity of one kernel.
KernelReport validate_kernel(const KernelMatrix& kernel, const DiscreteSpace& space);
/// Same plus the Chapman-Kolmogorov defect at (s, t).
KernelReport validate_kernel(const HeatOperator& op, double s, double t);

/// max_i [ slope(h_t f)_i^2 - e^{-2Kt} h_t(slope(f)^2)_i ]; positive values are
/// discretization error on flat spaces and are reported, not asserted.
double bakry_emery_defect(const HeatOperator& op, double t, const Field& f);

}  // namespace hjlab
