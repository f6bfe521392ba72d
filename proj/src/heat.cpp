#include "hjlab/heat.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <map>
#include <numbers>
#include <random>

namespace hjlab {

namespace {

// Terms of the uniformized series below this are dropped; smaller entries
// would be flagged as underflow anyway.
constexpr double kSeriesFloor = 1e-290;
constexpr double kFlagFloor = 1e-300;

Field probe_field(Index n)
{
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Field f(n);
    for (Index i = 0; i < n; ++i)
        f[i] = u(rng);
    return f;
}

}  // namespace

Generator::Generator(SpacePtr space) : space_(std::move(space))
{
    if (!space_)
        throw DomainError("generator needs a space");
    const DiscreteSpace& s = *space_;
    const Index n = s.size();

    std::map<std::pair<Index, Index>, double> acc;
    for (const Edge& e : s.edges()) {
        double c = 0.0;
        if (s.topology() == Topology::Graph)
            c = (s.weight(e.a) + s.weight(e.b)) / (2.0 * e.length * e.length);
        else
            c = 1.0 / e.length;
        acc[{std::min(e.a, e.b), std::max(e.a, e.b)}] += c;
    }
    for (auto& [key, c] : acc)
        conductances_.push_back({key.first, key.second, c});

    action_ = Matrix::Zero(n, n);
    for (const Conductance& c : conductances_) {
        action_(c.a, c.b) += c.value / s.weight(c.a);
        action_(c.a, c.a) -= c.value / s.weight(c.a);
        action_(c.b, c.a) += c.value / s.weight(c.b);
        action_(c.b, c.b) -= c.value / s.weight(c.b);
    }

    // Connectivity of the conductance graph; the metric may be connected
    // through edges while a zero-weight pattern is not, so check here too.
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Index> stack{0};
    seen[0] = 1;
    Index reached = 1;
    while (!stack.empty()) {
        const Index u = stack.back();
        stack.pop_back();
        for (Index v = 0; v < n; ++v) {
            if (v != u && action_(u, v) > 0.0 && !seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++reached;
                stack.push_back(v);
            }
        }
    }
    if (reached != n)
        throw DomainError("generator: space is disconnected");

    const double rate = max_rate();
    std::vector<Eigen::Triplet<double>> trip;
    for (Index i = 0; i < n; ++i)
        trip.emplace_back(i, i, action_(i, i) + rate);
    for (const Conductance& c : conductances_) {
        trip.emplace_back(c.a, c.b, c.value / s.weight(c.a));
        trip.emplace_back(c.b, c.a, c.value / s.weight(c.b));
    }
    shifted_.resize(n, n);
    shifted_.setFromTriplets(trip.begin(), trip.end());
}

Field Generator::apply(const Field& f) const
{
    if (f.size() != space_->size())
        throw DomainError("generator: field length mismatch");
    return action_ * f;
}

double Generator::max_rate() const
{
    return (-action_.diagonal()).maxCoeff();
}

Generator assemble_generator(SpacePtr space)
{
    return Generator(std::move(space));
}

HeatOperator::HeatOperator(Generator gen, Index cap) : gen_(std::move(gen))
{
    const DiscreteSpace& s = gen_.space();
    const Index n = s.size();
    if (n > cap)
        throw DomainError("spectral decomposition: n = " + std::to_string(n) + " exceeds cap " +
                          std::to_string(cap));
    const Field sq = s.weights().cwiseSqrt();
    // W^{1/2} (-L) W^{-1/2} is symmetric because w_i L_ij = c_ij.
    Matrix sym = -(sq.asDiagonal() * gen_.action() * sq.cwiseInverse().asDiagonal());
    sym = 0.5 * (sym + sym.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    if (es.info() != Eigen::Success) {
        throw ConvergenceError("spectral decomposition failed", kInf);
    }
    const double resid =
        (sym * es.eigenvectors() - es.eigenvectors() * es.eigenvalues().asDiagonal()).norm();
    if (!(resid <= 1e-8 * std::max(1.0, sym.norm())))
        throw ConvergenceError("spectral decomposition residual too large", resid);
    lambda_ = es.eigenvalues();
    u_ = sq.cwiseInverse().asDiagonal() * es.eigenvectors();
}

double HeatOperator::reconstruction_residual() const
{
    const Field f = probe_field(space().size());
    const Field direct = gen_.apply(f);
    const Field coeff = u_.transpose() * space().weights().cwiseProduct(f);
    const Field spectral = -(u_ * lambda_.cwiseProduct(coeff));
    return (direct - spectral).norm() / std::max(direct.norm(), 1e-300);
}

KernelMatrix HeatOperator::kernel(double t) const
{
    if (!(t > 0.0) || !std::isfinite(t))
        throw DomainError("heat kernel needs t > 0");
    KernelMatrix k;
    k.t = t;
    const Field decay = (-t * lambda_).array().exp();
    k.density.noalias() = u_ * decay.asDiagonal() * u_.transpose();
    k.log_density = log_kernel(t);
    k.flagged = (k.log_density.array() < std::log(kFlagFloor)).count();
    return k;
}

Matrix HeatOperator::transition(double t) const
{
    if (!(t > 0.0) || !std::isfinite(t))
        throw DomainError("transition needs t > 0");
    const Index n = space().size();
    const double rate = gen_.max_rate();

    int squarings = 0;
    double step = t;
    while (rate * step > 0.5) {
        step *= 0.5;
        ++squarings;
    }

    // e^{step L} = e^{-rate step} sum_m (step A)^m / m!, A = L + rate I >= 0.
    Matrix term = Matrix::Identity(n, n);
    Matrix sum = term;
    const Eigen::SparseMatrix<double> a = gen_.shifted() * step;
    for (int m = 1; m < 400; ++m) {
        term = (term * a) / static_cast<double>(m);
        sum += term;
        if (term.maxCoeff() < kSeriesFloor)
            break;
    }
    Matrix p = sum * std::exp(-rate * step);
    Matrix tmp(n, n);
    for (int k = 0; k < squarings; ++k) {
        tmp.noalias() = p * p;
        p.swap(tmp);
    }
    return p;
}

Matrix HeatOperator::log_kernel(double t) const
{
    const Matrix p = transition(t);
    const Field logw = space().weights().array().log();
    Matrix lk = p.array().log();
    lk.rowwise() -= logw.transpose();
    return 0.5 * (lk + lk.transpose());
}

Field HeatOperator::apply(double t, const Field& f) const
{
    if (!(t >= 0.0))
        throw DomainError("apply_heat needs t >= 0");
    if (f.size() != space().size())
        throw DomainError("apply_heat: field length mismatch");
    if (t == 0.0)
        return f;
    const Field coeff = u_.transpose() * space().weights().cwiseProduct(f);
    const Field decay = (-t * lambda_).array().exp();
    return u_ * decay.cwiseProduct(coeff);
}

HeatOperator spectral_decomposition(const Generator& gen, Index cap)
{
    return HeatOperator(gen, cap);
}

OracleValue circle_kernel_oracle(double circumference, double t, double x, double y, int terms)
{
    if (!(t > 0.0))
        throw DomainError("circle oracle needs t > 0");
    if (terms < 1)
        throw DomainError("circle oracle needs terms >= 1");
    const double c = circumference;
    const double norm = 1.0 / std::sqrt(4.0 * std::numbers::pi * t);
    double delta = std::fmod(x - y, c);
    if (delta > 0.5 * c)
        delta -= c;
    if (delta < -0.5 * c)
        delta += c;
    // Sum from the outside in so the result is symmetric in (x, y).
    double value = 0.0;
    for (int k = terms; k >= 1; --k) {
        value += norm * std::exp(-(delta + k * c) * (delta + k * c) / (4.0 * t));
        value += norm * std::exp(-(delta - k * c) * (delta - k * c) / (4.0 * t));
    }
    value += norm * std::exp(-delta * delta / (4.0 * t));

    // Omitted windings |k| > terms: each is at most the Gaussian at distance
    // (|k| - 1/2) C, a geometric-type tail.
    const double first = (terms + 0.5) * c;
    const double g = norm * std::exp(-first * first / (4.0 * t));
    const double ratio = std::exp(-first * c / (2.0 * t));
    const double tail = ratio < 1.0 ? 2.0 * g / (1.0 - ratio) : kInf;
    return {value, tail, tail <= 1e-14 * value};
}

double circle_lattice_kernel(Index n, double circumference, double t, Index i, Index j)
{
    const double h = circumference / static_cast<double>(n);
    const double two_pi = 2.0 * std::numbers::pi;
    const Index shift = ((i - j) % n + n) % n;
    double value = 0.0;
    for (Index k = 0; k < n; ++k) {
        const double theta = two_pi * static_cast<double>(k) / static_cast<double>(n);
        const double mu = 2.0 * (1.0 - std::cos(theta)) / (h * h);
        value += std::exp(-t * mu) * std::cos(theta * static_cast<double>(shift));
    }
    return value / circumference;
}

KernelReport validate_kernel(const KernelMatrix& kernel, const DiscreteSpace& space)
{
    KernelReport r;
    const Matrix& p = kernel.density;
    r.mass_error = ((p * space.weights()).array() - 1.0).abs().maxCoeff();
    r.asymmetry = (p - p.transpose()).cwiseAbs().maxCoeff();
    r.min_entry = p.minCoeff();
    r.flagged = kernel.flagged;
    return r;
}

KernelReport validate_kernel(const HeatOperator& op, double s, double t)
{
    const DiscreteSpace& space = op.space();
    const KernelMatrix ks = op.kernel(s);
    const KernelMatrix kt = op.kernel(t);
    const KernelMatrix kst = op.kernel(s + t);
    KernelReport r = validate_kernel(kst, space);
    const Matrix composed = ks.density * space.weights().asDiagonal() * kt.density;
    r.ck_defect = (composed - kst.density).cwiseAbs().maxCoeff();
    return r;
}

double bakry_emery_defect(const HeatOperator& op, double t, const Field& f)
{
    const DiscreteSpace& space = op.space();
    const Field evolved_slope = local_slope(space, op.apply(t, f));
    const Field slope = local_slope(space, f);
    const Field rhs =
        std::exp(-2.0 * space.k_lower() * t) * op.apply(t, slope.cwiseProduct(slope));
    return (evolved_slope.cwiseProduct(evolved_slope) - rhs).maxCoeff();
}

}  // namespace hjlab
