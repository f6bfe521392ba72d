#include "hjlab/hj.hpp"

namespace hjlab {

namespace {

void require_positive_time(double t, const char* what)
{
    if (!(t > 0.0) || !std::isfinite(t))
        throw DomainError(std::string(what) + " needs t > 0");
}

double negative_part_sup(const Field& v)
{
    return std::max(0.0, -v.minCoeff());
}

}  // namespace

Field sample(const DiscreteSpace& space, const Profile& profile)
{
    if (!space.coords())
        throw DomainError("sampling a profile needs a grid-built space");
    const Field& x = *space.coords();
    Field f(x.size());
    for (Index i = 0; i < x.size(); ++i)
        f[i] = profile(x[i]);
    return f;
}

HopfLaxResult hopf_lax_inf(const DiscreteSpace& space, const Field& f, double t)
{
    require_positive_time(t, "hopf_lax_inf");
    const Index n = space.size();
    if (f.size() != n)
        throw DomainError("hopf_lax_inf: field length mismatch");
    HopfLaxResult r;
    r.values.resize(n);
    r.argopt.resize(static_cast<std::size_t>(n));
    const double inv = 1.0 / (2.0 * t);
    for (Index x = 0; x < n; ++x) {
        double best = kInf;
        Index arg = 0;
        for (Index y = 0; y < n; ++y) {
            const double d = space.dist(x, y);
            const double v = f[y] + d * d * inv;
            if (v < best) {
                best = v;
                arg = y;
            }
        }
        r.values[x] = best;
        r.argopt[static_cast<std::size_t>(x)] = arg;
    }
    return r;
}

HopfLaxResult hopf_lax_sup(const DiscreteSpace& space, const Field& f, double t)
{
    HopfLaxResult r = hopf_lax_inf(space, -f, t);
    r.values = -r.values;
    return r;
}

ViscousSolution viscous_semigroup(const HeatOperator& op, const Field& phi, double t, double eps)
{
    require_positive_time(t, "viscous_semigroup");
    if (!(eps > 0.0))
        throw DomainError("viscous_semigroup needs eps > 0");
    const DiscreteSpace& space = op.space();
    const Index n = space.size();
    if (phi.size() != n)
        throw DomainError("viscous_semigroup: field length mismatch");

    ViscousSolution sol;
    sol.phi0 = phi;
    sol.t = t;
    sol.eps = eps;
    const double kernel_time = 0.5 * eps * t;
    sol.resolution_warning = kernel_time < space.mesh() * space.mesh() / 100.0;

    const Matrix logp = op.log_kernel(kernel_time);
    const Field base = phi / eps + Field(space.weights().array().log());
    sol.values.resize(n);
    sol.log_shift.resize(n);
    Field row(n);
    for (Index i = 0; i < n; ++i) {
        row = base + logp.col(i);  // log kernel is symmetric
        const double shift = row.maxCoeff();
        double s = 0.0;
        for (Index j = 0; j < n; ++j)
            s += std::exp(row[j] - shift);
        sol.log_shift[i] = shift;
        sol.values[i] = eps * (shift + std::log(s));
    }
    return sol;
}

double default_mesh_coefficient(const DiscreteSpace& space)
{
    return space.topology() == Topology::Graph ? 1.0 : 0.0;
}

ContractionReport contraction_check(const HeatOperator& op, const ViscousSolution& sol,
                                    std::optional<double> mesh_coefficient)
{
    const DiscreteSpace& space = op.space();
    const double t = sol.t;
    const double eps = sol.eps;
    const double kminus = space.k_minus();
    const Field lap0 = op.generator().apply(sol.phi0);
    const Field lapt = op.generator().apply(sol.values);

    ContractionReport r;
    r.sup_initial = sol.phi0.cwiseAbs().maxCoeff();
    r.sup_evolved = sol.values.cwiseAbs().maxCoeff();
    r.lip_initial = lipschitz_constant(space, sol.phi0);
    r.lip_evolved = lipschitz_constant(space, sol.values);
    r.lap_neg_initial = negative_part_sup(lap0);
    r.lap_neg_evolved = negative_part_sup(lapt);
    r.lap_scale = lap0.cwiseAbs().maxCoeff();
    r.bound_lip = std::exp(-space.k_lower() * eps * t / 2.0) * r.lip_initial;
    r.bound_lap = r.lap_neg_initial +
                  kminus * t * std::exp(kminus * eps * t) * r.lip_initial * r.lip_initial;
    r.rtol = 1e-6 + mesh_coefficient.value_or(default_mesh_coefficient(space)) * space.mesh();

    r.pass_sup = r.sup_evolved <= r.sup_initial + 1e-10;
    r.pass_lip = r.lip_evolved <= r.bound_lip * (1.0 + r.rtol);
    r.pass_lap = r.lap_neg_evolved <= r.bound_lap + r.rtol * r.lap_scale;
    return r;
}

ContractionReport contraction_check(const HeatOperator& op, const Field& phi, double t,
                                    double eps, std::optional<double> mesh_coefficient)
{
    if (!(eps > 0.0 && eps <= 1.0))
        throw DomainError("contraction_check needs eps in (0, 1]");
    return contraction_check(op, viscous_semigroup(op, phi, t, eps), mesh_coefficient);
}

SweepTable convergence_sweep(const HeatOperator& op, const Field& phi, double t,
                             std::span<const double> eps_list)
{
    require_positive_time(t, "convergence_sweep");
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        if (!(eps_list[k] > 0.0))
            throw DomainError("convergence_sweep: eps values must be positive");
        if (k > 0 && !(eps_list[k] < eps_list[k - 1]))
            throw DomainError("convergence_sweep: eps list must be decreasing");
    }
    const DiscreteSpace& space = op.space();
    const Field target = hopf_lax_sup(space, phi, t).values;

    SweepTable table;
    table.t = t;
    table.rows.resize(eps_list.size());
    parallel_for(eps_list.size(), [&](std::size_t k) {
        const ViscousSolution sol = viscous_semigroup(op, phi, t, eps_list[k]);
        const Field err = (sol.values - target).cwiseAbs();
        SweepRow& row = table.rows[k];
        row.eps = eps_list[k];
        row.sup_error = err.maxCoeff();
        row.mean_error = err.dot(space.weights()) / space.total_mass();
        row.resolution_warning = sol.resolution_warning;
        row.contraction = contraction_check(op, sol);
    });
    return table;
}

SweepTable convergence_sweep(const HeatOperator& op, const Profile& phi, double t,
                             std::span<const double> eps_list)
{
    SweepTable table = convergence_sweep(op, sample(op.space(), phi), t, eps_list);
    if (op.space().topology() != Topology::Graph)
        table.floor = discretization_floor(op.space(), phi, t);
    return table;
}

double discretization_floor(const DiscreteSpace& space, const Profile& phi, double t)
{
    const DiscreteSpace fine = space.refined();
    const Field coarse_target = hopf_lax_sup(space, sample(space, phi), t).values;
    const Field fine_target = hopf_lax_sup(fine, sample(fine, phi), t).values;
    double floor = 0.0;
    for (Index i = 0; i < space.size(); ++i)
        floor = std::max(floor, std::abs(coarse_target[i] - fine_target[2 * i]));
    return floor;
}

double laplacian_constant(const HeatOperator& op, const Field& phi, double t)
{
    const DiscreteSpace& space = op.space();
    const double lip = lipschitz_constant(space, phi);
    return negative_part_sup(op.generator().apply(phi)) + space.k_minus() * t * lip * lip;
}

IntegratedBound laplacian_bound_integrated(const HeatOperator& op, const Field& phi, double t,
                                           const Field& eta)
{
    const DiscreteSpace& space = op.space();
    if (eta.size() != space.size())
        throw DomainError("laplacian_bound_integrated: eta length mismatch");
    if ((eta.array() < 0.0).any())
        throw DomainError("laplacian_bound_integrated: eta must be nonnegative");
    const Field q = hopf_lax_inf(space, -phi, t).values;
    const Field lap_eta = op.generator().apply(eta);
    IntegratedBound b;
    b.lhs = (q.array() * lap_eta.array() * space.weights().array()).sum();
    b.rhs = laplacian_constant(op, phi, t) * eta.dot(space.weights());
    return b;
}

double hopflax_residual(const DiscreteSpace& space, const Field& f, double t, double dt)
{
    if (!(dt > 0.0 && dt < t))
        throw DomainError("hopflax_residual needs 0 < dt < t");
    const Field later = hopf_lax_inf(space, f, t + dt).values;
    const Field earlier = hopf_lax_inf(space, f, t - dt).values;
    const Field slope = local_slope(space, hopf_lax_inf(space, f, t).values);
    const Field residual = (later - earlier) / (2.0 * dt) + 0.5 * slope.cwiseProduct(slope);
    return residual.cwiseAbs().maxCoeff();
}

}  // namespace hjlab
