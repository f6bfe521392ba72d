#include "hjlab/ldp.hpp"

#include <algorithm>
#include <numeric>

namespace hjlab {

namespace {

constexpr double kZeroMass = 1e-300;

void check_point(const DiscreteSpace& space, Index i)
{
    if (i < 0 || i >= space.size())
        throw DomainError("point index out of range");
}

// log mu_t[x](A) from one row of the log-kernel.
double log_set_mass(const Matrix& logp, const Field& logw, Index x, std::span<const Index> set)
{
    std::vector<double> terms;
    terms.reserve(set.size());
    for (Index j : set)
        terms.push_back(logp(x, j) + logw[j]);
    return log_sum_exp(terms.data(), static_cast<Index>(terms.size()));
}

}  // namespace

ResolutionWindow resolution_window(const DiscreteSpace& space)
{
    return {10.0 * space.mesh() * space.mesh(), space.diameter() * space.diameter()};
}

void check_time_grid(const DiscreteSpace& space, std::span<const double> t_grid)
{
    if (t_grid.size() < 3)
        throw DomainError("time grid needs at least three points");
    const ResolutionWindow w = resolution_window(space);
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        if (k > 0 && !(t_grid[k] < t_grid[k - 1]))
            throw DomainError("time grid must be strictly decreasing");
        if (!w.contains(t_grid[k]))
            throw ResolutionError("time " + std::to_string(t_grid[k]) +
                                  " outside resolution window [" + std::to_string(w.lo) + ", " +
                                  std::to_string(w.hi) + "]");
    }
}

RateFunction rate_function(const DiscreteSpace& space, Index x)
{
    check_point(space, x);
    RateFunction r;
    r.base_point = x;
    r.values = space.distances().col(x).array().square() / 4.0;
    return r;
}

double LimitFit::rel_err() const
{
    const double scale = std::abs(target);
    return scale > 0.0 ? abs_err() / scale : abs_err();
}

LimitFit fit_limit(std::span<const double> t_grid, std::span<const double> values)
{
    if (t_grid.size() != values.size() || t_grid.size() < 3)
        throw DomainError("fit_limit needs at least three (t, value) pairs");
    std::vector<std::size_t> order(t_grid.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return t_grid[a] < t_grid[b]; });

    double mt = 0.0, mv = 0.0;
    for (int k = 0; k < 3; ++k) {
        mt += t_grid[order[k]] / 3.0;
        mv += values[order[k]] / 3.0;
    }
    double stt = 0.0, stv = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double dt = t_grid[order[k]] - mt;
        stt += dt * dt;
        stv += dt * (values[order[k]] - mv);
    }
    LimitFit fit;
    fit.t_grid.assign(t_grid.begin(), t_grid.end());
    fit.values.assign(values.begin(), values.end());
    fit.slope = stv / stt;
    fit.fitted_limit = mv - fit.slope * mt;
    double ss = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double r = values[order[k]] - (fit.fitted_limit + fit.slope * t_grid[order[k]]);
        ss += r * r;
    }
    fit.fit_residual = std::sqrt(ss / 3.0);
    return fit;
}

LimitFit varadhan_pointwise(const HeatOperator& op, Index x, Index y,
                            std::span<const double> t_grid)
{
    const DiscreteSpace& space = op.space();
    check_point(space, x);
    check_point(space, y);
    check_time_grid(space, t_grid);
    std::vector<double> v(t_grid.size());
    parallel_for(t_grid.size(), [&](std::size_t k) {
        const double t = t_grid[k];
        v[k] = t * op.log_kernel(t)(x, y);
    });
    LimitFit fit = fit_limit(t_grid, v);
    const double d = space.dist(x, y);
    fit.target = -d * d / 4.0;
    fit.window = resolution_window(space);
    return fit;
}

std::vector<LimitFit> ldp_set_bounds(const HeatOperator& op, Index x,
                                     std::span<const std::vector<Index>> sets,
                                     std::span<const double> t_grid)
{
    const DiscreteSpace& space = op.space();
    check_point(space, x);
    for (const auto& set : sets) {
        if (set.empty())
            throw DomainError("ldp_set_bounds: empty set");
        for (Index j : set)
            check_point(space, j);
    }
    check_time_grid(space, t_grid);
    const Field logw = space.weights().array().log();
    const std::size_t m = t_grid.size();
    std::vector<std::vector<double>> v(sets.size(), std::vector<double>(m));
    parallel_for(m, [&](std::size_t k) {
        const double t = t_grid[k];
        const Matrix logp = op.log_kernel(t);
        for (std::size_t s = 0; s < sets.size(); ++s)
            v[s][k] = t * log_set_mass(logp, logw, x, sets[s]);
    });
    const Field rate = rate_function(space, x).values;
    std::vector<LimitFit> fits;
    for (std::size_t s = 0; s < sets.size(); ++s) {
        LimitFit fit = fit_limit(t_grid, v[s]);
        double inf_rate = kInf;
        for (Index j : sets[s])
            inf_rate = std::min(inf_rate, rate[j]);
        fit.target = -inf_rate;
        fit.window = resolution_window(space);
        fits.push_back(std::move(fit));
    }
    return fits;
}

LimitFit ldp_set_bounds(const HeatOperator& op, Index x, std::span<const Index> set,
                        std::span<const double> t_grid, SetKind)
{
    const std::vector<Index> one(set.begin(), set.end());
    return ldp_set_bounds(op, x, std::span<const std::vector<Index>>(&one, 1), t_grid).front();
}

LimitFit varadhan_lemma_check(const HeatOperator& op, Index x, const Field& phi,
                              std::span<const double> t_grid)
{
    const DiscreteSpace& space = op.space();
    check_point(space, x);
    if (phi.size() != space.size())
        throw DomainError("varadhan_lemma_check: field length mismatch");
    check_time_grid(space, t_grid);
    const Field logw = space.weights().array().log();
    std::vector<double> v(t_grid.size());
    parallel_for(t_grid.size(), [&](std::size_t k) {
        const double t = t_grid[k];
        const Matrix logp = op.log_kernel(t);
        const Field terms = phi / t + Field(logp.row(x).transpose()) + logw;
        v[k] = t * log_sum_exp(terms);
    });
    LimitFit fit = fit_limit(t_grid, v);
    fit.target = (phi - rate_function(space, x).values).maxCoeff();
    fit.window = resolution_window(space);
    return fit;
}

double relative_entropy_masses(std::span<const double> p, std::span<const double> q)
{
    if (p.size() != q.size())
        throw DomainError("relative_entropy: size mismatch");
    double h = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0)
            continue;
        if (q[i] < kZeroMass)
            return kInf;
        h += p[i] * std::log(p[i] / q[i]);
    }
    return h;
}

double relative_entropy(const DiscreteSpace& space, const Density& sigma, const Density& nu)
{
    if (sigma.size() != space.size() || nu.size() != space.size())
        throw DomainError("relative_entropy: densities do not match the space");
    const Field p = sigma.masses(space);
    const Field q = nu.masses(space);
    return relative_entropy_masses({p.data(), static_cast<std::size_t>(p.size())},
                                   {q.data(), static_cast<std::size_t>(q.size())});
}

RadiusRule default_radius_rule(const DiscreteSpace& space)
{
    const double mesh = space.mesh();
    const double diam = space.diameter();
    return [mesh, diam](double t) { return std::max(4.0 * mesh, std::pow(t, 0.25) * diam / 8.0); };
}

GammaDiracFit gamma_dirac_check(const HeatOperator& op, Index x, Index z,
                                std::span<const double> t_grid, const RadiusRule& radius)
{
    const DiscreteSpace& space = op.space();
    check_point(space, x);
    check_point(space, z);
    check_time_grid(space, t_grid);
    const Field logw = space.weights().array().log();

    GammaDiracFit out;
    const std::size_t m = t_grid.size();
    out.radii.resize(m);
    out.conditioned.resize(m);
    std::vector<double> v(m), identity(m);
    for (std::size_t k = 0; k < m; ++k) {
        out.radii[k] = radius(t_grid[k]);
        if (!(out.radii[k] >= space.mesh()))
            throw DomainError("gamma_dirac_check: ball radius below mesh");
    }
    parallel_for(m, [&](std::size_t k) {
        const double t = t_grid[k];
        const std::vector<Index> ball = space.ball(z, out.radii[k]);
        const Matrix logp = op.log_kernel(t);
        const double log_mass = log_set_mass(logp, logw, x, ball);
        v[k] = -t * log_mass;

        // nu_t = mu_t restricted to the ball, renormalized.
        Field cond = Field::Zero(space.size());
        for (Index j : ball)
            cond[j] = std::exp(logp(x, j) - log_mass);
        const Field mu = exact_exp(logp.row(x).transpose() + logw);
        const Field nu = cond.cwiseProduct(space.weights());
        const double h = relative_entropy_masses({nu.data(), static_cast<std::size_t>(nu.size())},
                                                 {mu.data(), static_cast<std::size_t>(mu.size())});
        identity[k] = std::abs(h + log_mass);
        out.conditioned[k] = std::move(cond);
    });
    out.fit = fit_limit(t_grid, v);
    out.fit.target = rate_function(space, x).values[z];
    out.fit.window = resolution_window(space);
    out.entropy_identity_defect = *std::max_element(identity.begin(), identity.end());
    return out;
}

}  // namespace hjlab
