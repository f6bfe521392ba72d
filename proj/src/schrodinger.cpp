#include "hjlab/schrodinger.hpp"

#include "hjlab/ldp.hpp"

namespace hjlab {

namespace {

constexpr Index kMaxSupport = 256;

void check_kernel_time(const DiscreteSpace& space, double eps)
{
    if (!(eps > 0.0))
        throw DomainError("entropic cost needs eps > 0");
    const ResolutionWindow w = resolution_window(space);
    if (!w.contains(0.5 * eps))
        throw ResolutionError("kernel time eps/2 = " + std::to_string(0.5 * eps) +
                              " outside resolution window [" + std::to_string(w.lo) + ", " +
                              std::to_string(w.hi) + "]");
}

Field log_of(const Field& v)
{
    return v.array().log();  // log 0 = -inf is intended
}

}  // namespace

double SinkhornResult::dual_descent() const
{
    double worst = 0.0;
    for (std::size_t k = 1; k < dual_history.size(); ++k)
        worst = std::max(worst, dual_history[k - 1] - dual_history[k]);
    return worst;
}

ReferenceCoupling reference_coupling(const HeatOperator& op, const Density& mu0, double eps)
{
    const DiscreteSpace& space = op.space();
    check_kernel_time(space, eps);
    ReferenceCoupling ref;
    ref.eps = eps;
    ref.log_entries = op.log_kernel(0.5 * eps);
    const Field row = log_of(mu0.masses(space));
    const Field col = log_of(space.weights());
    ref.log_entries.colwise() += row;
    ref.log_entries.rowwise() += col.transpose();
    return ref;
}

SinkhornResult sinkhorn(const DiscreteSpace& space, const ReferenceCoupling& ref,
                        const Density& mu0, const Density& mu1, const SinkhornOptions& options)
{
    const Index n = space.size();
    if (ref.log_entries.rows() != n || mu0.size() != n || mu1.size() != n)
        throw DomainError("sinkhorn: size mismatch");
    if (!(options.tol > 0.0))
        throw DomainError("sinkhorn: tol must be positive");
    const Field a = mu0.masses(space);
    const Field b = mu1.masses(space);
    const Field loga = log_of(a);
    const Field logb = log_of(b);
    const Matrix& lr = ref.log_entries;

    SinkhornResult res;
    res.f = options.f0.value_or(Field::Zero(n));
    res.g = options.g0.value_or(Field::Zero(n));
    if (res.f.size() != n || res.g.size() != n)
        throw DomainError("sinkhorn: warm-start potentials have the wrong length");
    for (Index i = 0; i < n; ++i)
        if (a[i] <= 0.0)
            res.f[i] = -kInf;
    for (Index j = 0; j < n; ++j)
        if (b[j] <= 0.0)
            res.g[j] = -kInf;

    Field buf(n);
    auto infeasible = [&] {
        res.cost = kInf;
        res.converged = false;
        res.coupling.plan = Matrix::Zero(n, n);
        res.coupling.log_plan = Matrix::Constant(n, n, -kInf);
        return res;
    };

    double defect = kInf;
    for (res.iterations = 1; res.iterations <= options.max_iter; ++res.iterations) {
        for (Index i = 0; i < n; ++i) {
            if (a[i] <= 0.0)
                continue;
            buf = lr.row(i).transpose() + res.g;
            const double s = log_sum_exp(buf);
            if (!std::isfinite(s))
                return infeasible();
            res.f[i] = loga[i] - s;
        }
        for (Index j = 0; j < n; ++j) {
            if (b[j] <= 0.0)
                continue;
            buf = lr.col(j) + res.f;
            const double s = log_sum_exp(buf);
            if (!std::isfinite(s))
                return infeasible();
            res.g[j] = logb[j] - s;
        }
        // Columns are exact after the g-update; the row defect decides.
        defect = 0.0;
        for (Index i = 0; i < n; ++i) {
            if (a[i] <= 0.0)
                continue;
            buf = lr.row(i).transpose() + res.g;
            defect = std::max(defect, std::abs(std::exp(res.f[i] + log_sum_exp(buf)) - a[i]));
        }
        double dual = 0.0;
        for (Index i = 0; i < n; ++i)
            if (a[i] > 0.0)
                dual += a[i] * res.f[i];
        for (Index j = 0; j < n; ++j)
            if (b[j] > 0.0)
                dual += b[j] * res.g[j];
        res.dual_history.push_back(dual);
        if (defect <= options.tol) {
            res.converged = true;
            break;
        }
    }
    if (!res.converged)
        throw ConvergenceError("sinkhorn did not reach tolerance", defect);

    Matrix& lp = res.coupling.log_plan;
    lp = lr;
    lp.colwise() += res.f;
    lp.rowwise() += res.g.transpose();
    res.coupling.plan = exact_exp(lp);
    const Matrix& p = res.coupling.plan;
    res.marginal_defect = std::max((p.rowwise().sum() - a).cwiseAbs().maxCoeff(),
                                   (p.colwise().sum().transpose() - b).cwiseAbs().maxCoeff());
    // H(plan | R) = sum plan (log plan - log R) over the support of the plan.
    double h = 0.0;
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i)
            if (p(i, j) > 0.0)
                h += p(i, j) * (lp(i, j) - lr(i, j));
    res.cost = h;
    return res;
}

double dirac_schrodinger_cost(const HeatOperator& op, Index x, const Density& mu1, double eps)
{
    const DiscreteSpace& space = op.space();
    check_kernel_time(space, eps);
    const Matrix logp = op.log_kernel(0.5 * eps);
    const Field q = exact_exp(logp.row(x).transpose() + log_of(space.weights()));
    const Field p = mu1.masses(space);
    return relative_entropy_masses({p.data(), static_cast<std::size_t>(p.size())},
                                   {q.data(), static_cast<std::size_t>(q.size())});
}

W2Result exact_w2(const DiscreteSpace& space, const Density& mu0, const Density& mu1)
{
    const Field a = mu0.masses(space);
    const Field b = mu1.masses(space);
    std::vector<Index> rows, cols;
    std::vector<double> supply, demand;
    for (Index i = 0; i < space.size(); ++i) {
        if (a[i] > 0.0) {
            rows.push_back(i);
            supply.push_back(a[i]);
        }
        if (b[i] > 0.0) {
            cols.push_back(i);
            demand.push_back(b[i]);
        }
    }
    if (static_cast<Index>(rows.size()) > kMaxSupport || static_cast<Index>(cols.size()) > kMaxSupport)
        throw DomainError("exact_w2: supports larger than 256 points");
    Matrix cost(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const double d = space.dist(rows[r], cols[c]);
            cost(static_cast<Index>(r), static_cast<Index>(c)) = d * d;
        }
    const TransportPlan plan = transport_simplex(supply, demand, cost);

    W2Result out;
    out.w2_squared = plan.cost;
    out.pivots = plan.pivots;
    if (space.topology() == Topology::Interval) {
        const Field& x = *space.coords();
        out.quantile_w2_squared = quantile_w2_squared(
            {x.data(), static_cast<std::size_t>(x.size())},
            {a.data(), static_cast<std::size_t>(a.size())},
            {b.data(), static_cast<std::size_t>(b.size())});
    }
    return out;
}

std::vector<GammaRow> gamma_sweep(const HeatOperator& op, const Density& mu0, const Density& mu1,
                                  std::span<const double> eps_list, const SinkhornOptions& options)
{
    const DiscreteSpace& space = op.space();
    for (std::size_t k = 1; k < eps_list.size(); ++k)
        if (!(eps_list[k] < eps_list[k - 1]))
            throw DomainError("gamma_sweep: eps list must be decreasing");
    if ((mu0.values().array() <= 0.0).any() || (mu1.values().array() <= 0.0).any())
        throw DomainError("gamma_sweep: marginals must be strictly positive");

    const double half_w2sq = 0.5 * exact_w2(space, mu0, mu1).w2_squared;
    const ResolutionWindow window = resolution_window(space);

    std::vector<GammaRow> rows;
    SinkhornOptions opts = options;
    double prev_eps = 0.0;
    for (double eps : eps_list) {
        GammaRow row;
        row.eps = eps;
        row.half_w2sq = half_w2sq;
        if (!window.contains(0.5 * eps)) {
            row.skipped = true;
            row.cost = row.eps_cost = row.gap = std::numeric_limits<double>::quiet_NaN();
            rows.push_back(row);
            continue;
        }
        if (prev_eps > 0.0 && opts.f0 && opts.g0) {
            // Potentials scale like 1/eps.
            *opts.f0 *= prev_eps / eps;
            *opts.g0 *= prev_eps / eps;
        }
        const SinkhornResult res = sinkhorn(space, reference_coupling(op, mu0, eps), mu0, mu1, opts);
        row.cost = res.cost;
        row.eps_cost = eps * res.cost;
        row.gap = std::abs(row.eps_cost - half_w2sq);
        row.iterations = res.iterations;
        row.marginal_defect = res.marginal_defect;
        row.dual_descent = res.dual_descent();
        rows.push_back(row);
        opts.f0 = res.f;
        opts.g0 = res.g;
        prev_eps = eps;
    }
    return rows;
}

}  // namespace hjlab
