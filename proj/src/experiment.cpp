#include "hjlab/experiment.hpp"

#include "hjlab/brownian.hpp"
#include "hjlab/hj.hpp"
#include "hjlab/schrodinger.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <numbers>
#include <random>

namespace hjlab {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<ExperimentKind, std::string_view>, 9> kNames{{
    {ExperimentKind::KernelValidate, "kernel_validate"},
    {ExperimentKind::HjSweep, "hj_sweep"},
    {ExperimentKind::Contraction, "contraction"},
    {ExperimentKind::Varadhan, "varadhan"},
    {ExperimentKind::SetLdp, "set_ldp"},
    {ExperimentKind::VaradhanLemma, "varadhan_lemma"},
    {ExperimentKind::GammaDirac, "gamma_dirac"},
    {ExperimentKind::TubeLdp, "tube_ldp"},
    {ExperimentKind::SchrodingerSweep, "schrodinger_sweep"},
}};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------- parsing

std::string join(const std::string& prefix, const std::string& key)
{
    return prefix.empty() ? key : prefix + "." + key;
}

const json* find(const json& j, const std::string& key)
{
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double as_number(const json& v, const std::string& field)
{
    if (!v.is_number())
        throw ConfigError(field, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d))
        throw ConfigError(field, "must be finite");
    return d;
}

double number(const json& j, const std::string& prefix, const std::string& key, double fallback)
{
    const json* v = find(j, key);
    return v ? as_number(*v, join(prefix, key)) : fallback;
}

double required_number(const json& j, const std::string& prefix, const std::string& key)
{
    const json* v = find(j, key);
    if (!v)
        throw ConfigError(join(prefix, key), "missing");
    return as_number(*v, join(prefix, key));
}

std::uint64_t unsigned_integer(const json& j, const std::string& key, std::uint64_t fallback)
{
    const json* v = find(j, key);
    if (!v)
        return fallback;
    if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0))
        throw ConfigError(key, "expected a nonnegative integer");
    return v->get<std::uint64_t>();
}

std::vector<double> numbers(const json& j, const std::string& prefix, const std::string& key,
                            std::vector<double> fallback)
{
    const json* v = find(j, key);
    if (!v)
        return fallback;
    const std::string field = join(prefix, key);
    if (!v->is_array())
        throw ConfigError(field, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v->size(); ++k)
        out.push_back(as_number((*v)[k], field + "[" + std::to_string(k) + "]"));
    return out;
}

void reject_unknown(const json& j, const std::string& prefix,
                    std::initializer_list<std::string_view> allowed)
{
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw ConfigError(join(prefix, it.key()), "unknown key");
}

SpaceSpec parse_space(const json& j)
{
    if (!j.is_object())
        throw ConfigError("space", "expected an object");
    const json* kind = find(j, "kind");
    if (!kind || !kind->is_string())
        throw ConfigError("space.kind", "expected \"interval\", \"circle\" or \"graph\"");
    SpaceSpec s;
    try {
        s.kind = topology_from_string(kind->get<std::string>());
    } catch (const DomainError&) {
        throw ConfigError("space.kind", "expected \"interval\", \"circle\" or \"graph\"");
    }
    const json* n = find(j, "n");
    if (!n || !n->is_number_integer())
        throw ConfigError("space.n", "expected an integer");
    s.n = n->get<Index>();

    switch (s.kind) {
    case Topology::Interval:
        reject_unknown(j, "space", {"kind", "n", "length"});
        if (s.n < 2)
            throw ConfigError("space.n", "interval needs at least 2 points");
        s.extent = number(j, "space", "length", 1.0);
        if (!(s.extent > 0.0))
            throw ConfigError("space.length", "must be positive");
        break;
    case Topology::Circle:
        reject_unknown(j, "space", {"kind", "n", "circumference"});
        if (s.n < 3)
            throw ConfigError("space.n", "circle needs at least 3 points");
        s.extent = number(j, "space", "circumference", 2.0 * std::numbers::pi);
        if (!(s.extent > 0.0))
            throw ConfigError("space.circumference", "must be positive");
        break;
    case Topology::Graph: {
        reject_unknown(j, "space", {"kind", "n", "edges", "weights", "k_lower"});
        if (s.n < 1)
            throw ConfigError("space.n", "graph needs at least one node");
        const json* edges = find(j, "edges");
        if (!edges || !edges->is_array())
            throw ConfigError("space.edges", "expected an array of [a, b, length]");
        for (std::size_t k = 0; k < edges->size(); ++k) {
            const json& e = (*edges)[k];
            const std::string field = "space.edges[" + std::to_string(k) + "]";
            if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() ||
                !e[1].is_number_integer())
                throw ConfigError(field, "expected [a, b, length] with integer endpoints");
            Edge edge{e[0].get<Index>(), e[1].get<Index>(), as_number(e[2], field + "[2]")};
            if (edge.a < 0 || edge.b < 0 || edge.a >= s.n || edge.b >= s.n || edge.a == edge.b)
                throw ConfigError(field, "invalid endpoints");
            if (!(edge.length > 0.0))
                throw ConfigError(field + "[2]", "length must be positive");
            s.edges.push_back(edge);
        }
        s.weights = numbers(j, "space", "weights", {});
        if (static_cast<Index>(s.weights.size()) != s.n)
            throw ConfigError("space.weights", "needs one positive weight per node");
        for (std::size_t k = 0; k < s.weights.size(); ++k)
            if (!(s.weights[k] > 0.0))
                throw ConfigError("space.weights[" + std::to_string(k) + "]", "must be positive");
        if (!find(j, "k_lower"))
            throw ConfigError("space.k_lower", "required for graphs");
        s.k_lower = required_number(j, "space", "k_lower");
        break;
    }
    }
    return s;
}

PhiSpec parse_phi(const json& j, Index n)
{
    PhiSpec p;
    if (j.is_string()) {
        p.name = j.get<std::string>();
    } else if (j.is_object()) {
        reject_unknown(j, "phi", {"name", "scale", "offset", "center", "values"});
        const json* name = find(j, "name");
        if (!name || !name->is_string())
            throw ConfigError("phi.name", "expected a catalogue name");
        p.name = name->get<std::string>();
        p.scale = number(j, "phi", "scale", 1.0);
        p.offset = number(j, "phi", "offset", 0.0);
        p.center = number(j, "phi", "center", 0.0);
        p.values = numbers(j, "phi", "values", {});
    } else {
        throw ConfigError("phi", "expected a name or an object");
    }
    if (p.name != "sin" && p.name != "coordinate" && p.name != "well" && p.name != "custom")
        throw ConfigError("phi.name", "expected one of sin, coordinate, well, custom");
    if (p.name == "custom" && static_cast<Index>(p.values.size()) != n)
        throw ConfigError("phi.values", "custom table needs one value per point");
    if (p.name != "custom" && !p.values.empty())
        throw ConfigError("phi.values", "only used by the custom table");
    return p;
}

void require_positive(const std::vector<double>& v, const std::string& field)
{
    if (v.empty())
        throw ConfigError(field, "must not be empty");
    for (std::size_t k = 0; k < v.size(); ++k)
        if (!(v[k] > 0.0))
            throw ConfigError(field + "[" + std::to_string(k) + "]", "must be positive");
}

void require_decreasing(const std::vector<double>& v, const std::string& field)
{
    require_positive(v, field);
    for (std::size_t k = 1; k < v.size(); ++k)
        if (!(v[k] < v[k - 1]))
            throw ConfigError(field + "[" + std::to_string(k) + "]", "list must be strictly decreasing");
}

void require_range(const std::vector<double>& v, const std::string& field)
{
    if (v.size() != 2 || !(v[0] <= v[1]))
        throw ConfigError(field, "expected [lo, hi] with lo <= hi");
}

// ---------------------------------------------------------------- helpers

json space_to_json(const SpaceSpec& s)
{
    json j;
    j["kind"] = std::string(to_string(s.kind));
    j["n"] = s.n;
    if (s.kind == Topology::Interval)
        j["length"] = s.extent;
    else if (s.kind == Topology::Circle)
        j["circumference"] = s.extent;
    else {
        json edges = json::array();
        for (const Edge& e : s.edges)
            edges.push_back({e.a, e.b, e.length});
        j["edges"] = edges;
        j["weights"] = s.weights;
        j["k_lower"] = s.k_lower;
    }
    return j;
}

json config_to_json(const ExperimentConfig& c)
{
    json j;
    j["experiment"] = std::string(to_string(c.experiment));
    j["space"] = space_to_json(c.space);
    j["seed"] = c.seed;
    json phi{{"name", c.phi.name}, {"scale", c.phi.scale}, {"offset", c.phi.offset}};
    if (c.phi.name == "well")
        phi["center"] = c.phi.center;
    if (c.phi.name == "custom")
        phi["values"] = c.phi.values;
    switch (c.experiment) {
    case ExperimentKind::KernelValidate:
        j["kernel_times"] = c.kernel_times;
        j["ck_s"] = c.ck_s;
        j["ck_t"] = c.ck_t;
        break;
    case ExperimentKind::HjSweep:
        j["phi"] = phi;
        j["t"] = c.t;
        j["eps_list"] = c.eps_list;
        break;
    case ExperimentKind::Contraction:
        j["phi"] = phi;
        j["t_list"] = c.t_list;
        j["eps_list"] = c.eps_list;
        break;
    case ExperimentKind::Varadhan:
        j["t_grid"] = c.t_grid;
        j["x"] = c.x;
        j["y"] = c.y;
        break;
    case ExperimentKind::SetLdp:
        j["t_grid"] = c.t_grid;
        j["x"] = c.x;
        j["set"] = c.set;
        j["set_with_x"] = c.set_with_x;
        break;
    case ExperimentKind::VaradhanLemma:
        j["phi"] = phi;
        j["t_grid"] = c.t_grid;
        j["x"] = c.x;
        break;
    case ExperimentKind::GammaDirac:
        j["t_grid"] = c.t_grid;
        j["x"] = c.x;
        j["z"] = c.z;
        break;
    case ExperimentKind::TubeLdp:
        j["t_grid"] = c.t_grid;
        j["path"] = c.path;
        j["radius_mesh"] = c.radius_mesh;
        j["mc_t"] = c.mc_t;
        j["mc_radius"] = c.mc_radius;
        j["mc_samples"] = c.mc_samples;
        break;
    case ExperimentKind::SchrodingerSweep:
        j["eps_list"] = c.eps_list;
        j["bump_centers"] = c.bump_centers;
        j["bump_sigma"] = c.bump_sigma;
        j["sinkhorn_tol"] = c.sinkhorn_tol;
        break;
    }
    j["tolerances"] = c.tolerances;
    return j;
}

// Grid point for a location: a coordinate on interval/circle, an index on graphs.
Index locate(const DiscreteSpace& space, double value, const std::string& field)
{
    if (space.topology() == Topology::Graph) {
        if (value != std::floor(value) || value < 0 || value >= static_cast<double>(space.size()))
            throw ConfigError(field, "expected a node index on graph spaces");
        return static_cast<Index>(value);
    }
    if (value < 0.0 || value > space.extent())
        throw ConfigError(field, "coordinate outside [0, " + std::to_string(space.extent()) + "]");
    return space.nearest_point(value);
}

std::vector<Index> locate_set(const DiscreteSpace& space, const std::vector<double>& range,
                              const std::string& field)
{
    std::vector<Index> out;
    if (space.topology() == Topology::Graph) {
        for (Index i = 0; i < space.size(); ++i)
            if (static_cast<double>(i) >= range[0] && static_cast<double>(i) <= range[1])
                out.push_back(i);
    } else {
        out = space.points_in(range[0], range[1]);
    }
    if (out.empty())
        throw ConfigError(field, "contains no grid points");
    return out;
}

struct PhiField {
    Field values;
    std::optional<Profile> profile;  // only for catalogue entries defined by coordinate
};

PhiField make_phi(const DiscreteSpace& space, const PhiSpec& p)
{
    const double a = p.scale, b = p.offset;
    PhiField out;
    if (p.name == "custom") {
        out.values = a * Eigen::Map<const Field>(p.values.data(), space.size()).array() + b;
        return out;
    }
    if (p.name == "well") {
        const Index c = locate(space, p.center, "phi.center");
        out.values = a * space.distances().col(c).array().square() + b;
        if (space.topology() != Topology::Graph) {
            const double xc = (*space.coords())[c];
            const double ext = space.extent();
            const bool circle = space.topology() == Topology::Circle;
            out.profile = [=](double s) {
                double d = std::abs(s - xc);
                if (circle)
                    d = std::min(d, ext - d);
                return a * d * d + b;
            };
        }
        return out;
    }
    if (space.topology() == Topology::Graph)
        throw ConfigError("phi.name", "'" + p.name + "' needs coordinates; use custom on graphs");
    if (p.name == "sin") {
        const double k = 2.0 * std::numbers::pi / space.extent();
        out.profile = [=](double s) { return a * std::sin(k * s) + b; };
    } else {
        out.profile = [=](double s) { return a * s + b; };
    }
    out.values = sample(space, *out.profile);
    return out;
}

Check make_check(std::string name, std::string invariant, double measured, double reference,
                 double tolerance, bool pass)
{
    return {std::move(name), std::move(invariant), measured, reference, tolerance, pass};
}

// |measured - reference| <= tolerance
Check abs_check(std::string name, std::string invariant, double measured, double reference,
                double tolerance)
{
    const bool pass = std::abs(measured - reference) <= tolerance;
    return make_check(std::move(name), std::move(invariant), measured, reference, tolerance, pass);
}

// |measured - reference| <= tolerance |reference|
Check rel_check(std::string name, std::string invariant, double measured, double reference,
                double tolerance)
{
    const bool pass = std::abs(measured - reference) <= tolerance * std::abs(reference);
    return make_check(std::move(name), std::move(invariant), measured, reference, tolerance, pass);
}

// measured <= tolerance
Check upper_check(std::string name, std::string invariant, double measured, double tolerance)
{
    return make_check(std::move(name), std::move(invariant), measured, 0.0, tolerance,
                      measured <= tolerance);
}

Table fit_table(std::string name, const LimitFit& fit)
{
    Table t{std::move(name), {"t", "value", "fitted_limit", "target", "rel_err", "window_lo", "window_hi"}, {}};
    for (std::size_t k = 0; k < fit.t_grid.size(); ++k)
        t.rows.push_back({fit.t_grid[k], fit.values[k], fit.fitted_limit, fit.target, fit.rel_err(),
                          fit.window.lo, fit.window.hi});
    return t;
}

json window_echo(const DiscreteSpace& space, const std::vector<double>& kernel_times, bool enforced)
{
    const ResolutionWindow w = resolution_window(space);
    json in = json::array();
    for (double t : kernel_times)
        in.push_back(w.contains(t));
    return {{"lo", w.lo},
            {"hi", w.hi},
            {"degenerate_floor", degenerate_time_floor(space)},
            {"kernel_times", kernel_times},
            {"in_window", in},
            {"enforced", enforced}};
}

HeatOperator make_operator(const DiscreteSpace& space)
{
    return HeatOperator(assemble_generator(share(space)));
}

// ---------------------------------------------------------------- experiments

void run_kernel_validate(const ExperimentConfig& c, const DiscreteSpace& space, ResultBundle& b)
{
    const HeatOperator op = make_operator(space);
    const Index n = space.size();

    Table kt{"kernel", {"i", "j", "t", "p", "log_p"}, {}};
    double mass = 0.0, asym = 0.0, min_entry = kInf;
    std::vector<KernelMatrix> kernels;
    for (double t : c.kernel_times) {
        KernelMatrix km = op.kernel(t);
        const KernelReport rep = validate_kernel(km, space);
        mass = std::max(mass, rep.mass_error);
        asym = std::max(asym, rep.asymmetry);
        min_entry = std::min(min_entry, rep.min_entry);
        const Matrix logp = op.log_kernel(t);
        for (Index j = 0; j < n; ++j)
            kt.rows.push_back({0.0, static_cast<double>(j), t, km.density(0, j), logp(0, j)});
        kernels.push_back(std::move(km));
    }
    b.tables.push_back(std::move(kt));
    const double ck = validate_kernel(op, c.ck_s, c.ck_t).ck_defect;

    // Generator identities on seeded random fields.
    const Generator& gen = op.generator();
    const double constants = gen.apply(Field::Ones(n)).cwiseAbs().maxCoeff();
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> normal;
    double sym = 0.0;
    const Field& w = space.weights();
    for (int trial = 0; trial < 4; ++trial) {
        Field f(n), g(n);
        for (Index i = 0; i < n; ++i)
            f[i] = normal(rng);
        for (Index i = 0; i < n; ++i)
            g[i] = normal(rng);
        const Field lf = gen.apply(f), lg = gen.apply(g);
        const double lhs = (w.array() * g.array() * lf.array()).sum();
        const double rhs = (w.array() * f.array() * lg.array()).sum();
        const double scale = (w.array() * (g.array() * lf.array()).abs()).sum() +
                             (w.array() * (f.array() * lg.array()).abs()).sum();
        sym = std::max(sym, std::abs(lhs - rhs) / scale);
    }

    b.checks.push_back(upper_check("row_mass", "max_i |sum_j p_t(i,j) w_j - 1| <= tol over kernel_times",
                                   mass, c.tolerance("row_mass", 1e-10)));
    b.checks.push_back(upper_check("symmetry", "max |p_t(i,j) - p_t(j,i)| <= tol over kernel_times",
                                   asym, c.tolerance("symmetry", 1e-10)));
    b.checks.push_back(upper_check("chapman_kolmogorov", "max |p_s W p_t - p_{s+t}| <= tol at (ck_s, ck_t)",
                                   ck, c.tolerance("chapman_kolmogorov", 1e-8)));
    b.checks.push_back(upper_check("generator_constants", "max |L 1| <= tol", constants,
                                   c.tolerance("generator_constants", 1e-12)));
    b.checks.push_back(upper_check("generator_symmetry",
                                   "relative |<g, Lf>_w - <f, Lg>_w| on seeded random fields <= tol",
                                   sym, c.tolerance("generator_symmetry", 1e-12)));
    b.checks.push_back(upper_check("eigen_reconstruction", "||L f + sum lambda <u,f> u|| / ||L f|| <= tol",
                                   op.reconstruction_residual(), c.tolerance("eigen_reconstruction", 1e-9)));

    if (space.topology() != Topology::Circle)
        return;
    // Oracle comparisons along the row of point 0 at offsets where the kernel
    // is at least e^{-10} of its peak, so relative errors are meaningful.
    Table cont{"oracle", {"t", "x", "y", "spectral", "oracle", "rel_err"}, {}};
    Table latt{"lattice_oracle", {"t", "x", "y", "spectral", "oracle", "rel_err"}, {}};
    double cont_err = 0.0, latt_err = 0.0;
    for (std::size_t k = 0; k < c.kernel_times.size(); ++k) {
        const double t = c.kernel_times[k];
        for (Index off = 0; off <= n / 2; off = off == 0 ? 1 : 2 * off) {
            const double d = space.dist(0, off);
            if (d * d / (4.0 * t) > 10.0)
                break;
            const double spectral = kernels[k].density(0, off);
            const OracleValue ov = circle_kernel_oracle(space.extent(), t, 0.0, d, 50);
            const double lat = circle_lattice_kernel(n, space.extent(), t, 0, off);
            const double ce = std::abs(spectral - ov.value) / ov.value;
            const double le = std::abs(spectral - lat) / lat;
            cont.rows.push_back({t, 0.0, d, spectral, ov.value, ce});
            latt.rows.push_back({t, 0.0, d, spectral, lat, le});
            if (off == 0)
                cont_err = std::max(cont_err, ce);
            latt_err = std::max(latt_err, le);
        }
    }
    b.tables.push_back(std::move(cont));
    b.tables.push_back(std::move(latt));
    b.checks.push_back(upper_check("continuum_oracle",
                                   "max over kernel_times of the on-diagonal relative error against the wrapped-Gaussian series <= tol",
                                   cont_err, c.tolerance("continuum_oracle", 1e-6)));
    b.checks.push_back(upper_check("lattice_oracle",
                                   "max relative error against the discrete Fourier series over all tabulated points <= tol",
                                   latt_err, c.tolerance("lattice_oracle", 1e-6)));
}

std::vector<double> sweep_row(const SweepRow& r, double t, double floor)
{
    const ContractionReport& cr = r.contraction;
    return {r.eps, t, r.sup_error, r.mean_error, floor, cr.lip_evolved, cr.bound_lip,
            cr.lap_neg_evolved, cr.bound_lap, cr.pass() ? 1.0 : 0.0};
}

const std::vector<std::string> kSweepColumns{"eps", "t", "sup_err", "mean_err", "floor", "lip_evolved",
                                             "lip_bound", "lapneg_evolved", "lapneg_bound", "pass"};

void run_hj_sweep(const ExperimentConfig& c, const DiscreteSpace& space, ResultBundle& b)
{
    const HeatOperator op = make_operator(space);
    const PhiField phi = make_phi(space, c.phi);
    const SweepTable sweep = phi.profile ? convergence_sweep(op, *phi.profile, c.t, c.eps_list)
                                         : convergence_sweep(op, phi.values, c.t, c.eps_list);
    Table table{"sweep", kSweepColumns, {}};
    for (const SweepRow& r : sweep.rows)
        table.rows.push_back(sweep_row(r, c.t, sweep.floor));
    b.tables.push_back(std::move(table));

    const double sup_phi = phi.values.cwiseAbs().maxCoeff();
    const double osc = phi.values.maxCoeff() - phi.values.minCoeff();
    const double zero = c.tolerance("zero_error", 1e-12);

    // Strict decrease, except that an already-zero error may stay zero.
    double worst_step = -kInf;
    bool decreasing = true;
    for (std::size_t k = 1; k < sweep.rows.size(); ++k) {
        const double prev = sweep.rows[k - 1].sup_error, cur = sweep.rows[k].sup_error;
        worst_step = std::max(worst_step, cur - prev);
        if (!(cur < prev) && !(cur <= zero && prev <= zero))
            decreasing = false;
    }
    if (sweep.rows.size() > 1)
        b.checks.push_back(make_check("error_decreasing",
                                      "sup error strictly decreasing along the eps list (measured: largest step)",
                                      worst_step, 0.0, 0.0, decreasing));

    const double floor = std::isnan(sweep.floor) ? 0.0 : sweep.floor;
    const double bound = std::max({2.0 * floor, c.tolerance("final_osc_fraction", 0.02) * osc, zero});
    b.checks.push_back(upper_check("final_error",
                                   "sup error at the smallest eps <= max(2 floor, 0.02 osc(phi))",
                                   sweep.rows.back().sup_error, bound));
    b.checks.push_back(upper_check("first_error", "sup error at the largest eps <= 2 ||phi||",
                                   sweep.rows.front().sup_error, 2.0 * sup_phi + zero));
    double sup_excess = -kInf;
    for (const SweepRow& r : sweep.rows)
        sup_excess = std::max(sup_excess, r.contraction.sup_evolved - r.contraction.sup_initial);
    b.checks.push_back(upper_check("sup_bound", "||phi_t^eps|| - ||phi|| <= tol for every eps",
                                   sup_excess, c.tolerance("sup_bound", 1e-10)));
}

void run_contraction(const ExperimentConfig& c, const DiscreteSpace& space, ResultBundle& b)
{
    const HeatOperator op = make_operator(space);
    const PhiField phi = make_phi(space, c.phi);
    Table table{"sweep", kSweepColumns, {}};
    double lip_ratio = -kInf, lap_excess = -kInf, sup_excess = -kInf;
    bool pass_lip = true, pass_lap = true, pass_sup = true;
    double lip_tol = 0.0, lap_tol = 0.0;
    for (double t : c.t_list) {
        const Field target = hopf_lax_sup(space, phi.values, t).values;
        for (double eps : c.eps_list) {
            const ViscousSolution sol = viscous_semigroup(op, phi.values, t, eps);
            SweepRow row;
            row.eps = eps;
            const Field err = (sol.values - target).cwiseAbs();
            row.sup_error = err.maxCoeff();
            row.mean_error = err.mean();
            row.contraction = contraction_check(op, sol);
            row.resolution_warning = sol.resolution_warning;
            table.rows.push_back(sweep_row(row, t, kNaN));

            const ContractionReport& r = row.contraction;
            lip_ratio = std::max(lip_ratio, r.bound_lip > 0.0 ? r.lip_evolved / r.bound_lip
                                                              : (r.lip_evolved > 0.0 ? kInf : 1.0));
            lap_excess = std::max(lap_excess, r.lap_neg_evolved - r.bound_lap);
            sup_excess = std::max(sup_excess, r.sup_evolved - r.sup_initial);
            lip_tol = std::max(lip_tol, r.rtol);
            lap_tol = std::max(lap_tol, r.rtol * r.lap_scale);
            pass_lip = pass_lip && r.pass_lip;
            pass_lap = pass_lap && r.pass_lap;
            pass_sup = pass_sup && r.pass_sup;
        }
    }
    b.tables.push_back(std::move(table));
    b.checks.push_back(make_check("lipschitz", "Lip(phi_t^eps) / bound_lip <= 1 + rtol for every (t, eps)",
                                  lip_ratio, 1.0, lip_tol, pass_lip));
    b.checks.push_back(make_check("laplacian",
                                  "||(L phi_t^eps)^-|| - bound_lap <= rtol ||L phi|| for every (t, eps)",
                                  lap_excess, 0.0, lap_tol, pass_lap));
    b.checks.push_back(make_check("sup_bound", "||phi_t^eps|| - ||phi|| <= 1e-10 for every (t, eps)",
                                  sup_excess, 0.0, 1e-10, pass_sup));
}

void run_varadhan(const ExperimentConfig& c, const DiscreteSpace& space, ResultBundle& b)
{
    const HeatOperator op = make_operator(space);
    const Index x = locate(space, c.x, "x"), y = locate(space, c.y, "y");
    const LimitFit fit = varadhan_pointwise(op, x, y, c.t_grid);
    b.tables.push_back(fit_table("fit", fit));
    b.checks.push_back(rel_check("varadhan_limit", "|fitted t log p_t(x,y) - (-d^2/4)| <= tol |d^2/4|",
                                 fit.fitted_limit, fit.target, c.tolerance("varadhan_limit", 0.05)));
}

void run_set_ldp(const ExperimentConfig& c, const DiscreteSpace& space, ResultBundle& b)
{
    const HeatOperator op = make_operator(space);
    const Index x = locate(space, c.x, "x");
    const std::vector<Index> set = locate_set(space, c.set, "set");
    const std::vector<Index> with_x = locate_set(space, c.set_with_x, "set_with_x");
    if (std::find(with_x.begin(), with_x.end(), x) == with_x.end())
        throw ConfigError("set_with_x", "must contain x");
    std::vector<Index> both = set;
    both.insert(both.end(), with_x.begin(), with_x.end());
    std::sort(both.begin(), both.end());
    both.erase(std::unique(both.begin(), both.end()), both.end());

    // Every point set is clopen: the open (lower) and closed (upper) bound
    // share the set, the fit and the target.
    const std::vector<std::vector<Index>> sets{set, with_x, both};
    const std::vector<LimitFit> fits = ldp_set_bounds(op, x, sets, c.t_grid);
    const LimitFit& fit = fits[0];
    const LimitFit& fx = fits[1];
    const LimitFit& fboth = fits[2];
    b.tables.push_back(fit_table("fit", fit));
    b.tables.push_back(fit_table("fit_with_x", fx));
    b.checks.push_back(rel_check("set_limit", "|fitted t log mu_t(A) - (-min_A I)| <= tol |min_A I|",
                                 fit.fitted_limit, fit.target, c.tolerance("set_limit", 0.10)));
    b.checks.push_back(abs_check("set_with_x_limit", "|fitted t log mu_t(A') - 0| <= tol for A' containing x",
                                 fx.fitted_limit, 0.0, c.tolerance("set_with_x_limit", 0.005)));
    b.checks.push_back(make_check("enlarging_set", "fitted limit of A u A' >= fitted limit of A",
                                  fboth.fitted_limit - fit.fitted_limit, 0.0, 0.0,
                                  fboth.fitted_limit >= fit.fitted_limit));
}

void run_varadhan_lemma(const ExperimentConfig& c, const DiscreteSpace& space, ResultBundle& b)
{
    const HeatOperator op = make_operator(space);
    const Index x = locate(space, c.x, "x");
    const PhiField phi = make_phi(space, c.phi);
    const LimitFit fit = varadhan_lemma_check(op, x, phi.values, c.t_grid);
    const double level = phi.values.mean();
    const LimitFit flat = varadhan_lemma_check(op, x, Field::Constant(space.size(), level), c.t_grid);
    double flat_err = std::abs(flat.fitted_limit - level);
    for (double v : flat.values)
        flat_err = std::max(flat_err, std::abs(v - level));
    b.tables.push_back(fit_table("fit", fit));
    b.tables.push_back(fit_table("fit_constant", flat));
    b.checks.push_back(rel_check("lemma_limit", "|fitted t log int e^{phi/t} dmu_t - max(phi - I)| <= tol |max(phi - I)|",
                                 fit.fitted_limit, fit.target, c.tolerance("lemma_limit", 0.05)));
    b.checks.push_back(upper_check("lemma_constant", "constant phi = c gives v(t) = c exactly (max deviation)",
                                   flat_err, c.tolerance("lemma_constant", 1e-12)));
}

void run_gamma_dirac(const ExperimentConfig& c, const DiscreteSpace& space, ResultBundle& b)
{
    const HeatOperator op = make_operator(space);
    const Index x = locate(space, c.x, "x"), z = locate(space, c.z, "z");
    const GammaDiracFit g = gamma_dirac_check(op, x, z, c.t_grid, default_radius_rule(space));
    b.tables.push_back(fit_table("fit", g.fit));
    Table radii{"radii", {"t", "radius"}, {}};
    for (std::size_t k = 0; k < g.radii.size(); ++k)
        radii.rows.push_back({c.t_grid[k], g.radii[k]});
    b.tables.push_back(std::move(radii));
    const double vmin = *std::min_element(g.fit.values.begin(), g.fit.values.end());
    b.checks.push_back(rel_check("gamma_limit", "|fitted -t log mu_t(B_r(t)(z)) - I(z)| <= tol I(z)",
                                 g.fit.fitted_limit, g.fit.target, c.tolerance("gamma_limit", 0.10)));
    b.checks.push_back(upper_check("conditioned_entropy",
                                   "max_t |H(mu_t|_B / mu_t(B) | mu_t) + log mu_t(B)| <= tol",
                                   g.entropy_identity_defect, c.tolerance("conditioned_entropy", 1e-12)));
    b.checks.push_back(make_check("nonnegative", "v(t) >= 0 for every t (measured: min v)", vmin, 0.0, 0.0,
                                  vmin >= 0.0));
}

void run_tube_ldp(const ExperimentConfig& c, const DiscreteSpace& space, ResultBundle& b)
{
    const HeatOperator op = make_operator(space);
    std::vector<Index> points;
    for (std::size_t k = 0; k < c.path.size(); ++k)
        points.push_back(locate(space, c.path[k], "path[" + std::to_string(k) + "]"));
    const PartitionPath ref{Partition::uniform(static_cast<int>(points.size()) - 1), points};
    const double r = c.radius_mesh * space.mesh();
    const TubeFit tf = tube_ldp_check(op, ref, r, c.t_grid, c.tolerance("fit_slack_fraction", 0.15));

    Table table{"tube", {"t", "log_prob", "t_log_prob", "ell", "window_lo", "window_hi", "in_window"}, {}};
    for (const TubeRow& row : tf.rows)
        table.rows.push_back({row.t, row.log_prob, row.t_log_prob, tf.ell, tf.window_lo, tf.window_hi,
                              (row.t_log_prob >= tf.window_lo && row.t_log_prob <= tf.window_hi) ? 1.0 : 0.0});
    b.tables.push_back(std::move(table));
    b.tables.push_back(fit_table("fit", tf.fit));
    const double centre = 0.5 * (tf.window_lo + tf.window_hi);
    b.checks.push_back(make_check("tube_window", "fitted t log P(tube) in [-l - 0.15 l, -l + C r + 0.15 l]",
                                  tf.fit.fitted_limit, centre, 0.5 * (tf.window_hi - tf.window_lo),
                                  tf.in_window()));

    // Seeded Monte Carlo estimate of a wide tube against the exact recursion.
    const SlowedBM bm(op, points.front(), c.mc_t);
    const double p = std::exp(tube_log_probability(bm, ref, c.mc_radius));
    const std::vector<PartitionPath> paths = sample_paths(bm, ref.partition, c.seed, c.mc_samples);
    std::size_t hits = 0;
    for (const PartitionPath& path : paths)
        hits += in_tube(space, path, ref, c.mc_radius) ? 1 : 0;
    const double nmc = static_cast<double>(c.mc_samples);
    const double phat = static_cast<double>(hits) / nmc;
    const double band = c.tolerance("mc_sigmas", 3.0) * std::sqrt(p * (1.0 - p) / nmc);
    Table mc{"tube_monte_carlo", {"t", "radius", "samples", "exact", "estimate"}, {}};
    mc.rows.push_back({c.mc_t, c.mc_radius, nmc, p, phat});
    b.tables.push_back(std::move(mc));
    b.checks.push_back(abs_check("tube_monte_carlo", "|sampled tube frequency - exact| <= 3 binomial sigma",
                                 phat, p, band));
}

void run_schrodinger(const ExperimentConfig& c, const DiscreteSpace& space, ResultBundle& b)
{
    const HeatOperator op = make_operator(space);
    const double sigma = c.bump_sigma;
    auto bump = [&](double centre) {
        Field v(space.size());
        for (Index i = 0; i < space.size(); ++i) {
            double d = std::abs((*space.coords())[i] - centre);
            if (space.topology() == Topology::Circle)
                d = std::min(d, space.extent() - d);
            v[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        }
        return Density::normalized(space, v);
    };
    const Density mu0 = bump(c.bump_centers[0]);
    const Density mu1 = bump(c.bump_centers[1]);
    SinkhornOptions opts;
    opts.tol = c.sinkhorn_tol;
    const std::vector<GammaRow> rows = gamma_sweep(op, mu0, mu1, c.eps_list, opts);
    const W2Result w2 = exact_w2(space, mu0, mu1);

    Table table{"schrodinger", {"eps", "cost", "eps_cost", "half_w2sq", "gap", "iters", "marginal_defect"}, {}};
    for (const GammaRow& r : rows)
        table.rows.push_back({r.eps, r.cost, r.eps_cost, r.half_w2sq, r.gap,
                              r.skipped ? kNaN : static_cast<double>(r.iterations),
                              r.skipped ? kNaN : r.marginal_defect});
    b.tables.push_back(std::move(table));

    std::vector<const GammaRow*> solved;
    for (const GammaRow& r : rows)
        if (!r.skipped)
            solved.push_back(&r);
    if (solved.empty())
        throw ResolutionError("schrodinger_sweep: every eps/2 lies outside the resolution window");

    bool decreasing = true;
    double worst_step = -kInf, defect = 0.0, descent = 0.0;
    for (std::size_t k = 0; k < solved.size(); ++k) {
        if (k > 0) {
            worst_step = std::max(worst_step, solved[k]->gap - solved[k - 1]->gap);
            decreasing = decreasing && solved[k]->gap < solved[k - 1]->gap;
        }
        defect = std::max(defect, solved[k]->marginal_defect);
        descent = std::max(descent, solved[k]->dual_descent);
    }
    const double half = 0.5 * w2.w2_squared;
    if (solved.size() > 1)
        b.checks.push_back(make_check("gap_decreasing",
                                      "|eps C_eps - W2^2/2| strictly decreasing along eps (measured: largest step)",
                                      worst_step, 0.0, 0.0, decreasing));
    b.checks.push_back(upper_check("final_gap", "gap at the smallest eps <= 0.1 W2^2/2", solved.back()->gap,
                                   c.tolerance("final_gap_fraction", 0.1) * half));
    b.checks.push_back(upper_check("marginal_defect", "max Sinkhorn marginal defect (mass units) <= tol", defect,
                                   c.tolerance("marginal_defect", 1e-9)));
    b.checks.push_back(upper_check("dual_ascent", "largest per-iteration decrease of the dual objective <= tol",
                                   descent, c.tolerance("dual_ascent", 1e-12)));
    if (space.topology() == Topology::Interval)
        b.checks.push_back(abs_check("w2_quantile", "|simplex W2^2 - monotone-coupling W2^2| <= tol",
                                     w2.w2_squared, w2.quantile_w2_squared, c.tolerance("w2_quantile", 1e-9)));
}

}  // namespace

// ---------------------------------------------------------------- public

std::string_view to_string(ExperimentKind k)
{
    for (const auto& [kind, name] : kNames)
        if (kind == k)
            return name;
    return "unknown";
}

std::optional<ExperimentKind> experiment_from_string(std::string_view s)
{
    for (const auto& [kind, name] : kNames)
        if (name == s)
            return kind;
    return std::nullopt;
}

const std::vector<ExperimentKind>& all_experiments()
{
    static const std::vector<ExperimentKind> all = [] {
        std::vector<ExperimentKind> v;
        for (const auto& entry : kNames)
            v.push_back(entry.first);
        return v;
    }();
    return all;
}

DiscreteSpace build_space(const SpaceSpec& spec)
{
    switch (spec.kind) {
    case Topology::Interval: return DiscreteSpace::interval(spec.n, spec.extent);
    case Topology::Circle: return DiscreteSpace::circle(spec.n, spec.extent);
    case Topology::Graph: return DiscreteSpace::graph(spec.n, spec.edges, spec.weights, spec.k_lower);
    }
    throw DomainError("unknown space kind");
}

double ExperimentConfig::tolerance(const std::string& name, double fallback) const
{
    auto it = tolerances.find(name);
    return it == tolerances.end() ? fallback : it->get<double>();
}

ExperimentConfig parse_config(const json& j)
{
    if (!j.is_object())
        throw ConfigError("<root>", "expected an object");
    reject_unknown(j, "", {"experiment", "space", "phi", "seed", "kernel_times", "ck_s", "ck_t", "t", "t_list",
                           "eps_list", "t_grid", "x", "y", "z", "set", "set_with_x", "path", "radius_mesh", "mc_t",
                           "mc_radius", "mc_samples", "bump_centers", "bump_sigma", "sinkhorn_tol", "tolerances"});
    ExperimentConfig c;
    const json* exp = find(j, "experiment");
    if (!exp || !exp->is_string())
        throw ConfigError("experiment", "missing experiment name");
    const auto kind = experiment_from_string(exp->get<std::string>());
    if (!kind)
        throw ConfigError("experiment", "unknown experiment '" + exp->get<std::string>() + "'");
    c.experiment = *kind;
    const json* space = find(j, "space");
    if (!space)
        throw ConfigError("space", "missing");
    c.space = parse_space(*space);
    c.seed = unsigned_integer(j, "seed", 0);
    if (const json* phi = find(j, "phi"))
        c.phi = parse_phi(*phi, c.space.n);

    c.kernel_times = numbers(j, "", "kernel_times", c.kernel_times);
    c.ck_s = number(j, "", "ck_s", c.ck_s);
    c.ck_t = number(j, "", "ck_t", c.ck_t);
    c.t = number(j, "", "t", c.t);
    c.t_list = numbers(j, "", "t_list", c.t_list);
    c.eps_list = numbers(j, "", "eps_list", c.eps_list);
    c.t_grid = numbers(j, "", "t_grid", c.t_grid);
    c.x = number(j, "", "x", c.x);
    c.y = number(j, "", "y", c.y);
    c.z = number(j, "", "z", c.z);
    c.set = numbers(j, "", "set", c.set);
    c.set_with_x = numbers(j, "", "set_with_x", c.set_with_x);
    c.path = numbers(j, "", "path", c.path);
    c.radius_mesh = number(j, "", "radius_mesh", c.radius_mesh);
    c.mc_t = number(j, "", "mc_t", c.mc_t);
    c.mc_radius = number(j, "", "mc_radius", c.mc_radius);
    c.mc_samples = unsigned_integer(j, "mc_samples", c.mc_samples);
    c.bump_centers = numbers(j, "", "bump_centers", c.bump_centers);
    c.bump_sigma = number(j, "", "bump_sigma", c.bump_sigma);
    c.sinkhorn_tol = number(j, "", "sinkhorn_tol", c.sinkhorn_tol);
    if (const json* tol = find(j, "tolerances")) {
        if (!tol->is_object())
            throw ConfigError("tolerances", "expected an object of name: number");
        for (auto it = tol->begin(); it != tol->end(); ++it)
            as_number(it.value(), "tolerances." + it.key());
        c.tolerances = *tol;
    }

    switch (c.experiment) {
    case ExperimentKind::KernelValidate:
        require_positive(c.kernel_times, "kernel_times");
        if (!(c.ck_s > 0.0))
            throw ConfigError("ck_s", "must be positive");
        if (!(c.ck_t > 0.0))
            throw ConfigError("ck_t", "must be positive");
        break;
    case ExperimentKind::HjSweep:
        if (!(c.t > 0.0))
            throw ConfigError("t", "must be positive");
        require_decreasing(c.eps_list, "eps_list");
        break;
    case ExperimentKind::Contraction:
        require_positive(c.t_list, "t_list");
        require_positive(c.eps_list, "eps_list");
        for (std::size_t k = 0; k < c.eps_list.size(); ++k)
            if (c.eps_list[k] > 1.0)
                throw ConfigError("eps_list[" + std::to_string(k) + "]", "contraction needs eps <= 1");
        break;
    case ExperimentKind::Varadhan:
    case ExperimentKind::GammaDirac:
        require_decreasing(c.t_grid, "t_grid");
        break;
    case ExperimentKind::SetLdp:
        require_decreasing(c.t_grid, "t_grid");
        require_range(c.set, "set");
        if (c.set_with_x.empty())
            c.set_with_x = {c.x - 0.05 * c.space.extent, c.x + 0.05 * c.space.extent};
        require_range(c.set_with_x, "set_with_x");
        break;
    case ExperimentKind::VaradhanLemma:
        require_decreasing(c.t_grid, "t_grid");
        break;
    case ExperimentKind::TubeLdp:
        require_decreasing(c.t_grid, "t_grid");
        if (c.path.size() < 2)
            throw ConfigError("path", "needs at least two nodes");
        if (!(c.radius_mesh >= 1.0))
            throw ConfigError("radius_mesh", "tube radius must be at least one mesh");
        if (!(c.mc_t > 0.0))
            throw ConfigError("mc_t", "must be positive");
        if (!(c.mc_radius > 0.0))
            throw ConfigError("mc_radius", "must be positive");
        if (c.mc_samples == 0)
            throw ConfigError("mc_samples", "must be positive");
        break;
    case ExperimentKind::SchrodingerSweep:
        require_decreasing(c.eps_list, "eps_list");
        if (c.space.kind == Topology::Graph)
            throw ConfigError("space.kind", "schrodinger_sweep places bumps by coordinate");
        if (c.bump_centers.size() != 2)
            throw ConfigError("bump_centers", "expected two centres");
        if (!(c.bump_sigma > 0.0))
            throw ConfigError("bump_sigma", "must be positive");
        if (!(c.sinkhorn_tol > 0.0))
            throw ConfigError("sinkhorn_tol", "must be positive");
        break;
    }
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("--config", "cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("--config", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

bool ResultBundle::all_pass() const
{
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Table* ResultBundle::table(std::string_view name) const
{
    for (const Table& t : tables)
        if (t.name == name)
            return &t;
    return nullptr;
}

const Check* ResultBundle::check(std::string_view name) const
{
    for (const Check& c : checks)
        if (c.name == name)
            return &c;
    return nullptr;
}

ResultBundle run_experiment(const ExperimentConfig& c)
{
    const DiscreteSpace space = build_space(c.space);
    ResultBundle b;
    b.experiment = std::string(to_string(c.experiment));
    b.config = config_to_json(c);

    // Resolution echo and validation, before any kernel is computed.
    std::vector<double> times;
    bool enforced = false;
    switch (c.experiment) {
    case ExperimentKind::KernelValidate:
        times = c.kernel_times;
        times.insert(times.end(), {c.ck_s, c.ck_t, c.ck_s + c.ck_t});
        break;
    case ExperimentKind::HjSweep:
        for (double eps : c.eps_list)
            times.push_back(0.5 * eps * c.t);
        break;
    case ExperimentKind::Contraction:
        for (double t : c.t_list)
            for (double eps : c.eps_list)
                times.push_back(0.5 * eps * t);
        break;
    case ExperimentKind::TubeLdp:
    case ExperimentKind::Varadhan:
    case ExperimentKind::SetLdp:
    case ExperimentKind::VaradhanLemma:
    case ExperimentKind::GammaDirac:
        times = c.t_grid;
        enforced = true;
        break;
    case ExperimentKind::SchrodingerSweep:
        for (double eps : c.eps_list)
            times.push_back(0.5 * eps);
        break;
    }
    b.resolution = window_echo(space, times, enforced);
    if (enforced) {
        const ResolutionWindow w = resolution_window(space);
        for (std::size_t k = 0; k < c.t_grid.size(); ++k)
            if (!w.contains(c.t_grid[k]))
                throw ResolutionError("config field 't_grid[" + std::to_string(k) + "]': time " +
                                      std::to_string(c.t_grid[k]) + " outside resolution window [" +
                                      std::to_string(w.lo) + ", " + std::to_string(w.hi) + "]");
    }

    switch (c.experiment) {
    case ExperimentKind::KernelValidate: run_kernel_validate(c, space, b); break;
    case ExperimentKind::HjSweep: run_hj_sweep(c, space, b); break;
    case ExperimentKind::Contraction: run_contraction(c, space, b); break;
    case ExperimentKind::Varadhan: run_varadhan(c, space, b); break;
    case ExperimentKind::SetLdp: run_set_ldp(c, space, b); break;
    case ExperimentKind::VaradhanLemma: run_varadhan_lemma(c, space, b); break;
    case ExperimentKind::GammaDirac: run_gamma_dirac(c, space, b); break;
    case ExperimentKind::TubeLdp: run_tube_ldp(c, space, b); break;
    case ExperimentKind::SchrodingerSweep: run_schrodinger(c, space, b); break;
    }
    return b;
}

}  // namespace hjlab
