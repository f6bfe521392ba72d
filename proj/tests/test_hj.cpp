#include "hjlab/hj.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace hjlab;

namespace {

HeatOperator heat_of(DiscreteSpace s)
{
    return spectral_decomposition(assemble_generator(share(std::move(s))));
}

}  // namespace

TEST_CASE("hopf-lax examples")
{
    const DiscreteSpace s = DiscreteSpace::interval(101, 2.0);
    const Field y = *s.coords();
    const Index x0 = s.nearest_point(1.0);
    // sup_y { (y - 1) - (y - 1)^2 } = 1/4 at y = 1.5
    const HopfLaxResult sup = hopf_lax_sup(s, (y.array() - 1.0).matrix(), 0.5);
    CHECK(sup.values[x0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(sup.argopt[static_cast<std::size_t>(x0)] == s.nearest_point(1.5));

    // inf-convolution of a well with itself
    const Field well = (y.array() - 1.0).square();
    const HopfLaxResult inf = hopf_lax_inf(s, well, 0.5);
    for (Index i = 0; i < s.size(); i += 10)
        CHECK(inf.values[i] <= well[i] + 1e-15);
    CHECK(inf.values[x0] == 0.0);
}

TEST_CASE("hopf-lax order and duality")
{
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    const DiscreteSpace s = DiscreteSpace::circle(40, 3.0);
    Field f(40), g(40);
    for (Index i = 0; i < 40; ++i) {
        f[i] = nd(rng);
        g[i] = f[i] + std::abs(nd(rng));
    }
    const Field qf = hopf_lax_inf(s, f, 0.7).values;
    const Field qg = hopf_lax_inf(s, g, 0.7).values;
    CHECK(((qg - qf).array() >= -1e-15).all());
    const Field neg = -f;
    CHECK((hopf_lax_sup(s, f, 0.7).values + hopf_lax_inf(s, neg, 0.7).values).cwiseAbs().maxCoeff() == 0.0);
    // Constants are fixed points.
    CHECK((hopf_lax_inf(s, Field::Constant(40, 2.5), 1.0).values.array() == 2.5).all());
}

TEST_CASE("viscous semigroup on two nodes")
{
    const HeatOperator op = heat_of(DiscreteSpace::graph(2, {{0, 1, 1.0}}, {1.0, 1.0}, 0.0));
    const Field phi = (Field(2) << 0.3, -0.4).finished();
    const double t = 0.8, eps = 0.5;
    const ViscousSolution sol = viscous_semigroup(op, phi, t, eps);
    const double s = eps * t / 2.0;
    const double e = std::exp(-2.0 * s);
    const double p00 = 0.5 * (1.0 + e), p01 = 0.5 * (1.0 - e);
    const double expect0 = eps * std::log(p00 * std::exp(phi[0] / eps) + p01 * std::exp(phi[1] / eps));
    const double expect1 = eps * std::log(p01 * std::exp(phi[0] / eps) + p00 * std::exp(phi[1] / eps));
    CHECK(sol.values[0] == doctest::Approx(expect0).epsilon(1e-12));
    CHECK(sol.values[1] == doctest::Approx(expect1).epsilon(1e-12));
}

TEST_CASE("viscous semigroup properties")
{
    const DiscreteSpace s = DiscreteSpace::circle(64, 2.0 * std::numbers::pi);
    const HeatOperator op = heat_of(s);
    const ViscousSolution c = viscous_semigroup(op, Field::Constant(64, 1.7), 1.0, 0.1);
    CHECK((c.values.array() - 1.7).abs().maxCoeff() <= 1e-12);

    Field f(64);
    for (Index i = 0; i < 64; ++i)
        f[i] = std::sin((*s.coords())[i]);
    const Field g = (f.array() + 0.2 * (f.array() > 0).cast<double>()).matrix();
    const Field vf = viscous_semigroup(op, f, 1.0, 0.1).values;
    const Field vg = viscous_semigroup(op, g, 1.0, 0.1).values;
    CHECK(((vg - vf).array() >= -1e-12).all());
    // Below the Hopf-Lax sup target, above phi's pointwise value shifted.
    CHECK(vf.maxCoeff() <= f.maxCoeff() + 1e-12);

    CHECK_THROWS_AS(viscous_semigroup(op, f, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(viscous_semigroup(op, f, -1.0, 0.1), DomainError);
}

TEST_CASE("contraction on a flat circle")
{
    const DiscreteSpace s = DiscreteSpace::circle(128, 2.0 * std::numbers::pi);
    const HeatOperator op = heat_of(s);
    Field f(128);
    for (Index i = 0; i < 128; ++i)
        f[i] = std::sin((*s.coords())[i]);
    for (double t : {0.25, 4.0})
        for (double eps : {0.4, 0.025})
            CHECK(contraction_check(op, f, t, eps).pass());
}

TEST_CASE("convergence sweep with a constant datum")
{
    const HeatOperator op = heat_of(DiscreteSpace::circle(64, 2.0 * std::numbers::pi));
    const std::vector<double> eps{0.4, 0.1};
    const SweepTable tab = convergence_sweep(op, Field::Constant(64, -0.3), 1.0, eps);
    for (const SweepRow& r : tab.rows)
        CHECK(r.sup_error <= 1e-12);
}

TEST_CASE("integrated laplacian bound")
{
    const DiscreteSpace s = DiscreteSpace::interval(81, 1.0);
    const HeatOperator op = heat_of(s);
    const Field x = *s.coords();
    const Field phi = (x.array() * 6.0).sin().matrix();
    Field eta(81);
    for (Index i = 0; i < 81; ++i)
        eta[i] = std::exp(-40.0 * (x[i] - 0.5) * (x[i] - 0.5));
    const IntegratedBound b = laplacian_bound_integrated(op, phi, 0.3, eta);
    CHECK(b.lhs <= b.rhs + 1e-9);
    CHECK(laplacian_constant(op, phi, 0.3) >= 0.0);
}

TEST_CASE("hopf-lax residual is small on a fine grid")
{
    const DiscreteSpace s = DiscreteSpace::interval(401, 1.0);
    const Field x = *s.coords();
    const Field f = (x.array() - 0.5).abs().matrix();
    const double fine = hopflax_residual(s, f, 0.5, 0.01);
    CHECK(fine <= 0.05);
}
