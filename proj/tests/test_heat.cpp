#include "hjlab/heat.hpp"

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

HeatOperator two_node()
{
    return heat_of(DiscreteSpace::graph(2, {{0, 1, 1.0}}, {1.0, 1.0}, 0.0));
}

}  // namespace

TEST_CASE("two-node generator")
{
    const HeatOperator op = two_node();
    CHECK(op.eigenvalues()[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(op.eigenvalues()[1] == doctest::Approx(2.0).epsilon(1e-12));
    for (double t : {0.05, 0.5, 3.0}) {
        const KernelMatrix k = op.kernel(t);
        const double e = std::exp(-2.0 * t);
        CHECK(k.density(0, 0) == doctest::Approx(0.5 * (1.0 + e)).epsilon(1e-12));
        CHECK(k.density(0, 1) == doctest::Approx(0.5 * (1.0 - e)).epsilon(1e-12));
        CHECK(std::exp(op.log_kernel(t)(0, 1)) == doctest::Approx(0.5 * (1.0 - e)).epsilon(1e-12));
    }
}

TEST_CASE("generator on a quadratic")
{
    const DiscreteSpace s = DiscreteSpace::interval(21, 1.0);
    const Generator gen = assemble_generator(share(s));
    const Field x = *s.coords();
    const Field lf = gen.apply(x.array().square().matrix());
    for (Index i = 1; i + 1 < s.size(); ++i)
        CHECK(lf[i] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(gen.apply(Field::Constant(21, 4.0)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("generator is symmetric against the measure")
{
    std::mt19937_64 rng(9);
    std::normal_distribution<double> nd;
    const DiscreteSpace g = DiscreteSpace::graph(
        5, {{0, 1, 1.0}, {1, 2, 0.5}, {2, 3, 2.0}, {3, 4, 1.0}, {4, 0, 0.7}, {1, 3, 1.3}},
        {1.0, 2.0, 0.5, 1.5, 1.0}, 0.0);
    for (const DiscreteSpace& s : {g, DiscreteSpace::interval(17, 2.0), DiscreteSpace::circle(15, 3.0)}) {
        const Generator gen = assemble_generator(share(s));
        Field f(s.size()), h(s.size());
        for (Index i = 0; i < s.size(); ++i) {
            f[i] = nd(rng);
            h[i] = nd(rng);
        }
        const Field& w = s.weights();
        const double a = (w.array() * gen.apply(f).array() * h.array()).sum();
        const double b = (w.array() * f.array() * gen.apply(h).array()).sum();
        CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
    }
}

TEST_CASE("circle spectral gap")
{
    const HeatOperator op = heat_of(DiscreteSpace::circle(256, 2.0 * std::numbers::pi));
    CHECK(std::abs(op.eigenvalues()[1] - 1.0) <= 1e-3);
    CHECK(std::abs(op.eigenvalues()[2] - 1.0) <= 1e-3);
    CHECK(op.reconstruction_residual() <= 1e-9);
}

TEST_CASE("kernel properties")
{
    const DiscreteSpace s = DiscreteSpace::interval(60, 1.0);
    const HeatOperator op = heat_of(s);
    const KernelMatrix k = op.kernel(0.01);
    const KernelReport rep = validate_kernel(k, s);
    CHECK(rep.mass_error <= 1e-10);
    CHECK(rep.asymmetry <= 1e-10);
    CHECK(validate_kernel(op, 0.01, 0.03).ck_defect <= 1e-8);

    // Positive route agrees with the spectral sum where both are accurate.
    const Matrix lk = op.log_kernel(0.01);
    for (Index i = 0; i < s.size(); i += 7)
        for (Index j = 0; j < s.size(); j += 5)
            if (k.density(i, j) > 1e-6)
                CHECK(std::exp(lk(i, j)) == doctest::Approx(k.density(i, j)).epsilon(1e-9));

    CHECK_THROWS_AS(op.kernel(0.0), DomainError);
    CHECK_THROWS_AS(op.kernel(-1.0), DomainError);
}

TEST_CASE("maximum principle and equilibrium")
{
    const DiscreteSpace s = DiscreteSpace::circle(64, 2.0);
    const HeatOperator op = heat_of(s);
    Field f(64);
    for (Index i = 0; i < 64; ++i)
        f[i] = std::sin(0.3 * static_cast<double>(i * i));
    for (double t : {1e-3, 0.1, 1.0}) {
        const Field g = op.apply(t, f);
        CHECK(g.maxCoeff() <= f.maxCoeff() + 1e-12);
        CHECK(g.minCoeff() >= f.minCoeff() - 1e-12);
    }
    const double mean = (f.array() * s.weights().array()).sum() / s.total_mass();
    const Field late = op.apply(100.0, f);
    CHECK((late.array() - mean).abs().maxCoeff() <= 1e-10);
    CHECK(op.kernel(100.0).density(3, 40) == doctest::Approx(1.0 / s.total_mass()).epsilon(1e-10));
    CHECK(op.apply(0.0, f) == f);
}

TEST_CASE("continuum oracle")
{
    const double c = 2.0 * std::numbers::pi;
    const OracleValue late = circle_kernel_oracle(c, 50.0, 0.0, 1.0, 50);
    CHECK(late.value == doctest::Approx(1.0 / c).epsilon(1e-12));
    const OracleValue early = circle_kernel_oracle(c, 1e-3, 0.0, 0.0, 3);
    CHECK(early.value == doctest::Approx(1.0 / std::sqrt(4.0 * std::numbers::pi * 1e-3)).epsilon(1e-12));
    CHECK(early.sufficient);
}

TEST_CASE("lattice oracle matches the eigensolver")
{
    const double c = 2.0 * std::numbers::pi;
    const HeatOperator op = heat_of(DiscreteSpace::circle(48, c));
    for (double t : {1e-3, 1e-2, 1.0}) {
        const KernelMatrix k = op.kernel(t);
        for (Index j : {0, 1, 5, 24})
            CHECK(k.density(0, j) == doctest::Approx(circle_lattice_kernel(48, c, t, 0, j)).epsilon(1e-9));
    }
}
