#include "hjlab/mmspace.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace hjlab;

namespace {

void expect_metric(const DiscreteSpace& s)
{
    const Index n = s.size();
    for (Index i = 0; i < n; ++i) {
        CHECK(s.dist(i, i) == 0.0);
        CHECK(s.weight(i) > 0.0);
        for (Index j = 0; j < n; ++j) {
            CHECK(s.dist(i, j) == s.dist(j, i));
            if (i != j)
                CHECK(s.dist(i, j) > 0.0);
        }
    }
    // Exact, not approximate: the builder closes rounding violations.
    bool triangle = true;
    for (Index k = 0; k < n; ++k)
        for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < n; ++i)
                triangle = triangle && s.dist(i, k) <= s.dist(i, j) + s.dist(j, k);
    CHECK(triangle);
}

DiscreteSpace random_graph(Index n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> len(0.1, 2.0);
    std::vector<Edge> edges;
    for (Index i = 1; i < n; ++i)
        edges.push_back({static_cast<Index>(rng() % static_cast<std::uint64_t>(i)), i, len(rng)});
    for (int k = 0; k < n; ++k) {
        const Index a = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
        const Index b = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
        if (a != b)
            edges.push_back({a, b, len(rng)});
    }
    std::vector<double> w(static_cast<std::size_t>(n));
    for (double& x : w)
        x = len(rng);
    return DiscreteSpace::graph(n, edges, w, -0.5);
}

}  // namespace

TEST_CASE("interval builder")
{
    const DiscreteSpace s = DiscreteSpace::interval(3, 1.0);
    REQUIRE(s.size() == 3);
    CHECK((*s.coords())[1] == doctest::Approx(0.5));
    CHECK(s.dist(0, 2) == doctest::Approx(1.0));
    CHECK(s.mesh() == doctest::Approx(0.5));
    CHECK(s.weight(0) == doctest::Approx(0.25));
    CHECK(s.weight(1) == doctest::Approx(0.5));
    CHECK(s.total_mass() == doctest::Approx(1.0));
    CHECK(s.k_lower() == 0.0);
    CHECK(s.topology() == Topology::Interval);
    expect_metric(DiscreteSpace::interval(37, 2.5));
}

TEST_CASE("circle builder")
{
    const DiscreteSpace s = DiscreteSpace::circle(4, 2.0 * std::numbers::pi);
    CHECK(s.dist(0, 2) == doctest::Approx(std::numbers::pi));
    CHECK(s.dist(0, 3) == doctest::Approx(std::numbers::pi / 2));
    CHECK(s.diameter() == doctest::Approx(std::numbers::pi));
    CHECK(s.total_mass() == doctest::Approx(2.0 * std::numbers::pi));
    expect_metric(DiscreteSpace::circle(41, 2.0 * std::numbers::pi));
}

TEST_CASE("graph builder")
{
    const DiscreteSpace s = DiscreteSpace::graph(2, {{0, 1, 1.0}}, {1.0, 1.0}, 0.0);
    CHECK(s.dist(0, 1) == 1.0);
    CHECK(s.dist(1, 0) == 1.0);
    CHECK(s.mesh() == 1.0);

    // Shortest paths, not edge lengths: the long edge is bypassed.
    const DiscreteSpace p = DiscreteSpace::graph(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 5.0}}, {1, 1, 1}, 0.0);
    CHECK(p.dist(0, 2) == 2.0);

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 5; ++trial)
        expect_metric(random_graph(24, rng));
}

TEST_CASE("builders reject invalid input")
{
    CHECK_THROWS_AS(DiscreteSpace::interval(1, 1.0), DomainError);
    CHECK_THROWS_AS(DiscreteSpace::interval(5, 0.0), DomainError);
    CHECK_THROWS_AS(DiscreteSpace::circle(2, 1.0), DomainError);
    CHECK_THROWS_AS(DiscreteSpace::circle(8, -1.0), DomainError);
    CHECK_THROWS_AS(DiscreteSpace::graph(3, {{0, 1, 1.0}}, {1, 1, 1}, 0.0), DomainError);  // disconnected
    CHECK_THROWS_AS(DiscreteSpace::graph(2, {{0, 1, 0.0}}, {1, 1}, 0.0), DomainError);
    CHECK_THROWS_AS(DiscreteSpace::graph(2, {{0, 1, 1.0}}, {1, -1}, 0.0), DomainError);
    CHECK_THROWS_AS(DiscreteSpace::graph(2, {{0, 1, 1.0}}, {1}, 0.0), DomainError);
    CHECK_THROWS_AS(DiscreteSpace::graph(2, {{0, 2, 1.0}}, {1, 1}, 0.0), DomainError);
}

TEST_CASE("refinement is nested")
{
    const DiscreteSpace s = DiscreteSpace::interval(11, 1.0);
    const DiscreteSpace r = s.refined();
    REQUIRE(r.size() == 21);
    for (Index i = 0; i < s.size(); ++i)
        CHECK((*r.coords())[2 * i] == doctest::Approx((*s.coords())[i]));
    const DiscreteSpace c = DiscreteSpace::circle(16, 3.0);
    const DiscreteSpace rc = c.refined();
    REQUIRE(rc.size() == 32);
    CHECK(rc.dist(0, 2 * 5) == doctest::Approx(c.dist(0, 5)));
    CHECK_THROWS_AS(DiscreteSpace::graph(2, {{0, 1, 1.0}}, {1, 1}, 0.0).refined(), DomainError);
}

TEST_CASE("density validation")
{
    const DiscreteSpace s = DiscreteSpace::interval(5, 1.0);
    CHECK_NOTHROW(Density::uniform(s));
    CHECK(Density::uniform(s).masses(s).sum() == doctest::Approx(1.0));
    CHECK(Density::point_mass(s, 0).masses(s)[0] == doctest::Approx(1.0));
    CHECK_THROWS_AS(Density(s, Field::Constant(5, 2.0)), DomainError);
    Field neg = Field::Constant(5, 1.0);
    neg[2] = -0.1;
    CHECK_THROWS_AS(Density::normalized(s, neg), DomainError);
    CHECK_THROWS_AS(Density::normalized(s, Field::Zero(5)), DomainError);
}

TEST_CASE("lipschitz constant")
{
    const DiscreteSpace s = DiscreteSpace::interval(33, 1.0);
    CHECK(lipschitz_constant(s, Field::Constant(33, 3.0)) == 0.0);
    CHECK(lipschitz_constant(s, *s.coords()) == doctest::Approx(1.0));

    std::mt19937_64 rng(3);
    const DiscreteSpace g = random_graph(20, rng);
    for (Index x0 = 0; x0 < g.size(); x0 += 7)
        CHECK(lipschitz_constant(g, g.distances().col(x0)) == doctest::Approx(1.0));
}

TEST_CASE("local slope")
{
    const DiscreteSpace s = DiscreteSpace::interval(41, 1.0);
    CHECK(local_slope(s, Field::Constant(41, 2.0)).cwiseAbs().maxCoeff() == 0.0);
    const Field id = local_slope(s, *s.coords());
    for (Index i = 1; i + 1 < s.size(); ++i)
        CHECK(id[i] == doctest::Approx(1.0));

    const Field x = *s.coords();
    const Field sq = x.array().square();
    const Field slope = local_slope(s, sq);
    for (Index i = 1; i + 1 < s.size(); ++i)
        CHECK(std::abs(slope[i] - 2.0 * x[i]) <= s.mesh() + 1e-12);

    // Lip >= every local slope.
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 10; ++trial) {
        Field f(s.size());
        for (Index i = 0; i < s.size(); ++i)
            f[i] = nd(rng);
        CHECK(lipschitz_constant(s, f) >= local_slope(s, f).maxCoeff());
    }
}

TEST_CASE("distance to a set")
{
    const DiscreteSpace s = DiscreteSpace::interval(11, 1.0);
    const Index x = s.nearest_point(0.2);
    const std::vector<Index> a = s.points_in(0.7, 1.0);
    CHECK(a.size() == 4);
    CHECK(dist_to_set(s, x, a, SetDistance::Inf) == doctest::Approx(0.5));
    CHECK(dist_to_set(s, x, a, SetDistance::Sup) == doctest::Approx(0.8));
    CHECK(dist_to_set(s, a[1], a, SetDistance::Inf) == 0.0);
    CHECK_THROWS_AS(dist_to_set(s, x, std::vector<Index>{}, SetDistance::Inf), DomainError);

    const DiscreteSpace c = DiscreteSpace::circle(16, 2.0 * std::numbers::pi);
    std::vector<Index> all(16);
    for (Index i = 0; i < 16; ++i)
        all[static_cast<std::size_t>(i)] = i;
    CHECK(dist_to_set(c, 3, all, SetDistance::Sup) == doctest::Approx(std::numbers::pi));

    // d_-(., A) is 1-Lipschitz.
    const DiscreteSpace g = DiscreteSpace::interval(64, 1.0);
    const std::vector<Index> b{3, 17, 40};
    for (Index i = 0; i < 64; ++i)
        for (Index j = 0; j < 64; ++j)
            CHECK(std::abs(dist_to_set(g, i, b, SetDistance::Inf) - dist_to_set(g, j, b, SetDistance::Inf)) <=
                  g.dist(i, j) + 1e-15);
}

TEST_CASE("grid lookups")
{
    const DiscreteSpace s = DiscreteSpace::interval(401, 1.0);
    CHECK(s.nearest_point(0.2) == 80);
    CHECK(s.nearest_point(-1.0) == 0);
    const DiscreteSpace c = DiscreteSpace::circle(8, 8.0);
    CHECK(c.nearest_point(7.9) == 0);
    CHECK(c.ball(0, 1.0).size() == 3);
    CHECK_THROWS_AS(DiscreteSpace::graph(2, {{0, 1, 1.0}}, {1, 1}, 0.0).nearest_point(0.5), DomainError);
}
