#include "hjlab/mmspace.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <queue>
#include <string>

namespace hjlab {

namespace {

constexpr double kNeighborTolerance = 1e-9;

// Min-plus relaxation until nothing moves. Closed-form and Dijkstra distances
// can break the triangle inequality by an ulp; after this the inequality holds
// exactly in floating point.
void close_triangles(Matrix& d)
{
    const Index n = d.rows();
    bool changed = true;
    while (changed) {
        changed = false;
        for (Index j = 0; j < n; ++j) {
            for (Index k = 0; k < n; ++k) {
                const double djk = d(j, k);
                auto col = d.col(k);
                for (Index i = 0; i < n; ++i) {
                    const double via = d(i, j) + djk;
                    if (via < col[i]) {
                        col[i] = via;
                        changed = true;
                    }
                }
            }
        }
    }
}

}  // namespace

std::string_view to_string(Topology t)
{
    switch (t) {
    case Topology::Interval: return "interval";
    case Topology::Circle: return "circle";
    case Topology::Graph: return "graph";
    }
    return "graph";
}

Topology topology_from_string(std::string_view s)
{
    if (s == "interval")
        return Topology::Interval;
    if (s == "circle")
        return Topology::Circle;
    if (s == "graph")
        return Topology::Graph;
    throw DomainError("unknown space kind '" + std::string(s) + "'");
}

DiscreteSpace DiscreteSpace::interval(Index n, double length)
{
    if (n < 2)
        throw DomainError("interval needs n >= 2");
    if (!(length > 0.0) || !std::isfinite(length))
        throw DomainError("interval length must be positive");
    DiscreteSpace s;
    s.n_ = n;
    s.topology_ = Topology::Interval;
    s.extent_ = length;
    const double h = length / static_cast<double>(n - 1);
    s.coords_ = Field::LinSpaced(n, 0.0, length);
    s.weight_ = Field::Constant(n, h);
    s.weight_[0] = s.weight_[n - 1] = 0.5 * h;
    s.dist_.resize(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i)
            s.dist_(i, j) = static_cast<double>(std::abs(i - j)) * h;
    for (Index i = 0; i + 1 < n; ++i)
        s.edges_.push_back({i, i + 1, h});
    s.finish();
    return s;
}

DiscreteSpace DiscreteSpace::circle(Index n, double circumference)
{
    if (n < 3)
        throw DomainError("circle needs n >= 3");
    if (!(circumference > 0.0) || !std::isfinite(circumference))
        throw DomainError("circle circumference must be positive");
    DiscreteSpace s;
    s.n_ = n;
    s.topology_ = Topology::Circle;
    s.extent_ = circumference;
    const double h = circumference / static_cast<double>(n);
    s.coords_ = Field(n);
    for (Index i = 0; i < n; ++i)
        (*s.coords_)[i] = static_cast<double>(i) * h;
    s.weight_ = Field::Constant(n, h);
    s.dist_.resize(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            const Index k = std::abs(i - j);
            s.dist_(i, j) = static_cast<double>(std::min(k, n - k)) * h;
        }
    }
    for (Index i = 0; i < n; ++i)
        s.edges_.push_back({i, (i + 1) % n, h});
    s.finish();
    return s;
}

DiscreteSpace DiscreteSpace::graph(Index n, std::vector<Edge> edges, std::vector<double> weights,
                                   double k_lower)
{
    if (n < 1)
        throw DomainError("graph needs at least one node");
    if (static_cast<Index>(weights.size()) != n)
        throw DomainError("graph weights must have one entry per node");
    if (!std::isfinite(k_lower))
        throw DomainError("graph k_lower must be finite");
    for (double w : weights)
        if (!(w > 0.0) || !std::isfinite(w))
            throw DomainError("graph weights must be positive");

    std::vector<std::vector<std::pair<Index, double>>> adj(static_cast<std::size_t>(n));
    for (const Edge& e : edges) {
        if (e.a < 0 || e.b < 0 || e.a >= n || e.b >= n || e.a == e.b)
            throw DomainError("graph edge has invalid endpoints");
        if (!(e.length > 0.0) || !std::isfinite(e.length))
            throw DomainError("graph edge lengths must be positive");
        adj[static_cast<std::size_t>(e.a)].push_back({e.b, e.length});
        adj[static_cast<std::size_t>(e.b)].push_back({e.a, e.length});
    }

    DiscreteSpace s;
    s.n_ = n;
    s.topology_ = Topology::Graph;
    s.k_lower_ = k_lower;
    s.weight_ = Eigen::Map<const Field>(weights.data(), n);
    s.dist_ = Matrix::Constant(n, n, kInf);

    using Item = std::pair<double, Index>;
    for (Index src = 0; src < n; ++src) {
        auto dcol = s.dist_.col(src);
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        dcol[src] = 0.0;
        heap.push({0.0, src});
        while (!heap.empty()) {
            auto [du, u] = heap.top();
            heap.pop();
            if (du > dcol[u])
                continue;
            for (auto [v, len] : adj[static_cast<std::size_t>(u)]) {
                if (du + len < dcol[v]) {
                    dcol[v] = du + len;
                    heap.push({dcol[v], v});
                }
            }
        }
        for (Index i = 0; i < n; ++i)
            if (!std::isfinite(dcol[i]))
                throw DomainError("graph is disconnected");
    }
    // Dijkstra is run per source; enforce exact symmetry.
    for (Index j = 0; j < n; ++j)
        for (Index i = j + 1; i < n; ++i)
            s.dist_(i, j) = s.dist_(j, i) = std::min(s.dist_(i, j), s.dist_(j, i));
    s.edges_ = std::move(edges);
    s.finish();
    return s;
}

void DiscreteSpace::finish()
{
    close_triangles(dist_);
    mesh_ = 0.0;
    if (n_ > 1) {
        for (Index i = 0; i < n_; ++i) {
            double nearest = kInf;
            for (Index j = 0; j < n_; ++j)
                if (j != i)
                    nearest = std::min(nearest, dist_(i, j));
            mesh_ = std::max(mesh_, nearest);
        }
    }
    diameter_ = dist_.maxCoeff();
}

Index DiscreteSpace::nearest_point(double coordinate) const
{
    if (!coords_)
        throw DomainError("nearest_point needs a grid-built space");
    const double h = topology_ == Topology::Circle ? extent_ / static_cast<double>(n_)
                                                   : extent_ / static_cast<double>(n_ - 1);
    auto k = static_cast<Index>(std::llround(coordinate / h));
    if (topology_ == Topology::Circle)
        return ((k % n_) + n_) % n_;
    return std::clamp<Index>(k, 0, n_ - 1);
}

std::vector<Index> DiscreteSpace::points_in(double lo, double hi) const
{
    if (!coords_)
        throw DomainError("points_in needs a grid-built space");
    const double slack = 1e-12 * extent_;
    std::vector<Index> out;
    for (Index i = 0; i < n_; ++i)
        if ((*coords_)[i] >= lo - slack && (*coords_)[i] <= hi + slack)
            out.push_back(i);
    return out;
}

std::vector<Index> DiscreteSpace::ball(Index i, double r) const
{
    std::vector<Index> out;
    for (Index j = 0; j < n_; ++j)
        if (dist_(i, j) <= r)
            out.push_back(j);
    return out;
}

DiscreteSpace DiscreteSpace::refined() const
{
    switch (topology_) {
    case Topology::Interval: return interval(2 * n_ - 1, extent_);
    case Topology::Circle: return circle(2 * n_, extent_);
    case Topology::Graph: break;
    }
    throw DomainError("graph spaces cannot be refined");
}

Density::Density(const DiscreteSpace& space, Field values) : values_(std::move(values))
{
    if (values_.size() != space.size())
        throw DomainError("density length does not match the space");
    if (!values_.allFinite() || (values_.array() < 0.0).any())
        throw DomainError("density must be finite and nonnegative");
    const double mass = values_.dot(space.weights());
    if (std::abs(mass - 1.0) > 1e-12)
        throw DomainError("density does not integrate to one (mass " + std::to_string(mass) + ")");
}

Density Density::normalized(const DiscreteSpace& space, Field profile)
{
    if (profile.size() != space.size())
        throw DomainError("density length does not match the space");
    if (!profile.allFinite() || (profile.array() < 0.0).any())
        throw DomainError("density profile must be finite and nonnegative");
    const double mass = profile.dot(space.weights());
    if (!(mass > 0.0))
        throw DomainError("density profile has zero mass");
    return Density(space, profile / mass);
}

Density Density::point_mass(const DiscreteSpace& space, Index i)
{
    Field v = Field::Zero(space.size());
    v[i] = 1.0 / space.weight(i);
    return Density(v);
}

Density Density::uniform(const DiscreteSpace& space)
{
    return Density(Field::Constant(space.size(), 1.0 / space.total_mass()));
}

Field Density::masses(const DiscreteSpace& space) const
{
    return values_.cwiseProduct(space.weights());
}

double lipschitz_constant(const DiscreteSpace& space, const Field& f)
{
    const Index n = space.size();
    double lip = 0.0;
    for (Index j = 0; j < n; ++j)
        for (Index i = j + 1; i < n; ++i)
            lip = std::max(lip, std::abs(f[i] - f[j]) / space.dist(i, j));
    return lip;
}

Field local_slope(const DiscreteSpace& space, const Field& f)
{
    const Index n = space.size();
    const double reach = (1.0 + kNeighborTolerance) * space.mesh();
    Field slope = Field::Zero(n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (j == i || space.dist(i, j) > reach)
                continue;
            slope[i] = std::max(slope[i], std::abs(f[i] - f[j]) / space.dist(i, j));
        }
    }
    return slope;
}

double dist_to_set(const DiscreteSpace& space, Index i, std::span<const Index> set,
                   SetDistance mode)
{
    if (set.empty())
        throw DomainError("dist_to_set: empty set");
    double best = mode == SetDistance::Inf ? kInf : 0.0;
    for (Index j : set) {
        const double d = space.dist(i, j);
        best = mode == SetDistance::Inf ? std::min(best, d) : std::max(best, d);
    }
    return best;
}

}  // namespace hjlab
