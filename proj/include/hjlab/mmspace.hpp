#pragma once

#include "hjlab/common.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace hjlab {

enum class Topology { Interval, Circle, Graph };

std::string_view to_string(Topology t);
Topology topology_from_string(std::string_view s);

struct Edge {
    Index a = 0;
    Index b = 0;
    double length = 0.0;
};

/// Finite metric measure space: dense distance matrix, positive point masses
/// and a declared Ricci lower bound. Immutable once built.
class DiscreteSpace {
public:
    /// n equispaced points on [0, length]; trapezoid weights (h/2 at the ends).
    static DiscreteSpace interval(Index n, double length);
    /// n equispaced points on a circle of the given circumference, arc metric.
    static DiscreteSpace circle(Index n, double circumference);
    /// Shortest-path metric of a connected weighted graph.
    static DiscreteSpace graph(Index n, std::vector<Edge> edges, std::vector<double> weights,
                               double k_lower);

    Index size() const { return n_; }
    double dist(Index i, Index j) const { return dist_(i, j); }
    const Matrix& distances() const { return dist_; }
    const Field& weights() const { return weight_; }
    double weight(Index i) const { return weight_[i]; }
    const std::optional<Field>& coords() const { return coords_; }
    const std::vector<Edge>& edges() const { return edges_; }
    Topology topology() const { return topology_; }
    double k_lower() const { return k_lower_; }
    double k_minus() const { return std::max(0.0, -k_lower_); }
    double mesh() const { return mesh_; }
    double diameter() const { return diameter_; }
    double total_mass() const { return weight_.sum(); }
    /// Length of the interval or circumference of the circle; 0 for graphs.
    double extent() const { return extent_; }

    /// Nearest grid point to a coordinate (interval/circle only).
    Index nearest_point(double coordinate) const;
    /// Points whose coordinate lies in [lo, hi] (interval/circle only).
    std::vector<Index> points_in(double lo, double hi) const;
    /// Points within distance r of i.
    std::vector<Index> ball(Index i, double r) const;

    /// Same kind of space with the grid spacing halved, nested so that point i
    /// of this space is point 2i of the refined one. Graphs cannot be refined.
    DiscreteSpace refined() const;

private:
    DiscreteSpace() = default;
    void finish();

    Index n_ = 0;
    Matrix dist_;
    Field weight_;
    std::optional<Field> coords_;
    std::vector<Edge> edges_;
    Topology topology_ = Topology::Graph;
    double k_lower_ = 0.0;
    double mesh_ = 0.0;
    double diameter_ = 0.0;
    double extent_ = 0.0;
};

using SpacePtr = std::shared_ptr<const DiscreteSpace>;

inline SpacePtr share(DiscreteSpace s)
{
    return std::make_shared<const DiscreteSpace>(std::move(s));
}

/// Nonnegative field integrating to one against the space measure.
class Density {
public:
    /// Validates nonnegativity and unit mass (within 1e-12).
    Density(const DiscreteSpace& space, Field values);
    /// Normalizes a nonnegative, not identically zero profile.
    static Density normalized(const DiscreteSpace& space, Field profile);
    static Density point_mass(const DiscreteSpace& space, Index i);
    static Density uniform(const DiscreteSpace& space);

    const Field& values() const { return values_; }
    double operator[](Index i) const { return values_[i]; }
    Index size() const { return values_.size(); }
    /// Point masses values_i * weight_i.
    Field masses(const DiscreteSpace& space) const;

private:
    explicit Density(Field values) : values_(std::move(values)) {}
    Field values_;
};

/// max over i != j of |f_i - f_j| / d(i, j).
double lipschitz_constant(const DiscreteSpace& space, const Field& f);

/// Slope at each point over its nearest neighbours (d <= (1 + 1e-9) mesh).
Field local_slope(const DiscreteSpace& space, const Field& f);

enum class SetDistance { Inf, Sup };

/// d_-(i, A) = min_{j in A} d(i, j) or d_+(i, A) = max_{j in A} d(i, j).
double dist_to_set(const DiscreteSpace& space, Index i, std::span<const Index> set,
                   SetDistance mode);

}  // namespace hjlab
