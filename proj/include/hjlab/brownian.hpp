#pragma once

#include "hjlab/ldp.hpp"

#include <cstdint>
#include <span>

namespace hjlab {

/// 0 = t_0 < t_1 < ... < t_m = 1.
class Partition {
public:
    explicit Partition(std::vector<double> times);
    static Partition uniform(int segments);

    const std::vector<double>& times() const { return times_; }
    int segments() const { return static_cast<int>(times_.size()) - 1; }
    double step(int i) const { return times_[static_cast<std::size_t>(i) + 1] - times_[static_cast<std::size_t>(i)]; }

private:
    std::vector<double> times_;
};

/// A path seen only at the partition nodes.
struct PartitionPath {
    Partition partition;
    std::vector<Index> points;  // one per node, points[0] is the start
};

/// Brownian motion started at `start`, slowed down by t_scale: its transition
/// over [s, s'] has kernel p_{t_scale (s' - s)}.
class SlowedBM {
public:
    SlowedBM(const HeatOperator& op, Index start, double t_scale);

    const HeatOperator& heat() const { return *op_; }
    const DiscreteSpace& space() const { return op_->space(); }
    Index start() const { return start_; }
    double t_scale() const { return t_scale_; }

private:
    const HeatOperator* op_;
    Index start_;
    double t_scale_;
};

/// Kernel times below mesh^2 / 100 are treated as degenerate.
double degenerate_time_floor(const DiscreteSpace& space);

/// log of p_{t_1}[x](x_1) p_{t_2 - t_1}[x_1](x_2) ..., the joint density of the
/// node positions against the product measure. points[0] must be the start.
double marginal_log_density(const SlowedBM& bm, const Partition& partition,
                            std::span<const Index> points);

/// Sequential categorical sampling. Stream (seed, path_index) is independent of
/// every other index, so batches are reproducible in parallel.
PartitionPath sample_path(const SlowedBM& bm, const Partition& partition, std::uint64_t seed,
                          std::uint64_t path_index = 0);

std::vector<PartitionPath> sample_paths(const SlowedBM& bm, const Partition& partition,
                                        std::uint64_t seed, std::size_t count);

/// 1/4 sum_i d(x_i, x_{i+1})^2 / (t_{i+1} - t_i); +inf if the path does not
/// start at `start`.
double kinetic_rate(const DiscreteSpace& space, const PartitionPath& path, Index start);

/// Tube event: the path is within r of ref.points[i] at every node.
bool in_tube(const DiscreteSpace& space, const PartitionPath& path, const PartitionPath& ref,
             double r);

/// Exact log probability of the tube by masked forward recursion.
double tube_log_probability(const SlowedBM& bm, const PartitionPath& ref, double r);

struct TubeRow {
    double t = 0.0;
    double log_prob = 0.0;
    double t_log_prob = 0.0;
};

struct TubeFit {
    LimitFit fit;
    std::vector<TubeRow> rows;
    double ell = 0.0;           // kinetic rate of the reference path
    double ball_slack = 0.0;    // C = sum_i d_i / dt_i
    double radius = 0.0;
    double fit_slack = 0.0;     // delta
    double window_lo = 0.0;     // -ell - delta
    double window_hi = 0.0;     // -ell + C r + delta
    bool in_window() const { return fit.fitted_limit >= window_lo && fit.fitted_limit <= window_hi; }
};

/// t log P(tube) over the time grid for the slowed motions started at
/// ref.points[0]. fit_slack_fraction scales ell into delta.
TubeFit tube_ldp_check(const HeatOperator& op, const PartitionPath& ref, double r,
                       std::span<const double> t_grid, double fit_slack_fraction = 0.15);

}  // namespace hjlab
