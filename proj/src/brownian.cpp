#include "hjlab/brownian.hpp"

#include <map>
#include <random>

namespace hjlab {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void check_path_points(const DiscreteSpace& space, const Partition& partition,
                       std::span<const Index> points)
{
    if (points.size() != partition.times().size())
        throw DomainError("path needs one point per partition node");
    for (Index p : points)
        if (p < 0 || p >= space.size())
            throw DomainError("path point out of range");
}

// Transition masses per distinct kernel time.
class TransitionCache {
public:
    explicit TransitionCache(const SlowedBM& bm) : bm_(bm) {}

    const Matrix& at(double step)
    {
        const double kt = bm_.t_scale() * step;
        if (kt < degenerate_time_floor(bm_.space()))
            throw ResolutionError("kernel time " + std::to_string(kt) +
                                  " is below the degenerate floor");
        auto it = cache_.find(kt);
        if (it == cache_.end())
            it = cache_.emplace(kt, bm_.heat().transition(kt)).first;
        return it->second;
    }

private:
    const SlowedBM& bm_;
    std::map<double, Matrix> cache_;
};

}  // namespace

Partition::Partition(std::vector<double> times) : times_(std::move(times))
{
    if (times_.size() < 2)
        throw DomainError("partition needs at least two nodes");
    if (times_.front() != 0.0 || times_.back() != 1.0)
        throw DomainError("partition must start at 0 and end at 1");
    for (std::size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1]))
            throw DomainError("partition times must be strictly increasing");
}

Partition Partition::uniform(int segments)
{
    if (segments < 1)
        throw DomainError("partition needs at least one segment");
    std::vector<double> t(static_cast<std::size_t>(segments) + 1);
    for (int i = 0; i <= segments; ++i)
        t[static_cast<std::size_t>(i)] = static_cast<double>(i) / segments;
    t.back() = 1.0;
    return Partition(std::move(t));
}

SlowedBM::SlowedBM(const HeatOperator& op, Index start, double t_scale)
    : op_(&op), start_(start), t_scale_(t_scale)
{
    if (start < 0 || start >= op.space().size())
        throw DomainError("start point out of range");
    if (!(t_scale > 0.0))
        throw DomainError("slow-down time must be positive");
}

double degenerate_time_floor(const DiscreteSpace& space)
{
    return space.mesh() * space.mesh() / 100.0;
}

double marginal_log_density(const SlowedBM& bm, const Partition& partition,
                            std::span<const Index> points)
{
    check_path_points(bm.space(), partition, points);
    if (points[0] != bm.start())
        throw DomainError("marginal_log_density: path must begin at the start point");
    TransitionCache cache(bm);
    const Field& w = bm.space().weights();
    double total = 0.0;
    for (int i = 0; i < partition.segments(); ++i) {
        const Index a = points[static_cast<std::size_t>(i)];
        const Index b = points[static_cast<std::size_t>(i) + 1];
        total += std::log(cache.at(partition.step(i))(a, b) / w[b]);
    }
    return total;
}

namespace {

std::vector<const Matrix*> step_kernels(TransitionCache& cache, const Partition& partition)
{
    std::vector<const Matrix*> steps;
    for (int i = 0; i < partition.segments(); ++i)
        steps.push_back(&cache.at(partition.step(i)));
    return steps;
}

PartitionPath walk(const SlowedBM& bm, const Partition& partition,
                   const std::vector<const Matrix*>& steps, std::uint64_t seed,
                   std::uint64_t index)
{
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(index)));
    const Index n = bm.space().size();
    PartitionPath path{partition, {bm.start()}};
    Index current = bm.start();
    for (const Matrix* m : steps) {
        // Inverse CDF on the transition row; rows sum to one up to rounding.
        const double u = uniform01(rng) * m->row(current).sum();
        double acc = 0.0;
        Index next = n - 1;
        for (Index j = 0; j < n; ++j) {
            acc += (*m)(current, j);
            if (u < acc) {
                next = j;
                break;
            }
        }
        path.points.push_back(next);
        current = next;
    }
    return path;
}

}  // namespace

PartitionPath sample_path(const SlowedBM& bm, const Partition& partition, std::uint64_t seed,
                          std::uint64_t path_index)
{
    TransitionCache cache(bm);
    return walk(bm, partition, step_kernels(cache, partition), seed, path_index);
}

std::vector<PartitionPath> sample_paths(const SlowedBM& bm, const Partition& partition,
                                        std::uint64_t seed, std::size_t count)
{
    TransitionCache cache(bm);
    const auto steps = step_kernels(cache, partition);
    std::vector<PartitionPath> out(count, PartitionPath{partition, {}});
    parallel_for(count, [&](std::size_t k) { out[k] = walk(bm, partition, steps, seed, k); });
    return out;
}

double kinetic_rate(const DiscreteSpace& space, const PartitionPath& path, Index start)
{
    check_path_points(space, path.partition, path.points);
    if (path.points.front() != start)
        return kInf;
    double sum = 0.0;
    for (int i = 0; i < path.partition.segments(); ++i) {
        const double d = space.dist(path.points[static_cast<std::size_t>(i)],
                                    path.points[static_cast<std::size_t>(i) + 1]);
        sum += d * d / path.partition.step(i);
    }
    return 0.25 * sum;
}

bool in_tube(const DiscreteSpace& space, const PartitionPath& path, const PartitionPath& ref,
             double r)
{
    if (path.points.size() != ref.points.size())
        throw DomainError("in_tube: path lengths differ");
    for (std::size_t i = 0; i < path.points.size(); ++i)
        if (space.dist(path.points[i], ref.points[i]) > r)
            return false;
    return true;
}

double tube_log_probability(const SlowedBM& bm, const PartitionPath& ref, double r)
{
    const DiscreteSpace& space = bm.space();
    check_path_points(space, ref.partition, ref.points);
    if (!(r >= space.mesh()))
        throw DomainError("tube radius below mesh leaves empty balls");
    const Index n = space.size();

    if (space.dist(bm.start(), ref.points.front()) > r)
        return -kInf;
    TransitionCache cache(bm);
    Field v = Field::Zero(n);
    v[bm.start()] = 1.0;
    double log_prob = 0.0;
    for (int i = 0; i < ref.partition.segments(); ++i) {
        v = (v.transpose() * cache.at(ref.partition.step(i))).transpose();
        const Index centre = ref.points[static_cast<std::size_t>(i) + 1];
        for (Index j = 0; j < n; ++j)
            if (space.dist(j, centre) > r)
                v[j] = 0.0;
        const double s = v.sum();
        if (!(s > 0.0))
            return -kInf;
        log_prob += std::log(s);
        v /= s;
    }
    return log_prob;
}

TubeFit tube_ldp_check(const HeatOperator& op, const PartitionPath& ref, double r,
                       std::span<const double> t_grid, double fit_slack_fraction)
{
    const DiscreteSpace& space = op.space();
    check_path_points(space, ref.partition, ref.points);
    check_time_grid(space, t_grid);

    TubeFit out;
    out.radius = r;
    for (int i = 0; i < ref.partition.segments(); ++i) {
        const double d = space.dist(ref.points[static_cast<std::size_t>(i)],
                                    ref.points[static_cast<std::size_t>(i) + 1]);
        if (!(d > 0.0))
            throw DomainError("tube_ldp_check: reference path has a zero-length segment");
        out.ball_slack += d / ref.partition.step(i);
    }
    out.ell = kinetic_rate(space, ref, ref.points.front());
    out.fit_slack = fit_slack_fraction * out.ell;
    out.window_lo = -out.ell - out.fit_slack;
    out.window_hi = -out.ell + out.ball_slack * r + out.fit_slack;

    out.rows.resize(t_grid.size());
    parallel_for(t_grid.size(), [&](std::size_t k) {
        const double t = t_grid[k];
        const SlowedBM bm(op, ref.points.front(), t);
        const double lp = tube_log_probability(bm, ref, r);
        out.rows[k] = {t, lp, t * lp};
    });
    std::vector<double> v;
    for (const TubeRow& row : out.rows)
        v.push_back(row.t_log_prob);
    out.fit = fit_limit(t_grid, v);
    out.fit.target = -out.ell;
    out.fit.window = resolution_window(space);
    return out;
}

}  // namespace hjlab
