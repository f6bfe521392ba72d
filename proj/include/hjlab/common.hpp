#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hjlab {

using Field = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Precondition violated by the caller (bad sizes, empty sets, nonpositive times).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A requested time lies outside the range where the discrete kernel is meaningful.
class ResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative solver did not reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double defect)
        : std::runtime_error(what), defect_(defect) {}
    double defect() const { return defect_; }

private:
    double defect_;
};

// log(sum_i exp(v_i)), shifted by the max; -inf entries are ignored.
inline double log_sum_exp(const double* v, Index n)
{
    double c = -kInf;
    for (Index i = 0; i < n; ++i)
        c = std::max(c, v[i]);
    if (!std::isfinite(c))
        return c;
    double s = 0.0;
    for (Index i = 0; i < n; ++i)
        s += std::exp(v[i] - c);
    return c + std::log(s);
}

inline double log_sum_exp(const Eigen::Ref<const Field>& v)
{
    return log_sum_exp(v.data(), v.size());
}

/// Entrywise std::exp. Eigen's vectorized exp maps -inf to a denormal instead
/// of zero, which breaks 0 log 0 conventions downstream.
template <typename Derived>
auto exact_exp(const Eigen::MatrixBase<Derived>& m)
{
    return m.unaryExpr([](double v) { return std::exp(v); });
}

/// Number of worker threads, capped by the HJLAB_THREADS environment variable.
unsigned thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. Each index is
/// visited exactly once; callers write results by index so the outcome does
/// not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hjlab
