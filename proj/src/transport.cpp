#include "hjlab/transport.hpp"

#include <algorithm>
#include <numeric>

namespace hjlab {

namespace {

struct Cell {
    Index i;
    Index j;
    double flow;
};

constexpr int kDegenerateRunBeforeBland = 50;

}  // namespace

TransportPlan transport_simplex(std::span<const double> supply, std::span<const double> demand,
                                const Matrix& cost)
{
    const auto m = static_cast<Index>(supply.size());
    const auto n = static_cast<Index>(demand.size());
    if (m == 0 || n == 0)
        throw DomainError("transport_simplex: empty marginals");
    if (cost.rows() != m || cost.cols() != n)
        throw DomainError("transport_simplex: cost shape mismatch");
    for (double a : supply)
        if (!(a >= 0.0))
            throw DomainError("transport_simplex: negative supply");
    for (double b : demand)
        if (!(b >= 0.0))
            throw DomainError("transport_simplex: negative demand");
    const double total_a = std::accumulate(supply.begin(), supply.end(), 0.0);
    const double total_b = std::accumulate(demand.begin(), demand.end(), 0.0);
    if (!(total_a > 0.0) || std::abs(total_a - total_b) > 1e-9 * total_a)
        throw DomainError("transport_simplex: marginals are not balanced");

    std::vector<double> ra(supply.begin(), supply.end());
    std::vector<double> rb(demand.begin(), demand.end());
    for (double& b : rb)
        b *= total_a / total_b;

    // Northwest corner; exactly m + n - 1 basic cells, zeros kept on ties.
    std::vector<Cell> basis;
    {
        Index i = 0, j = 0;
        while (true) {
            const double q = std::min(ra[static_cast<std::size_t>(i)], rb[static_cast<std::size_t>(j)]);
            basis.push_back({i, j, q});
            ra[static_cast<std::size_t>(i)] -= q;
            rb[static_cast<std::size_t>(j)] -= q;
            if (i == m - 1 && j == n - 1)
                break;
            if (j == n - 1 || (i < m - 1 && ra[static_cast<std::size_t>(i)] <= rb[static_cast<std::size_t>(j)]))
                ++i;
            else
                ++j;
        }
    }

    const double tol = 1e-12 * (1.0 + cost.cwiseAbs().maxCoeff());
    const Index nodes = m + n;  // rows 0..m-1, columns m..m+n-1
    std::vector<std::vector<std::pair<Index, std::size_t>>> adj(static_cast<std::size_t>(nodes));
    std::vector<double> pot(static_cast<std::size_t>(nodes));
    std::vector<Index> parent(static_cast<std::size_t>(nodes));
    std::vector<std::size_t> parent_cell(static_cast<std::size_t>(nodes));
    std::vector<Index> queue;
    queue.reserve(static_cast<std::size_t>(nodes));

    TransportPlan plan;
    int degenerate_run = 0;
    while (true) {
        for (auto& a : adj)
            a.clear();
        for (std::size_t k = 0; k < basis.size(); ++k) {
            adj[static_cast<std::size_t>(basis[k].i)].push_back({m + basis[k].j, k});
            adj[static_cast<std::size_t>(m + basis[k].j)].push_back({basis[k].i, k});
        }
        // Potentials u_i + v_j = c_ij on the tree; the BFS parents from row 0
        // also give the tree paths used for the pivot cycle.
        std::fill(parent.begin(), parent.end(), Index{-1});
        parent[0] = 0;
        pot[0] = 0.0;
        queue.assign(1, 0);
        for (std::size_t q = 0; q < queue.size(); ++q) {
            const Index u = queue[q];
            for (auto [v, k] : adj[static_cast<std::size_t>(u)]) {
                if (parent[static_cast<std::size_t>(v)] >= 0)
                    continue;
                parent[static_cast<std::size_t>(v)] = u;
                parent_cell[static_cast<std::size_t>(v)] = k;
                pot[static_cast<std::size_t>(v)] = cost(basis[k].i, basis[k].j) - pot[static_cast<std::size_t>(u)];
                queue.push_back(v);
            }
        }
        if (static_cast<Index>(queue.size()) != nodes)
            throw ConvergenceError("transport_simplex: basis is not a spanning tree", kInf);

        const bool bland = degenerate_run >= kDegenerateRunBeforeBland;
        Index ei = -1, ej = -1;
        double best = -tol;
        for (Index i = 0; i < m && !(bland && ei >= 0); ++i) {
            for (Index j = 0; j < n; ++j) {
                const double rc = cost(i, j) - pot[static_cast<std::size_t>(i)] -
                                  pot[static_cast<std::size_t>(m + j)];
                if (rc < best) {
                    ei = i;
                    ej = j;
                    if (bland)
                        break;
                    best = rc;
                }
            }
        }
        if (ei < 0)
            break;

        // Tree path from row ei and from column ej up to their common ancestor.
        std::vector<std::size_t> up_row, up_col;
        std::vector<Index> depth_marks;
        {
            std::vector<Index> anc_row;
            for (Index v = ei;; v = parent[static_cast<std::size_t>(v)]) {
                anc_row.push_back(v);
                if (v == 0)
                    break;
            }
            std::vector<char> on_row_path(static_cast<std::size_t>(nodes), 0);
            for (Index v : anc_row)
                on_row_path[static_cast<std::size_t>(v)] = 1;
            Index meet = m + ej;
            while (!on_row_path[static_cast<std::size_t>(meet)]) {
                up_col.push_back(parent_cell[static_cast<std::size_t>(meet)]);
                meet = parent[static_cast<std::size_t>(meet)];
            }
            for (Index v = ei; v != meet; v = parent[static_cast<std::size_t>(v)])
                up_row.push_back(parent_cell[static_cast<std::size_t>(v)]);
        }
        // Cycle order: entering (+), then from column ej towards the meeting
        // node, then back down to row ei. Signs alternate starting with -.
        std::vector<std::size_t> cycle(up_col.begin(), up_col.end());
        cycle.insert(cycle.end(), up_row.rbegin(), up_row.rend());

        double theta = kInf;
        std::size_t leave = basis.size();
        for (std::size_t k = 0; k < cycle.size(); k += 2) {
            const Cell& c = basis[cycle[k]];
            const bool better =
                c.flow < theta ||
                (c.flow == theta && leave < basis.size() &&
                 (c.i < basis[leave].i || (c.i == basis[leave].i && c.j < basis[leave].j)));
            if (better) {
                theta = c.flow;
                leave = cycle[k];
            }
        }
        for (std::size_t k = 0; k < cycle.size(); ++k)
            basis[cycle[k]].flow += (k % 2 == 0 ? -theta : theta);
        basis[leave] = {ei, ej, theta};
        degenerate_run = theta > 0.0 ? 0 : degenerate_run + 1;
        ++plan.pivots;
    }

    plan.flow = Matrix::Zero(m, n);
    for (const Cell& c : basis)
        plan.flow(c.i, c.j) = std::max(0.0, c.flow);
    plan.cost = (plan.flow.array() * cost.array()).sum();
    return plan;
}

double quantile_w2_squared(std::span<const double> coords, std::span<const double> mass0,
                           std::span<const double> mass1)
{
    const std::size_t n = coords.size();
    if (mass0.size() != n || mass1.size() != n)
        throw DomainError("quantile_w2_squared: size mismatch");
    for (std::size_t k = 1; k < n; ++k)
        if (coords[k] < coords[k - 1])
            throw DomainError("quantile_w2_squared: coordinates must be sorted");
    const double t0 = std::accumulate(mass0.begin(), mass0.end(), 0.0);
    const double t1 = std::accumulate(mass1.begin(), mass1.end(), 0.0);

    std::size_t i = 0, j = 0;
    double ra = mass0[0] / t0, rb = mass1[0] / t1;
    double total = 0.0;
    while (i < n && j < n) {
        const double q = std::min(ra, rb);
        const double d = coords[i] - coords[j];
        total += q * d * d;
        ra -= q;
        rb -= q;
        if (ra <= rb) {
            if (++i < n)
                ra = mass0[i] / t0;
        } else {
            if (++j < n)
                rb = mass1[j] / t1;
        }
    }
    return total;
}

}  // namespace hjlab
