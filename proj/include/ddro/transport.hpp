#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <numeric>
#include <tuple>

#include "ddro/measure.hpp"

namespace ddro {

/// One shipping entry of an optimal coupling: mass moved from source atom i
/// to target atom j.
struct TransportArc {
    int i;
    int j;
    double mass;
};

struct TransportPlan {
    double cost = 0.0;
    std::vector<TransportArc> arcs;
};

namespace detail {

/// Primal transportation simplex on the bipartite flow problem
///   min sum c_ij f_ij   s.t.  sum_j f_ij = a_i,  sum_i f_ij = b_j,  f >= 0.
/// Exact (no entropic smoothing). Greedy cheapest-row initial basis, block
/// pricing for the entering arc, Bland's rule fallback after a degenerate
/// stall so the pivot sequence always terminates.
class TransportationSimplex {
public:
    using CostFn = std::function<double(int, int)>;

    TransportationSimplex(Vector supply, Vector demand, CostFn cost)
        : a_(std::move(supply)), d_(std::move(demand)), cost_(std::move(cost)),
          m_(static_cast<int>(a_.size())), n_(static_cast<int>(d_.size())) {}

    TransportPlan solve() {
        build_initial_basis();
        const long pivot_cap = 2000L * (m_ + n_) + 100000L;
        long degenerate_streak = 0;
        bool bland = false;
        for (long pivots = 0;; ++pivots) {
            if (pivots > pivot_cap)
                throw SolverError("transport: pivot cap exceeded");
            compute_potentials();
            auto [ei, ej] = find_entering(bland);
            if (ei < 0) break; // optimal
            double theta = pivot(ei, ej);
            degenerate_streak = (theta <= 0.0) ? degenerate_streak + 1 : 0;
            if (degenerate_streak > m_ + n_) bland = true;
        }
        TransportPlan plan;
        for (const auto& arc : arcs_) {
            if (arc.mass > 0.0) plan.arcs.push_back(arc); // degenerate arcs stay internal
            plan.cost += arc.mass * cost_(arc.i, arc.j);
        }
        return plan;
    }

private:
    int node_row(int i) const { return i; }
    int node_col(int j) const { return m_ + j; }

    void build_initial_basis() {
        arcs_.clear();
        adj_.assign(m_ + n_, {});
        Vector rem_a = a_, rem_d = d_;
        // column-wise cheapest available row; every arc exhausts the column or
        // a row, so the arcs form a forest of at most m+n-1 edges
        for (int j = 0; j < n_; ++j) {
            while (rem_d[j] > 0.0) {
                int best = -1;
                double best_c = kInf;
                for (int i = 0; i < m_; ++i) {
                    if (rem_a[i] <= 0.0) continue;
                    double c = cost_(i, j);
                    if (c < best_c) {
                        best_c = c;
                        best = i;
                    }
                }
                if (best < 0) break; // rounding residual; dropped mass is O(eps)
                double q = std::min(rem_a[best], rem_d[j]);
                add_arc(best, j, q);
                rem_a[best] -= q;
                rem_d[j] -= q;
            }
        }
        connect_components();
    }

    /// Add zero-flow arcs until the basis is a single spanning tree.
    void connect_components() {
        if (static_cast<int>(arcs_.size()) == m_ + n_ - 1) return;
        std::vector<int> comp(m_ + n_);
        std::iota(comp.begin(), comp.end(), 0);
        std::function<int(int)> find = [&](int x) {
            while (comp[x] != x) x = comp[x] = comp[comp[x]];
            return x;
        };
        for (const auto& arc : arcs_) comp[find(node_row(arc.i))] = find(node_col(arc.j));
        for (int j = 0; j < n_ && static_cast<int>(arcs_.size()) < m_ + n_ - 1; ++j) {
            for (int i = 0; i < m_ && static_cast<int>(arcs_.size()) < m_ + n_ - 1; ++i) {
                int ri = find(node_row(i)), rj = find(node_col(j));
                if (ri != rj) {
                    add_arc(i, j, 0.0);
                    comp[ri] = rj;
                }
            }
        }
        if (static_cast<int>(arcs_.size()) != m_ + n_ - 1)
            throw SolverError("transport: failed to build spanning basis");
    }

    void add_arc(int i, int j, double q) {
        int id = static_cast<int>(arcs_.size());
        arcs_.push_back({i, j, q});
        adj_[node_row(i)].push_back(id);
        adj_[node_col(j)].push_back(id);
    }

    void compute_potentials() {
        u_.assign(m_, 0.0);
        v_.assign(n_, 0.0);
        std::vector<char> seen(m_ + n_, 0);
        std::deque<int> queue{0};
        seen[0] = 1;
        while (!queue.empty()) {
            int node = queue.front();
            queue.pop_front();
            for (int id : adj_[node]) {
                const auto& arc = arcs_[id];
                int other = (node == node_row(arc.i)) ? node_col(arc.j) : node_row(arc.i);
                if (seen[other]) continue;
                seen[other] = 1;
                if (other >= m_)
                    v_[other - m_] = cost_(arc.i, arc.j) - u_[arc.i];
                else
                    u_[other] = cost_(arc.i, arc.j) - v_[arc.j];
                queue.push_back(other);
            }
        }
    }

    std::pair<int, int> find_entering(bool bland) {
        const double tol = 1e-11 * std::max(1.0, cost_scale());
        const long total = static_cast<long>(m_) * n_;
        const long block = std::max<long>(4096, 8L * (m_ + n_));
        if (bland) {
            for (long idx = 0; idx < total; ++idx) {
                int i = static_cast<int>(idx / n_), j = static_cast<int>(idx % n_);
                if (cost_(i, j) - u_[i] - v_[j] < -tol) return {i, j};
            }
            return {-1, -1};
        }
        long scanned = 0;
        while (scanned < total) {
            int best_i = -1, best_j = -1;
            double best_red = -tol;
            long stop = std::min(total, scanned + block);
            for (; scanned < stop; ++scanned) {
                long idx = (scan_pos_ + scanned) % total;
                int i = static_cast<int>(idx / n_), j = static_cast<int>(idx % n_);
                double red = cost_(i, j) - u_[i] - v_[j];
                if (red < best_red) {
                    best_red = red;
                    best_i = i;
                    best_j = j;
                }
            }
            if (best_i >= 0) {
                scan_pos_ = (scan_pos_ + scanned) % total;
                return {best_i, best_j};
            }
        }
        return {-1, -1};
    }

    double cost_scale() {
        if (cost_scale_ < 0.0) {
            cost_scale_ = 0.0;
            for (int i = 0; i < m_; ++i)
                cost_scale_ = std::max(cost_scale_, std::abs(cost_(i, 0)));
            for (int j = 0; j < n_; ++j)
                cost_scale_ = std::max(cost_scale_, std::abs(cost_(0, j)));
        }
        return cost_scale_;
    }

    /// Bring arc (ei, ej) into the basis; returns the flow change theta.
    double pivot(int ei, int ej) {
        // tree path from the entering arc's column node back to its row node
        std::vector<int> parent_arc(m_ + n_, -1), parent_node(m_ + n_, -1);
        std::vector<char> seen(m_ + n_, 0);
        std::deque<int> queue{node_col(ej)};
        seen[node_col(ej)] = 1;
        while (!queue.empty()) {
            int node = queue.front();
            queue.pop_front();
            if (node == node_row(ei)) break;
            for (int id : adj_[node]) {
                const auto& arc = arcs_[id];
                int other = (node == node_row(arc.i)) ? node_col(arc.j) : node_row(arc.i);
                if (seen[other]) continue;
                seen[other] = 1;
                parent_arc[other] = id;
                parent_node[other] = node;
                queue.push_back(other);
            }
        }
        if (!seen[node_row(ei)]) throw SolverError("transport: basis tree disconnected");
        // collect cycle arcs with alternating signs; the entering arc is '+'
        std::vector<int> path;
        for (int node = node_row(ei); node != node_col(ej); node = parent_node[node])
            path.push_back(parent_arc[node]);
        double theta = kInf;
        int leaving = -1;
        for (std::size_t t = 0; t < path.size(); ++t) {
            if (t % 2 == 0) { // '-' arcs: first tree arc shares the entering row
                const auto& arc = arcs_[path[t]];
                if (arc.mass < theta || (arc.mass == theta && (leaving < 0 || path[t] < leaving))) {
                    theta = arc.mass;
                    leaving = path[t];
                }
            }
        }
        if (leaving < 0) throw SolverError("transport: no leaving arc");
        for (std::size_t t = 0; t < path.size(); ++t)
            arcs_[path[t]].mass += (t % 2 == 0) ? -theta : theta;
        replace_arc(leaving, ei, ej, theta);
        return theta;
    }

    void replace_arc(int id, int new_i, int new_j, double flow) {
        auto detach = [&](int node, int arc_id) {
            auto& lst = adj_[node];
            for (std::size_t t = 0; t < lst.size(); ++t)
                if (lst[t] == arc_id) {
                    lst[t] = lst.back();
                    lst.pop_back();
                    return;
                }
        };
        detach(node_row(arcs_[id].i), id);
        detach(node_col(arcs_[id].j), id);
        arcs_[id] = {new_i, new_j, flow};
        adj_[node_row(new_i)].push_back(id);
        adj_[node_col(new_j)].push_back(id);
    }

    Vector a_, d_;
    CostFn cost_;
    int m_, n_;
    std::vector<TransportArc> arcs_;
    std::vector<std::vector<int>> adj_;
    Vector u_, v_;
    long scan_pos_ = 0;
    double cost_scale_ = -1.0;
};

} // namespace detail

/// Exact optimal coupling between two discrete measures under the p-norm
/// ground metric.
inline TransportPlan transport_plan(const DiscreteMeasure& P1, const DiscreteMeasure& P2,
                                    double p = 1.0) {
    if (P1.dim() != P2.dim())
        throw ValidationError("wasserstein1: measure dimension mismatch");
    const int m = static_cast<int>(P1.size());
    const int n = static_cast<int>(P2.size());
    if (m == 1) {
        TransportPlan plan;
        for (int j = 0; j < n; ++j) {
            plan.arcs.push_back({0, j, P2.weights()[j]});
            plan.cost += P2.weights()[j] * ground_distance(P1.atoms()[0], P2.atoms()[j], p);
        }
        return plan;
    }
    if (n == 1) {
        TransportPlan plan;
        for (int i = 0; i < m; ++i) {
            plan.arcs.push_back({i, 0, P1.weights()[i]});
            plan.cost += P1.weights()[i] * ground_distance(P1.atoms()[i], P2.atoms()[0], p);
        }
        return plan;
    }
    // cache the cost matrix when it fits; evaluate on the fly otherwise
    const long cells = static_cast<long>(m) * n;
    if (cells <= 4'000'000L) {
        std::vector<double> cost(static_cast<std::size_t>(cells));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                cost[static_cast<std::size_t>(i) * n + j] =
                    ground_distance(P1.atoms()[i], P2.atoms()[j], p);
        detail::TransportationSimplex solver(
            P1.weights(), P2.weights(),
            [cost = std::move(cost), n](int i, int j) {
                return cost[static_cast<std::size_t>(i) * n + j];
            });
        return solver.solve();
    }
    detail::TransportationSimplex solver(P1.weights(), P2.weights(), [&P1, &P2, p](int i, int j) {
        return ground_distance(P1.atoms()[i], P2.atoms()[j], p);
    });
    return solver.solve();
}

/// Exact 1-Wasserstein distance between finitely supported measures.
inline double wasserstein1(const DiscreteMeasure& P1, const DiscreteMeasure& P2, double p = 1.0) {
    return transport_plan(P1, P2, p).cost;
}

} // namespace ddro
