#pragma once

#include <utility>

#include "ddro/common.hpp"

namespace ddro {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpResult {
    LpStatus status = LpStatus::IterationLimit;
    double objective = 0.0;
    Vector x; // values of the user-facing variables
};

/// Dense two-phase primal simplex. Variables carry individual bounds
/// (possibly infinite); rows are <=, >= or = constraints. Dantzig pricing
/// with a Bland's-rule fallback after a degenerate stall.
class LinearProgram {
public:
    /// Returns the variable index. lo may be -inf, hi may be +inf.
    int add_variable(double lo, double hi, double obj = 0.0) {
        if (lo > hi) throw ValidationError("lp: variable lower bound above upper bound");
        vars_.push_back({lo, hi, obj});
        return static_cast<int>(vars_.size()) - 1;
    }

    void set_objective(int var, double coef) { vars_.at(var).obj = coef; }

    /// sense: '<' (<=), '>' (>=) or '='.
    void add_constraint(std::vector<std::pair<int, double>> terms, char sense, double rhs) {
        if (sense != '<' && sense != '>' && sense != '=')
            throw ValidationError("lp: unknown constraint sense");
        for (auto& [v, c] : terms) vars_.at(v); // index check
        rows_.push_back({std::move(terms), sense, rhs});
    }

    std::size_t num_variables() const { return vars_.size(); }
    std::size_t num_constraints() const { return rows_.size(); }

    LpResult minimize() const { return solve(1.0); }
    LpResult maximize() const {
        LpResult r = solve(-1.0);
        r.objective = -r.objective;
        return r;
    }

private:
    struct Var {
        double lo, hi, obj;
    };
    struct Row {
        std::vector<std::pair<int, double>> terms;
        char sense;
        double rhs;
    };

    // Standard-form translation: every user variable maps to one or two
    // nonnegative columns plus a constant shift, finite upper bounds become
    // extra rows.
    struct Translation {
        std::vector<int> col_pos;   // column of the '+' part
        std::vector<int> col_neg;   // column of the '-' part, -1 if none
        Vector shift;               // x = shift + z_pos - z_neg
        int ncols = 0;
    };

    LpResult solve(double sign) const {
        Translation tr;
        tr.col_pos.resize(vars_.size());
        tr.col_neg.assign(vars_.size(), -1);
        tr.shift.resize(vars_.size());
        std::vector<Row> rows = rows_;
        for (std::size_t v = 0; v < vars_.size(); ++v) {
            const Var& var = vars_[v];
            if (std::isfinite(var.lo)) {
                tr.shift[v] = var.lo;
                tr.col_pos[v] = tr.ncols++;
                if (std::isfinite(var.hi) && var.hi > var.lo)
                    rows.push_back({{{static_cast<int>(v), 1.0}}, '<', var.hi});
                else if (var.hi == var.lo)
                    rows.push_back({{{static_cast<int>(v), 1.0}}, '=', var.hi});
            } else if (std::isfinite(var.hi)) {
                // x = hi - z
                tr.shift[v] = var.hi;
                tr.col_neg[v] = tr.ncols++;
                tr.col_pos[v] = -1;
            } else {
                tr.shift[v] = 0.0;
                tr.col_pos[v] = tr.ncols++;
                tr.col_neg[v] = tr.ncols++;
            }
        }

        const int m = static_cast<int>(rows.size());
        // columns: structural + one slack per inequality + one artificial per row
        int nslack = 0;
        for (const auto& r : rows)
            if (r.sense != '=') ++nslack;
        const int n_struct = tr.ncols;
        const int n = n_struct + nslack + m;
        const int art0 = n_struct + nslack;

        std::vector<Vector> T(m + 1, Vector(n + 1, 0.0));
        std::vector<int> basis(m, -1);
        Vector cost(n, 0.0);

        int slack_at = n_struct;
        for (int r = 0; r < m; ++r) {
            double rhs = rows[r].rhs;
            for (const auto& [v, c] : rows[r].terms) {
                rhs -= c * tr.shift[v];
                if (tr.col_pos[v] >= 0) T[r][tr.col_pos[v]] += c;
                if (tr.col_neg[v] >= 0) T[r][tr.col_neg[v]] -= c;
            }
            if (rows[r].sense == '<')
                T[r][slack_at++] = 1.0;
            else if (rows[r].sense == '>')
                T[r][slack_at++] = -1.0;
            T[r][n] = rhs;
            if (T[r][n] < 0.0)
                for (int c = 0; c <= n; ++c) T[r][c] = -T[r][c];
            T[r][art0 + r] = 1.0;
            basis[r] = art0 + r;
        }
        for (std::size_t v = 0; v < vars_.size(); ++v) {
            double c = sign * vars_[v].obj;
            if (tr.col_pos[v] >= 0) cost[tr.col_pos[v]] += c;
            if (tr.col_neg[v] >= 0) cost[tr.col_neg[v]] -= c;
        }

        // phase 1: minimize the sum of artificials
        for (int c = art0; c < n; ++c) T[m][c] = 1.0;
        for (int r = 0; r < m; ++r)
            for (int c = 0; c <= n; ++c) T[m][c] -= T[r][c];
        if (!iterate(T, basis, n, art0))
            return {LpStatus::IterationLimit, 0.0, {}};
        if (T[m][n] < -1e-7) return {LpStatus::Infeasible, 0.0, {}};
        drive_out_artificials(T, basis, n, art0);

        // phase 2
        for (int c = 0; c <= n; ++c) T[m][c] = 0.0;
        for (int c = 0; c < art0; ++c) T[m][c] = cost[c];
        for (int r = 0; r < m; ++r) {
            if (basis[r] < art0 && cost[basis[r]] != 0.0) {
                double f = cost[basis[r]];
                for (int c = 0; c <= n; ++c) T[m][c] -= f * T[r][c];
            }
        }
        if (!iterate(T, basis, n, art0))
            return {LpStatus::IterationLimit, 0.0, {}};

        // check unboundedness flag set by iterate via sentinel
        if (unbounded_) return {LpStatus::Unbounded, 0.0, {}};

        Vector z(n_struct, 0.0);
        for (int r = 0; r < m; ++r)
            if (basis[r] < n_struct) z[basis[r]] = T[r][n];
        LpResult res;
        res.status = LpStatus::Optimal;
        res.x.resize(vars_.size());
        for (std::size_t v = 0; v < vars_.size(); ++v) {
            double x = tr.shift[v];
            if (tr.col_pos[v] >= 0) x += z[tr.col_pos[v]];
            if (tr.col_neg[v] >= 0) x -= z[tr.col_neg[v]];
            res.x[v] = x;
        }
        res.objective = 0.0;
        for (std::size_t v = 0; v < vars_.size(); ++v)
            res.objective += sign * vars_[v].obj * res.x[v];
        return res;
    }

    /// Runs simplex pivots on the tableau until optimal, unbounded or the
    /// iteration cap. Artificial columns (>= art_block in phase 2 the caller
    /// zeroes their costs, they are blocked from entering once out of basis).
    bool iterate(std::vector<Vector>& T, std::vector<int>& basis, int n, int art0) const {
        unbounded_ = false;
        const int m = static_cast<int>(basis.size());
        const long cap = 200L * (m + n) + 20000;
        long stall = 0;
        double last_obj = T[m][n];
        bool bland = false;
        for (long it = 0; it < cap; ++it) {
            int enter = -1;
            if (bland) {
                for (int c = 0; c < n; ++c)
                    if (!is_blocked(c, basis, art0) && T[m][c] < -1e-10) {
                        enter = c;
                        break;
                    }
            } else {
                double best = -1e-10;
                for (int c = 0; c < n; ++c)
                    if (!is_blocked(c, basis, art0) && T[m][c] < best) {
                        best = T[m][c];
                        enter = c;
                    }
            }
            if (enter < 0) return true; // optimal
            // two-pass ratio test: find the minimum ratio, then among rows
            // within tolerance of it pick the largest pivot element. Pivoting
            // on a near-zero element amplifies round-off enough to corrupt the
            // whole tableau on degenerate instances.
            double best_ratio = kInf;
            for (int r = 0; r < m; ++r)
                if (T[r][enter] > 1e-9) {
                    double ratio = std::max(T[r][n], 0.0) / T[r][enter];
                    if (ratio < best_ratio) best_ratio = ratio;
                }
            if (best_ratio == kInf) {
                unbounded_ = true;
                return true;
            }
            int leave = -1;
            double best_piv = 0.0;
            double rtol = 1e-9 * (1.0 + best_ratio);
            for (int r = 0; r < m; ++r)
                if (T[r][enter] > 1e-9) {
                    double ratio = std::max(T[r][n], 0.0) / T[r][enter];
                    if (ratio <= best_ratio + rtol &&
                        (T[r][enter] > best_piv ||
                         (T[r][enter] == best_piv && basis[r] < basis[leave]))) {
                        best_piv = T[r][enter];
                        leave = r;
                    }
                }
            pivot(T, basis, leave, enter, n);
            // once a degenerate stall triggers Bland's rule, keep it: reverting
            // to Dantzig pricing on a tiny numerical improvement can cycle.
            // The improvement threshold is scale-relative so that round-off
            // wobble in a degenerate basis does not masquerade as progress.
            if (T[m][n] > last_obj - 1e-9 * (1.0 + std::abs(last_obj))) {
                if (++stall > 2L * (m + n)) bland = true;
            } else {
                stall = 0;
            }
            last_obj = T[m][n];
        }
        return false;
    }

    bool is_blocked(int c, const std::vector<int>& basis, int art0) const {
        if (c < art0) return false;
        for (int b : basis)
            if (b == c) return false;
        return true; // nonbasic artificial never re-enters
    }

    void pivot(std::vector<Vector>& T, std::vector<int>& basis, int r, int c, int n) const {
        const int m = static_cast<int>(basis.size());
        double piv = T[r][c];
        for (int j = 0; j <= n; ++j) T[r][j] /= piv;
        T[r][c] = 1.0;
        for (int i = 0; i <= m; ++i) {
            if (i == r) continue;
            double f = T[i][c];
            if (f == 0.0) continue;
            for (int j = 0; j <= n; ++j) T[i][j] -= f * T[r][j];
            T[i][c] = 0.0;
        }
        basis[r] = c;
    }

    void drive_out_artificials(std::vector<Vector>& T, std::vector<int>& basis, int n,
                               int art0) const {
        const int m = static_cast<int>(basis.size());
        for (int r = 0; r < m; ++r) {
            if (basis[r] < art0) continue;
            int enter = -1;
            for (int c = 0; c < art0; ++c)
                if (std::abs(T[r][c]) > 1e-9) {
                    enter = c;
                    break;
                }
            if (enter >= 0) pivot(T, basis, r, enter, n);
            // otherwise the row is redundant; the artificial stays basic at zero
        }
    }

    std::vector<Var> vars_;
    std::vector<Row> rows_;
    mutable bool unbounded_ = false;
};

} // namespace ddro
