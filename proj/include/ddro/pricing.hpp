#pragma once

#include "ddro/robust.hpp"

namespace ddro {

/// Multi-period pricing under decision-dependent demand: choose prices
/// x in [0, x_U]^T to maximize worst-case expected revenue x'xi over the
/// ambiguity ball around the interpolated demand distribution.
struct PricingInstance {
    int T = 3;
    double x_U = 1.0;
    double xi_U = 5.0;
    double ground_p = 1.0; // demand-space norm; dual exponent q solves 1/p + 1/q = 1
    GroupedDataset grouped;
    double radius = 0.0;
    WeightScheme scheme = WeightScheme::nearest_neighbor();

    void validate() const {
        if (T < 1) throw ValidationError("pricing: T must be >= 1");
        if (!(x_U > 0.0) || !(xi_U > 0.0))
            throw ValidationError("pricing: x_U and xi_U must be > 0");
        if (!(ground_p >= 1.0)) throw ValidationError("pricing: ground_p must be >= 1");
        if (!(radius >= 0.0)) throw ValidationError("pricing: radius must be >= 0");
        if (grouped.num_groups() == 0) throw ValidationError("pricing: empty dataset");
        for (const auto& x : grouped.distinct_decisions)
            if (static_cast<int>(x.size()) != T)
                throw ValidationError("pricing: decision dimension != T");
        for (const auto& xi : grouped.distinct_outcomes)
            if (static_cast<int>(xi.size()) != T)
                throw ValidationError("pricing: outcome dimension != T");
        scheme.validate();
    }

    double dual_q() const {
        if (ground_p == 1.0) return kInf;
        if (std::isinf(ground_p)) return 1.0;
        return ground_p / (ground_p - 1.0);
    }

    Box feasible_box() const { return Box::cube(T, 0.0, x_U); }
    Box outcome_box() const { return Box::cube(T, 0.0, xi_U); }

    /// Lipschitz constant of the revenue in the demand p-norm over the price
    /// box: sup |x'(s1-s2)| <= ||x||_q ||s1-s2||_p <= x_U T^(1/q).
    double revenue_lipschitz() const {
        double q = dual_q();
        return std::isinf(q) ? x_U : x_U * std::pow(static_cast<double>(T), 1.0 / q);
    }

    RobustProblem to_robust_problem(int grid_resolution = 33) const {
        validate();
        RobustProblem p;
        p.objective.h = [](const Vector& x, const SupportPoint& s) { return dot(x, s); };
        p.objective.lipschitz_cp = revenue_lipschitz();
        p.objective.direction = Direction::Maximize;
        p.objective.affine_in_x = [](const SupportPoint& s) { return std::make_pair(s, 0.0); };
        p.feasible_box = feasible_box();
        p.outcome_box = outcome_box();
        p.grouped = grouped;
        p.scheme = scheme;
        p.radius = radius;
        p.ground_p = ground_p;
        p.outcome_grid_resolution = grid_resolution;
        return p;
    }
};

/// Cumulative revenue x'xi.
inline double revenue(const Vector& x, const Vector& xi) {
    if (x.size() != xi.size()) throw ValidationError("revenue: length mismatch");
    return dot(x, xi);
}

struct PricingCellResult {
    Vector x;
    double value = -kInf;
    double certificate_max_residual = 0.0;
    bool feasible = true; // false when the cell polyhedron is empty
};

struct PricingSolveResult {
    Vector x_hat;
    double value_hat = 0.0;
    int cells_solved = 0;
    double certificate_max_residual = 0.0;
    int best_cell = -1;
};

namespace detail {

/// Residual check of the pricing-cell constraint system at a solution.
inline double pricing_residual(const PricingInstance& inst,
                               const std::vector<Halfspace>& cell, const Vector& f,
                               const Vector& x, const Vector& nu, double nu_last,
                               const Vector& w, const std::vector<Vector>& lambda) {
    const int T = inst.T;
    double res = 0.0;
    for (int t = 0; t < T; ++t) {
        res = std::max(res, -x[t]);
        res = std::max(res, x[t] - inst.x_U);
    }
    for (const auto& h : cell) res = std::max(res, dot(h.a, x) - h.b);
    res = std::max(res, nu_last);
    double q = inst.dual_q();
    res = std::max(res, pnorm(w, q) + nu_last);
    std::size_t li = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] <= 0.0) continue;
        const Vector& lam = lambda[li++];
        double lhs = nu[i];
        for (int t = 0; t < T; ++t) {
            lhs += inst.xi_U * lam[t] + w[t] * inst.grouped.distinct_outcomes[i][t];
            res = std::max(res, -lam[t]);
            res = std::max(res, lam[t] - x[t] - w[t]);
        }
        res = std::max(res, lhs);
    }
    return res;
}

} // namespace detail

/// Finite convex program of one Voronoi cell, with the interpolation
/// coefficients f held at the cell's constant value:
///   maximize  sum_i f_i nu_i + r nu_last
///   s.t.      nu_i + xi_U 1'lambda_i + w'xi_i <= 0      (per atom with f_i > 0)
///             lambda_i <= x + w,  lambda_i >= 0
///             ||w||_q <= -nu_last,  nu_last <= 0
///             x in cell, 0 <= x <= x_U.
/// q in {1, inf} is solved as one LP; q = 2 by outer-approximation cuts
/// u'w + nu_last <= 0 with ||u||_2 = 1.
inline PricingCellResult solve_pricing_cell(const PricingInstance& inst,
                                            const std::vector<Halfspace>& cell,
                                            const Vector& f_coeffs) {
    inst.validate();
    if (f_coeffs.size() != inst.grouped.num_outcomes())
        throw ValidationError("pricing cell: f_coeffs length mismatch");
    const int T = inst.T;
    const double q = inst.dual_q();
    const bool q1 = (q == 1.0);
    const bool qinf = std::isinf(q);
    if (!q1 && !qinf && q != 2.0)
        throw ValidationError("pricing cell: dual norm exponent must be 1, 2, or inf");

    std::vector<int> support;
    for (std::size_t i = 0; i < f_coeffs.size(); ++i)
        if (f_coeffs[i] > 0.0) support.push_back(static_cast<int>(i));
    if (support.empty()) throw ValidationError("pricing cell: all coefficients zero");

    if (inst.radius == 0.0) {
        // no adversary: maximize the empirical expected revenue
        // sum_t x_t (sum_i f_i xi_{i,t}) over the cell, a plain LP in x
        Vector mean_xi(T, 0.0);
        for (int i : support)
            for (int t = 0; t < T; ++t)
                mean_xi[t] += f_coeffs[i] * inst.grouped.distinct_outcomes[i][t];
        LinearProgram lp;
        std::vector<int> xv(T);
        for (int t = 0; t < T; ++t) xv[t] = lp.add_variable(0.0, inst.x_U, mean_xi[t]);
        for (const auto& h : cell) {
            std::vector<std::pair<int, double>> terms;
            for (int t = 0; t < T; ++t)
                if (h.a[t] != 0.0) terms.emplace_back(xv[t], h.a[t]);
            lp.add_constraint(std::move(terms), '<', h.b);
        }
        LpResult r = lp.maximize();
        if (r.status == LpStatus::Infeasible) {
            PricingCellResult out;
            out.feasible = false;
            return out;
        }
        if (r.status != LpStatus::Optimal)
            throw SolverError("pricing cell: radius-0 LP did not converge");
        PricingCellResult out;
        out.x.resize(T);
        for (int t = 0; t < T; ++t) out.x[t] = r.x[xv[t]];
        out.value = r.objective;
        for (int t = 0; t < T; ++t) {
            out.certificate_max_residual = std::max(out.certificate_max_residual, -out.x[t]);
            out.certificate_max_residual =
                std::max(out.certificate_max_residual, out.x[t] - inst.x_U);
        }
        for (const auto& h : cell)
            out.certificate_max_residual =
                std::max(out.certificate_max_residual, dot(h.a, out.x) - h.b);
        return out;
    }

    std::vector<Vector> norm_cuts; // q = 2 outer approximation directions
    if (q == 2.0)
        for (int t = 0; t < T; ++t)
            for (double sgn : {1.0, -1.0}) {
                Vector u(T, 0.0);
                u[t] = sgn;
                norm_cuts.push_back(std::move(u));
            }

    for (int round = 0; round < 100; ++round) {
        LinearProgram lp;
        std::vector<int> xv(T), wp(T), wm(T);
        for (int t = 0; t < T; ++t) xv[t] = lp.add_variable(0.0, inst.x_U, 0.0);
        // w split into nonnegative parts; for q = 1 the parts also carry the
        // norm expansion sum(w+ + w-) <= -nu_last
        for (int t = 0; t < T; ++t) {
            wp[t] = lp.add_variable(0.0, kInf, 0.0);
            wm[t] = lp.add_variable(0.0, kInf, 0.0);
        }
        int nl = lp.add_variable(-kInf, 0.0, inst.radius);
        std::vector<int> nuv(f_coeffs.size(), -1);
        std::vector<std::vector<int>> lamv;
        for (int i : support) {
            nuv[i] = lp.add_variable(-kInf, kInf, f_coeffs[i]);
            std::vector<int> lam(T);
            for (int t = 0; t < T; ++t) lam[t] = lp.add_variable(0.0, kInf, 0.0);
            lamv.push_back(std::move(lam));
        }

        for (const auto& h : cell) {
            std::vector<std::pair<int, double>> terms;
            for (int t = 0; t < T; ++t)
                if (h.a[t] != 0.0) terms.emplace_back(xv[t], h.a[t]);
            lp.add_constraint(std::move(terms), '<', h.b);
        }
        if (qinf) {
            for (int t = 0; t < T; ++t) {
                lp.add_constraint({{wp[t], 1.0}, {wm[t], -1.0}, {nl, 1.0}}, '<', 0.0);
                lp.add_constraint({{wp[t], -1.0}, {wm[t], 1.0}, {nl, 1.0}}, '<', 0.0);
            }
        } else if (q1) {
            std::vector<std::pair<int, double>> terms{{nl, 1.0}};
            for (int t = 0; t < T; ++t) {
                terms.emplace_back(wp[t], 1.0);
                terms.emplace_back(wm[t], 1.0);
            }
            lp.add_constraint(std::move(terms), '<', 0.0);
        } else {
            for (const auto& u : norm_cuts) {
                std::vector<std::pair<int, double>> terms{{nl, 1.0}};
                for (int t = 0; t < T; ++t) {
                    terms.emplace_back(wp[t], u[t]);
                    terms.emplace_back(wm[t], -u[t]);
                }
                lp.add_constraint(std::move(terms), '<', 0.0);
            }
        }
        for (std::size_t s = 0; s < support.size(); ++s) {
            int i = support[s];
            const Vector& xi = inst.grouped.distinct_outcomes[i];
            std::vector<std::pair<int, double>> terms{{nuv[i], 1.0}};
            for (int t = 0; t < T; ++t) {
                terms.emplace_back(lamv[s][t], inst.xi_U);
                if (xi[t] != 0.0) {
                    terms.emplace_back(wp[t], xi[t]);
                    terms.emplace_back(wm[t], -xi[t]);
                }
            }
            lp.add_constraint(std::move(terms), '<', 0.0);
            for (int t = 0; t < T; ++t)
                lp.add_constraint({{lamv[s][t], 1.0}, {xv[t], -1.0}, {wp[t], -1.0}, {wm[t], 1.0}},
                                  '<', 0.0);
        }

        LpResult r = lp.maximize();
        if (r.status == LpStatus::Infeasible) {
            PricingCellResult out;
            out.feasible = false;
            return out;
        }
        if (r.status == LpStatus::Unbounded)
            throw SolverError("pricing cell: unbounded program (invalid instance)");
        if (r.status != LpStatus::Optimal)
            throw SolverError("pricing cell: LP did not converge");

        Vector x(T), w(T);
        for (int t = 0; t < T; ++t) {
            x[t] = r.x[xv[t]];
            w[t] = r.x[wp[t]] - r.x[wm[t]];
        }
        double nu_last = r.x[nl];
        if (q == 2.0) {
            double norm = pnorm(w, 2.0);
            if (norm > -nu_last + 1e-9) {
                Vector u(T);
                for (int t = 0; t < T; ++t) u[t] = w[t] / norm;
                norm_cuts.push_back(std::move(u));
                continue; // re-solve with the violated norm cut added
            }
        }
        Vector nu(f_coeffs.size(), 0.0);
        std::vector<Vector> lambda;
        for (std::size_t s = 0; s < support.size(); ++s) {
            nu[support[s]] = r.x[nuv[support[s]]];
            Vector lam(T);
            for (int t = 0; t < T; ++t) lam[t] = r.x[lamv[s][t]];
            lambda.push_back(std::move(lam));
        }
        PricingCellResult out;
        out.x = std::move(x);
        out.value = r.objective;
        out.certificate_max_residual =
            detail::pricing_residual(inst, cell, f_coeffs, out.x, nu, nu_last, w, lambda);
        return out;
    }
    throw SolverError("pricing cell: norm-cut loop did not converge");
}

/// Global pricing solve: enumerate the Voronoi cells of the observed price
/// points (nearest-neighbor coefficients are constant per cell), solve each
/// cell's convex program, keep the best.
inline PricingSolveResult solve_pricing(const PricingInstance& inst) {
    inst.validate();
    if (inst.scheme.kind != WeightKind::NearestNeighbor)
        throw ValidationError("pricing: cell solver requires nearest-neighbor scheme; "
                              "use the general robust solver otherwise");
    auto cells = voronoi_cells(inst.grouped.distinct_decisions, inst.feasible_box());
    PricingSolveResult out;
    out.value_hat = -kInf;
    for (std::size_t j = 0; j < cells.size(); ++j) {
        Vector f(inst.grouped.num_outcomes(), 0.0);
        for (const auto& [oi, share] : inst.grouped.group_coeffs[j]) f[oi] = share;
        PricingCellResult cell = solve_pricing_cell(inst, cells[j].halfspaces, f);
        if (!cell.feasible) continue;
        ++out.cells_solved;
        out.certificate_max_residual =
            std::max(out.certificate_max_residual, cell.certificate_max_residual);
        if (cell.value > out.value_hat) {
            out.value_hat = cell.value;
            out.x_hat = cell.x;
            out.best_cell = static_cast<int>(j);
        }
    }
    if (out.cells_solved == 0) throw SolverError("pricing: every cell was infeasible");
    return out;
}

/// Time-varying normal demand: per-period mean
/// mu_t(x) = (1.4 - 0.2 t)(1.7 x_U - mean(x)), identity covariance scaled by
/// sigma, samples clipped coordinatewise to [0, xi_U]. sigma = 0 is the
/// zero-noise diagnostic mode.
struct DemandModel {
    int T = 3;
    double x_U = 1.0;
    double xi_U = 5.0;
    double sigma = 1.0;

    void validate() const {
        if (T < 1) throw ValidationError("demand: T must be >= 1");
        if (!(x_U > 0.0) || !(xi_U > 0.0)) throw ValidationError("demand: caps must be > 0");
        if (!(sigma >= 0.0)) throw ValidationError("demand: sigma must be >= 0");
    }

    Vector mean(const Vector& x) const {
        if (static_cast<int>(x.size()) != T) throw ValidationError("demand: price length != T");
        double avg = 0.0;
        for (double c : x) avg += c / T;
        Vector mu(T);
        for (int t = 0; t < T; ++t) mu[t] = (1.4 - 0.2 * (t + 1)) * (1.7 * x_U - avg);
        return mu;
    }
};

inline std::vector<Vector> sample_demand(const DemandModel& model, const Vector& x,
                                         std::uint64_t seed, int count) {
    model.validate();
    if (count < 1) throw ValidationError("sample_demand: count must be >= 1");
    Vector mu = model.mean(x);
    Rng rng(seed);
    std::vector<Vector> out(count, Vector(model.T));
    for (auto& xi : out)
        for (int t = 0; t < model.T; ++t)
            xi[t] = std::clamp(mu[t] + model.sigma * rng.normal(), 0.0, model.xi_U);
    return out;
}

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::acos(-1.0));
}

/// E[clip(mu + sigma Z, 0, U)] for standard normal Z.
inline double clipped_normal_mean(double mu, double sigma, double U) {
    if (sigma == 0.0) return std::clamp(mu, 0.0, U);
    double alpha = -mu / sigma, beta = (U - mu) / sigma;
    return U * (1.0 - normal_cdf(beta)) + mu * (normal_cdf(beta) - normal_cdf(alpha)) +
           sigma * (normal_pdf(alpha) - normal_pdf(beta));
}

} // namespace detail

enum class TrueRevenueMode {
    AnalyticUnclipped, // sum_t x_t mu_t(x); ignores clipping (documented bias)
    AnalyticClipped,   // sum_t x_t E[clip(mu_t + sigma Z, 0, xi_U)], exact
    MonteCarlo,
};

struct TrueRevenue {
    double value = 0.0;
    double stderr_ = 0.0; // zero for the analytic modes
};

inline TrueRevenue true_expected_revenue(const DemandModel& model, const Vector& x,
                                         TrueRevenueMode mode, int mc_n = 100000,
                                         std::uint64_t mc_seed = 1) {
    model.validate();
    Vector mu = model.mean(x);
    TrueRevenue out;
    if (mode == TrueRevenueMode::AnalyticUnclipped) {
        for (int t = 0; t < model.T; ++t) out.value += x[t] * mu[t];
        return out;
    }
    if (mode == TrueRevenueMode::AnalyticClipped) {
        for (int t = 0; t < model.T; ++t)
            out.value += x[t] * detail::clipped_normal_mean(mu[t], model.sigma, model.xi_U);
        return out;
    }
    if (mc_n < 2) throw ValidationError("true_expected_revenue: Monte Carlo needs n >= 2");
    Rng rng(mc_seed);
    double sum = 0.0, sumsq = 0.0;
    for (int n = 0; n < mc_n; ++n) {
        double r = 0.0;
        for (int t = 0; t < model.T; ++t)
            r += x[t] * std::clamp(mu[t] + model.sigma * rng.normal(), 0.0, model.xi_U);
        sum += r;
        sumsq += r * r;
    }
    out.value = sum / mc_n;
    double var = std::max(0.0, (sumsq - sum * sum / mc_n) / (mc_n - 1));
    out.stderr_ = std::sqrt(var / mc_n);
    return out;
}

struct GroundTruth {
    Vector x_star;
    double J_star = 0.0;
    double grid_slack = 0.0; // Lipschitz bound on grid-search error
};

/// Grid maximization (with one refinement pass) of the expected revenue over
/// [0, x_U]^T under either analytic mode.
inline GroundTruth ground_truth_optimum(const DemandModel& model, int resolution,
                                        TrueRevenueMode mode = TrueRevenueMode::AnalyticClipped) {
    model.validate();
    if (resolution < 8) throw ValidationError("ground_truth: resolution must be >= 8");
    if (model.T > 4) throw ValidationError("ground_truth: grid mode supports T <= 4");
    if (mode == TrueRevenueMode::MonteCarlo)
        throw ValidationError("ground_truth: use an analytic mode for the grid search");
    auto J = [&](const Vector& x) { return true_expected_revenue(model, x, mode).value; };
    Box box = Box::cube(model.T, 0.0, model.x_U);
    GroundTruth out;
    out.J_star = -kInf;
    for (const auto& x : detail::box_grid(box, resolution)) {
        double v = J(x);
        if (v > out.J_star) {
            out.J_star = v;
            out.x_star = x;
        }
    }
    double cell = model.x_U / (resolution - 1);
    Box local(out.x_star, out.x_star);
    for (int t = 0; t < model.T; ++t) {
        local.lo[t] = std::max(0.0, out.x_star[t] - cell);
        local.hi[t] = std::min(model.x_U, out.x_star[t] + cell);
    }
    for (const auto& x : detail::box_grid(local, 17)) {
        double v = J(x);
        if (v > out.J_star) {
            out.J_star = v;
            out.x_star = x;
        }
    }
    // |dJ/dx_s| <= xi_U + x_U sum_t |1.4 - 0.2 t| / T <= xi_U + 1.2 x_U
    double lip = model.xi_U + 1.2 * model.x_U;
    out.grid_slack = lip * model.T * (cell / 16.0) / 2.0;
    return out;
}

} // namespace ddro
