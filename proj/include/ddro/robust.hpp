#pragma once

#include <algorithm>
#include <functional>
#include <optional>

#include "ddro/calibration.hpp"
#include "ddro/geometry.hpp"
#include "ddro/lp.hpp"
#include "ddro/rng.hpp"
#include "ddro/transport.hpp"

namespace ddro {

enum class Direction { Minimize, Maximize };

/// Objective of the robust problem. The adversary always takes the sense
/// opposite to `direction`. When h is affine in the decision for every fixed
/// outcome, `affine_in_x` may expose the coefficients (h(x,s) = a(s)'x + b(s));
/// the cutting-surface masters then become exact linear programs.
struct RobustObjective {
    std::function<double(const Vector&, const SupportPoint&)> h;
    double lipschitz_cp = 1.0; // Lipschitz constant of h in the outcome, p-norm
    Direction direction = Direction::Minimize;
    std::function<std::pair<Vector, double>(const SupportPoint&)> affine_in_x; // optional
};

/// A full robust instance over the grouped offline data.
struct RobustProblem {
    RobustObjective objective;
    Box feasible_box;
    Box outcome_box;
    GroupedDataset grouped;
    WeightScheme scheme;
    double radius = 0.0;
    double ground_p = 1.0;
    int outcome_grid_resolution = 33;
    double feas_tol = 1e-6;
    int max_iterations = 200;

    void validate() const {
        if (!objective.h) throw ValidationError("robust: objective function not set");
        if (!(objective.lipschitz_cp > 0.0))
            throw ValidationError("robust: lipschitz_cp must be > 0");
        if (!(radius >= 0.0)) throw ValidationError("robust: radius must be >= 0");
        if (outcome_grid_resolution < 2)
            throw ValidationError("robust: outcome grid resolution must be >= 2");
        if (grouped.num_groups() == 0) throw ValidationError("robust: empty grouped dataset");
    }
};

struct WorstCaseResult {
    double value = 0.0;          // adversarial expectation, in h units
    DiscreteMeasure witness;     // feasible measure attaining ~value
    double lambda = 0.0;         // transport-budget multiplier
    double grid_slack = 0.0;     // bound on grid-induced error of `value`
    double primal_value = 0.0;   // witness expectation of h
};

struct SeparationResult {
    double violation = 0.0;
    SupportPoint s_star;
    int i_star = 0;
};

struct SolveResult {
    Vector x_hat;
    double value_hat = 0.0;
    Vector dual_vars;            // minimization orientation of the inner dual
    int iterations = 0;
    double max_violation = 0.0;
    double grid_slack = 0.0;
    Vector master_values;        // master optimum per iteration
};

namespace detail {

/// Golden-section minimizer for a convex (unimodal) function on [lo, hi].
template <class F>
double golden_min(F&& f, double lo, double hi, double tol = 1e-11, int iters = 200) {
    const double phi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < iters && (b - a) > tol; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

/// Regular grid on a box, resolution points per dimension.
inline std::vector<Vector> box_grid(const Box& box, int resolution) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < box.dim(); ++i) {
        total *= static_cast<std::size_t>(resolution);
        if (total > 2'000'000)
            throw ValidationError("grid: resolution^dim too large; lower the resolution");
    }
    std::vector<Vector> pts;
    pts.reserve(total);
    Vector x(box.dim());
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rest = idx;
        for (std::size_t i = 0; i < box.dim(); ++i) {
            int c = static_cast<int>(rest % resolution);
            rest /= resolution;
            x[i] = (resolution == 1)
                       ? box.lo[i]
                       : box.lo[i] + (box.hi[i] - box.lo[i]) * c / (resolution - 1);
        }
        pts.push_back(x);
    }
    return pts;
}

/// Internal sign: the solver always minimizes g = +h (outer min) or g = -h
/// (outer max); the adversary maximizes E[g].
inline double objective_sign(Direction d) { return d == Direction::Minimize ? 1.0 : -1.0; }

/// Candidate outcome set for sup evaluations: the regular grid plus every
/// nominal atom (so the lambda >= c_p regime is exact), plus one local
/// refinement pass around incumbent argmax points.
struct CandidateSet {
    std::vector<SupportPoint> points;
    std::vector<double> g;               // g(x, s) per candidate
    std::vector<Vector> dist;            // dist[i][j] = d(atom_i, s_j)
    double coarse_cell_halfdiam = 0.0;

    void append(const SupportPoint& s, double gval, const std::vector<SupportPoint>& atoms,
                double p) {
        points.push_back(s);
        g.push_back(gval);
        for (std::size_t i = 0; i < atoms.size(); ++i)
            dist[i].push_back(ground_distance(atoms[i], s, p));
    }
};

inline CandidateSet build_candidates(const RobustProblem& problem, const Vector& x,
                                     const std::vector<SupportPoint>& atoms) {
    const double sign = objective_sign(problem.objective.direction);
    CandidateSet cs;
    cs.dist.resize(atoms.size());
    Vector cell(problem.outcome_box.dim());
    for (std::size_t i = 0; i < cell.size(); ++i)
        cell[i] = (problem.outcome_box.hi[i] - problem.outcome_box.lo[i]) /
                  std::max(1, problem.outcome_grid_resolution - 1) / 2.0;
    cs.coarse_cell_halfdiam = pnorm(cell, problem.ground_p);
    auto add = [&](const SupportPoint& s) {
        double v = sign * problem.objective.h(x, s);
        if (!std::isfinite(v))
            throw ValidationError("robust: objective non-finite on the outcome grid");
        cs.append(s, v, atoms, problem.ground_p);
    };
    for (const auto& s : box_grid(problem.outcome_box, problem.outcome_grid_resolution)) add(s);
    for (const auto& a : atoms) add(a);
    return cs;
}

/// Local refinement around candidate j0: a finer sub-grid on the surrounding
/// coarse cell.
inline void refine_around(CandidateSet& cs, const RobustProblem& problem, const Vector& x,
                          const std::vector<SupportPoint>& atoms, std::size_t j0) {
    const double sign = objective_sign(problem.objective.direction);
    const SupportPoint& c = cs.points[j0];
    Box local(c, c);
    for (std::size_t i = 0; i < c.size(); ++i) {
        double half = (problem.outcome_box.hi[i] - problem.outcome_box.lo[i]) /
                      std::max(1, problem.outcome_grid_resolution - 1);
        local.lo[i] = std::max(problem.outcome_box.lo[i], c[i] - half);
        local.hi[i] = std::min(problem.outcome_box.hi[i], c[i] + half);
    }
    for (const auto& s : box_grid(local, 9)) {
        double v = sign * problem.objective.h(x, s);
        if (!std::isfinite(v))
            throw ValidationError("robust: objective non-finite on the outcome grid");
        cs.append(s, v, atoms, problem.ground_p);
    }
}

/// Concave-envelope greedy solution of the grid-restricted adversary:
/// start all mass at the atoms, move it along the steepest gain-per-cost
/// segments until the transport budget is spent. Returns atom positions as
/// (candidate index, mass) pairs plus the attained objective.
struct EnvelopePrimal {
    std::vector<std::pair<std::size_t, double>> placement;
    double value = 0.0;
};

inline EnvelopePrimal envelope_primal(const CandidateSet& cs, const Vector& f,
                                      const std::vector<std::size_t>& atom_candidate,
                                      double budget) {
    struct Segment {
        std::size_t atom;
        std::size_t from, to; // candidate indices
        double slope;
    };
    const std::size_t na = f.size();
    std::vector<std::vector<std::pair<std::size_t, double>>> envelope(na); // (cand, cost)
    std::vector<Segment> segments;
    for (std::size_t i = 0; i < na; ++i) {
        if (f[i] <= 0.0) continue;
        // upper concave envelope of (cost, gain) over all candidates,
        // anchored at the atom itself (cost 0)
        std::vector<std::pair<double, std::size_t>> pts; // (cost, cand)
        for (std::size_t j = 0; j < cs.points.size(); ++j) pts.emplace_back(cs.dist[i][j], j);
        std::sort(pts.begin(), pts.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return cs.g[a.second] > cs.g[b.second];
        });
        std::vector<std::pair<std::size_t, double>> hull; // (cand, cost), increasing g
        auto slope = [&](const std::pair<std::size_t, double>& a,
                         const std::pair<std::size_t, double>& b) {
            return (cs.g[b.first] - cs.g[a.first]) / std::max(1e-300, b.second - a.second);
        };
        for (const auto& [cost, j] : pts) {
            if (!hull.empty() && cs.g[j] <= cs.g[hull.back().first] + 1e-15) continue;
            std::pair<std::size_t, double> cand{j, cost};
            while (hull.size() >= 2 && slope(hull[hull.size() - 2], cand) >=
                                           slope(hull[hull.size() - 2], hull.back()))
                hull.pop_back();
            while (hull.size() == 1 && hull.back().second >= cost) hull.pop_back();
            if (hull.empty() && cost > 0.0) {
                // anchor at the atom position (cost 0) if it is not dominated
                hull.emplace_back(atom_candidate[i], 0.0);
            }
            hull.push_back(cand);
        }
        if (hull.empty()) hull.emplace_back(atom_candidate[i], 0.0);
        envelope[i] = hull;
        for (std::size_t t = 0; t + 1 < hull.size(); ++t)
            segments.push_back({i, t, t + 1,
                                (cs.g[hull[t + 1].first] - cs.g[hull[t].first]) /
                                    std::max(1e-300, hull[t + 1].second - hull[t].second)});
    }
    std::sort(segments.begin(), segments.end(),
              [](const Segment& a, const Segment& b) { return a.slope > b.slope; });

    std::vector<std::size_t> pos(na, 0); // current envelope node per atom
    std::vector<double> frac(na, 0.0);   // fraction of f_i advanced into next segment
    double left = budget;
    for (const auto& seg : segments) {
        if (seg.slope <= 0.0 || left <= 0.0) break;
        if (pos[seg.atom] != seg.from) continue; // reachable only in order
        const auto& hull = envelope[seg.atom];
        double seg_cost = f[seg.atom] * (hull[seg.to].second - hull[seg.from].second);
        if (seg_cost <= left) {
            left -= seg_cost;
            pos[seg.atom] = seg.to;
            frac[seg.atom] = 0.0;
        } else {
            frac[seg.atom] = left / std::max(1e-300, seg_cost);
            left = 0.0;
            break;
        }
    }
    EnvelopePrimal out;
    for (std::size_t i = 0; i < na; ++i) {
        if (f[i] <= 0.0) continue;
        const auto& hull = envelope[i];
        std::size_t at = pos[i];
        double adv = frac[i];
        if (adv > 0.0 && at + 1 < hull.size()) {
            out.placement.emplace_back(hull[at].first, f[i] * (1.0 - adv));
            out.placement.emplace_back(hull[at + 1].first, f[i] * adv);
        } else {
            out.placement.emplace_back(hull[at].first, f[i]);
        }
    }
    for (const auto& [j, mass] : out.placement) out.value += mass * cs.g[j];
    return out;
}

} // namespace detail

/// Worst-case expectation of h over the ambiguity ball at fixed x, via the
/// one-dimensional dual: inf over lambda >= 0 of
/// sum_i f_i sup_s [g(x,s) - lambda d(s, xi_i)] + lambda r, with each sup
/// searched on the outcome grid and refined once locally. The witness is a
/// feasible measure assembled from the per-atom transport envelope.
inline WorstCaseResult worst_case_expectation(const RobustProblem& problem, const Vector& x) {
    problem.validate();
    const double sign = detail::objective_sign(problem.objective.direction);
    const double cp = problem.objective.lipschitz_cp;

    Vector f_all = nominal_coefficients(problem.scheme, x, problem.grouped);
    std::vector<SupportPoint> atoms;
    Vector f;
    for (std::size_t i = 0; i < f_all.size(); ++i) {
        if (f_all[i] > 0.0) {
            atoms.push_back(problem.grouped.distinct_outcomes[i]);
            f.push_back(f_all[i]);
        }
    }
    if (atoms.empty()) throw ValidationError("robust: empty ambiguity nominal");

    DiscreteMeasure nominal = DiscreteMeasure::make(atoms, f);
    if (problem.radius == 0.0) {
        WorstCaseResult r;
        r.value = expectation(nominal, [&](const SupportPoint& s) { return problem.objective.h(x, s); });
        r.witness = nominal;
        r.lambda = cp;
        r.primal_value = r.value;
        return r;
    }

    detail::CandidateSet cs = detail::build_candidates(problem, x, atoms);
    const std::size_t grid_size = cs.points.size() - atoms.size();
    std::vector<std::size_t> atom_candidate(atoms.size());
    for (std::size_t i = 0; i < atoms.size(); ++i) atom_candidate[i] = grid_size + i;

    auto dual_value = [&](double lambda) {
        double total = lambda * problem.radius;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            double best = -kInf;
            const Vector& di = cs.dist[i];
            for (std::size_t j = 0; j < cs.points.size(); ++j)
                best = std::max(best, cs.g[j] - lambda * di[j]);
            total += f[i] * best;
        }
        return total;
    };
    double lambda = detail::golden_min(dual_value, 0.0, 2.0 * cp, 1e-11 * std::max(1.0, cp));

    // one refinement pass around each atom's incumbent argmax, then re-solve
    std::vector<std::size_t> argmax(atoms.size());
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        double best = -kInf;
        for (std::size_t j = 0; j < cs.points.size(); ++j) {
            double v = cs.g[j] - lambda * cs.dist[i][j];
            if (v > best) {
                best = v;
                argmax[i] = j;
            }
        }
    }
    std::size_t before = cs.points.size();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (argmax[i] < grid_size) detail::refine_around(cs, problem, x, atoms, argmax[i]);
        if (cs.points.size() > before + 200'000) break; // refinement size guard
    }
    lambda = detail::golden_min(dual_value, 0.0, 2.0 * cp, 1e-11 * std::max(1.0, cp));

    WorstCaseResult res;
    double dual = dual_value(lambda);
    res.lambda = lambda;
    res.grid_slack = (cp + lambda) * cs.coarse_cell_halfdiam;

    auto primal = detail::envelope_primal(cs, f, atom_candidate, problem.radius);
    std::vector<SupportPoint> watoms;
    Vector wweights;
    for (const auto& [j, mass] : primal.placement) {
        if (mass <= 0.0) continue;
        watoms.push_back(cs.points[j]);
        wweights.push_back(mass);
    }
    res.witness = DiscreteMeasure::make(std::move(watoms), std::move(wweights));
    res.value = sign * dual;
    res.primal_value = sign * primal.value;
    return res;
}

/// Maximal violation of the semi-infinite constraints
/// g(x,s) - nu_i - nu_last d(s, xi_i) <= 0 over the outcome grid and all
/// atoms, where g is the internal minimization orientation of h. nu has
/// length N_xi + 1 with nu_last >= 0.
inline SeparationResult separation_oracle(const RobustProblem& problem, const Vector& x,
                                          const Vector& nu) {
    problem.validate();
    const std::size_t n_xi = problem.grouped.num_outcomes();
    if (nu.size() != n_xi + 1)
        throw ValidationError("separation: nu must have length N_xi + 1");
    if (nu.back() < -1e-12)
        throw ValidationError("separation: nu_last must be nonnegative in the minimization orientation");
    detail::CandidateSet cs =
        detail::build_candidates(problem, x, problem.grouped.distinct_outcomes);
    SeparationResult best;
    best.violation = -kInf;
    for (std::size_t i = 0; i < n_xi; ++i) {
        for (std::size_t j = 0; j < cs.points.size(); ++j) {
            double v = cs.g[j] - nu[i] - nu.back() * cs.dist[i][j];
            if (v > best.violation) {
                best.violation = v;
                best.s_star = cs.points[j];
                best.i_star = static_cast<int>(i);
            }
        }
    }
    return best;
}

namespace detail {

struct Cut {
    SupportPoint s;
    int atom;
    double g_cached = 0.0; // g(x, s) cache is per-x; recomputed by the masters
};

/// Master value at fixed x given the current cuts: exact over nu via the
/// one-dimensional convex minimization in the budget multiplier.
struct FixedXMaster {
    double value = 0.0;
    double nu_last = 0.0;
    Vector nu; // per-atom components
};

inline FixedXMaster master_at_x(const RobustProblem& problem, const Vector& x,
                                const std::vector<Cut>& cuts, const Vector& f) {
    const double sign = objective_sign(problem.objective.direction);
    const double cp = problem.objective.lipschitz_cp;
    const std::size_t n_xi = f.size();
    std::vector<std::vector<std::pair<double, double>>> per_atom(n_xi); // (g, d)
    for (const auto& cut : cuts) {
        double g = sign * problem.objective.h(x, cut.s);
        double d = ground_distance(cut.s, problem.grouped.distinct_outcomes[cut.atom],
                                   problem.ground_p);
        per_atom[cut.atom].emplace_back(g, d);
    }
    auto value_at = [&](double nl) {
        double total = nl * problem.radius;
        for (std::size_t i = 0; i < n_xi; ++i) {
            if (f[i] <= 0.0) continue;
            double best = -kInf;
            for (const auto& [g, d] : per_atom[i]) best = std::max(best, g - nl * d);
            total += f[i] * best;
        }
        return total;
    };
    FixedXMaster out;
    out.nu_last = golden_min(value_at, 0.0, 2.0 * cp, 1e-12 * std::max(1.0, cp));
    out.value = value_at(out.nu_last);
    out.nu.assign(n_xi, 0.0);
    for (std::size_t i = 0; i < n_xi; ++i) {
        double best = -kInf;
        for (const auto& [g, d] : per_atom[i]) best = std::max(best, g - out.nu_last * d);
        if (per_atom[i].empty()) best = 0.0;
        out.nu[i] = best;
    }
    return out;
}

/// Exact region master for objectives affine in x: a finite LP over
/// (x, nu, nu_last) with the cuts as rows and the Voronoi cell plus box as
/// the x-domain. Returns nullopt for an empty cell.
inline std::optional<std::pair<Vector, FixedXMaster>> lp_region_master(
    const RobustProblem& problem, const std::vector<Halfspace>& cell,
    const std::vector<Cut>& cuts, const Vector& f) {
    const double sign = objective_sign(problem.objective.direction);
    const std::size_t d = problem.feasible_box.dim();
    const std::size_t n_xi = f.size();
    LinearProgram lp;
    std::vector<int> xv(d);
    for (std::size_t t = 0; t < d; ++t)
        xv[t] = lp.add_variable(problem.feasible_box.lo[t], problem.feasible_box.hi[t], 0.0);
    std::vector<int> nv(n_xi, -1);
    for (std::size_t i = 0; i < n_xi; ++i)
        if (f[i] > 0.0) nv[i] = lp.add_variable(-kInf, kInf, f[i]);
    int nl = lp.add_variable(0.0, kInf, problem.radius);
    for (const auto& h : cell) {
        std::vector<std::pair<int, double>> terms;
        for (std::size_t t = 0; t < d; ++t)
            if (h.a[t] != 0.0) terms.emplace_back(xv[t], h.a[t]);
        lp.add_constraint(std::move(terms), '<', h.b);
    }
    for (const auto& cut : cuts) {
        if (nv[cut.atom] < 0) continue; // vacuous constraint when f_i = 0
        auto [a, b] = problem.objective.affine_in_x(cut.s);
        double dist = ground_distance(cut.s, problem.grouped.distinct_outcomes[cut.atom],
                                      problem.ground_p);
        // nu_i + dist * nu_last - sign * a'x >= sign * b
        std::vector<std::pair<int, double>> terms{{nv[cut.atom], 1.0}, {nl, dist}};
        for (std::size_t t = 0; t < d; ++t)
            if (a[t] != 0.0) terms.emplace_back(xv[t], -sign * a[t]);
        lp.add_constraint(std::move(terms), '>', sign * b);
    }
    LpResult r = lp.minimize();
    if (r.status == LpStatus::Infeasible) return std::nullopt;
    if (r.status == LpStatus::Unbounded)
        throw SolverError("cutting surface: unbounded master (radius or data invalid)");
    if (r.status != LpStatus::Optimal)
        throw SolverError("cutting surface: master LP did not converge");
    Vector x(d);
    for (std::size_t t = 0; t < d; ++t) x[t] = r.x[xv[t]];
    FixedXMaster m;
    m.value = r.objective;
    m.nu_last = r.x[nl];
    m.nu.assign(n_xi, 0.0);
    for (std::size_t i = 0; i < n_xi; ++i)
        if (nv[i] >= 0) m.nu[i] = r.x[nv[i]];
    return std::make_pair(std::move(x), std::move(m));
}

/// Derivative-free descent of F over {x in box : member(x)} from x0:
/// compass plus diagonal directions with shrinking steps.
inline std::pair<Vector, double> pattern_search(
    const std::function<double(const Vector&)>& F,
    const std::function<bool(const Vector&)>& member, const Box& box, Vector x0) {
    const std::size_t d = box.dim();
    std::vector<Vector> dirs;
    if (d <= 4) {
        std::size_t total = 1;
        for (std::size_t i = 0; i < d; ++i) total *= 3;
        for (std::size_t code = 0; code < total; ++code) {
            Vector dir(d, 0.0);
            std::size_t rest = code;
            bool zero = true;
            for (std::size_t i = 0; i < d; ++i) {
                int c = static_cast<int>(rest % 3) - 1;
                rest /= 3;
                dir[i] = c;
                if (c != 0) zero = false;
            }
            if (!zero) dirs.push_back(dir);
        }
    } else {
        for (std::size_t i = 0; i < d; ++i) {
            Vector dir(d, 0.0);
            dir[i] = 1.0;
            dirs.push_back(dir);
            dir[i] = -1.0;
            dirs.push_back(dir);
        }
    }
    double step = 0.0;
    for (std::size_t i = 0; i < d; ++i) step = std::max(step, (box.hi[i] - box.lo[i]) / 4.0);
    Vector x = std::move(x0);
    double fx = F(x);
    while (step > 1e-7) {
        bool improved = false;
        for (const auto& dir : dirs) {
            Vector y(d);
            for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + step * dir[i];
            y = box.clip(y);
            if (!member(y)) continue;
            double fy = F(y);
            if (fy < fx - 1e-13) {
                x = std::move(y);
                fx = fy;
                improved = true;
                break;
            }
        }
        if (!improved) step *= 0.5;
    }
    return {x, fx};
}

} // namespace detail

/// Cutting-surface solution of the full robust problem: a finite-cut master
/// over (x, nu) alternating with the grid separation oracle. Nearest-neighbor
/// schemes enumerate the one-hot weight regions (exact LP masters when the
/// objective is affine in x); other schemes use multi-start local search over
/// the decision box with the nu-subproblem solved exactly at each x.
inline SolveResult cutting_surface_solve(const RobustProblem& problem) {
    problem.validate();
    const double sign = detail::objective_sign(problem.objective.direction);
    const std::size_t n_xi = problem.grouped.num_outcomes();
    const bool nn = problem.scheme.kind == WeightKind::NearestNeighbor;
    const bool lp_masters =
        nn && problem.objective.affine_in_x && problem.scheme.decision_metric == 2.0;

    std::vector<detail::Cut> cuts;
    for (std::size_t i = 0; i < n_xi; ++i)
        cuts.push_back({problem.grouped.distinct_outcomes[i], static_cast<int>(i), 0.0});

    std::vector<VoronoiCell> cells;
    if (lp_masters)
        cells = voronoi_cells(problem.grouped.distinct_decisions, problem.feasible_box);

    // one-hot coefficient vectors per region (nearest-neighbor only)
    std::vector<Vector> region_f;
    if (nn) {
        for (std::size_t j = 0; j < problem.grouped.num_groups(); ++j) {
            Vector f(n_xi, 0.0);
            for (const auto& [oi, share] : problem.grouped.group_coeffs[j]) f[oi] = share;
            region_f.push_back(std::move(f));
        }
    }

    SolveResult out;
    for (int iter = 0; iter < problem.max_iterations; ++iter) {
        double best_val = kInf;
        Vector best_x;
        detail::FixedXMaster best_master;
        int best_region = -1; // nearest-neighbor paths: which one-hot f won
        if (lp_masters) {
            for (std::size_t j = 0; j < cells.size(); ++j) {
                auto sol = detail::lp_region_master(problem, cells[j].halfspaces, cuts,
                                                    region_f[j]);
                if (!sol) continue;
                if (sol->second.value < best_val) {
                    best_val = sol->second.value;
                    best_x = sol->first;
                    best_master = sol->second;
                    best_region = static_cast<int>(j);
                }
            }
            if (!std::isfinite(best_val))
                throw SolverError("cutting surface: all decision regions empty");
        } else if (nn) {
            for (std::size_t j = 0; j < problem.grouped.num_groups(); ++j) {
                auto F = [&](const Vector& x) {
                    return detail::master_at_x(problem, x, cuts, region_f[j]).value;
                };
                auto member = [&](const Vector& x) {
                    return nearest_group(problem.scheme, x, problem.grouped) ==
                           static_cast<int>(j);
                };
                std::vector<Vector> seeds{problem.grouped.distinct_decisions[j]};
                Rng rng(mix_seed(0xddu, j));
                for (int t = 0; t < 8; ++t) {
                    Vector c = rng.uniform_point(problem.feasible_box);
                    if (member(c)) seeds.push_back(std::move(c));
                }
                for (auto& seed : seeds) {
                    auto [x, val] = detail::pattern_search(F, member, problem.feasible_box,
                                                           std::move(seed));
                    if (val < best_val) {
                        best_val = val;
                        best_x = std::move(x);
                        best_master = detail::master_at_x(problem, best_x, cuts, region_f[j]);
                        best_region = static_cast<int>(j);
                    }
                }
            }
        } else {
            auto F = [&](const Vector& x) {
                Vector f = nominal_coefficients(problem.scheme, x, problem.grouped);
                return detail::master_at_x(problem, x, cuts, f).value;
            };
            auto member = [](const Vector&) { return true; };
            std::vector<Vector> seeds = problem.grouped.distinct_decisions;
            seeds.push_back(problem.feasible_box.center());
            Rng rng(mix_seed(0xdd0u));
            for (int t = 0; t < 8; ++t) seeds.push_back(rng.uniform_point(problem.feasible_box));
            for (auto& seed : seeds) {
                auto [x, val] =
                    detail::pattern_search(F, member, problem.feasible_box, std::move(seed));
                if (val < best_val) {
                    best_val = val;
                    best_x = std::move(x);
                    Vector f = nominal_coefficients(problem.scheme, best_x, problem.grouped);
                    best_master = detail::master_at_x(problem, best_x, cuts, f);
                }
            }
        }

        out.master_values.push_back(best_val);
        out.iterations = iter + 1;

        // separation at the master solution against the coefficient vector the
        // master actually optimized (on a cell boundary the nearest-neighbor
        // recomputation could pick the other side); vacuous atoms (f_i = 0)
        // get a feasible nu so the oracle only reports meaningful violations
        Vector f = best_region >= 0 ? region_f[best_region]
                                    : nominal_coefficients(problem.scheme, best_x,
                                                           problem.grouped);
        Vector nu(n_xi + 1, 0.0);
        nu.back() = std::max(0.0, best_master.nu_last);
        detail::CandidateSet cs =
            detail::build_candidates(problem, best_x, problem.grouped.distinct_outcomes);
        double g_max = -kInf;
        for (double g : cs.g) g_max = std::max(g_max, g);
        for (std::size_t i = 0; i < n_xi; ++i) nu[i] = (f[i] > 0.0) ? best_master.nu[i] : g_max;

        double worst = -kInf;
        std::vector<std::pair<std::size_t, std::size_t>> new_cuts; // (atom, candidate)
        for (std::size_t i = 0; i < n_xi; ++i) {
            double vi = -kInf;
            std::size_t ji = 0;
            for (std::size_t j = 0; j < cs.points.size(); ++j) {
                double v = cs.g[j] - nu[i] - nu.back() * cs.dist[i][j];
                if (v > vi) {
                    vi = v;
                    ji = j;
                }
            }
            worst = std::max(worst, vi);
            if (vi > problem.feas_tol) new_cuts.emplace_back(i, ji);
        }
        out.max_violation = worst;
        out.grid_slack = (problem.objective.lipschitz_cp + nu.back()) * cs.coarse_cell_halfdiam;

        if (worst <= problem.feas_tol) {
            out.x_hat = best_x;
            out.value_hat = sign * best_val;
            out.dual_vars = nu;
            return out;
        }
        for (const auto& [i, j] : new_cuts)
            cuts.push_back({cs.points[j], static_cast<int>(i), 0.0});
    }
    throw SolverError("cutting surface: iteration cap reached without convergence");
}

} // namespace ddro
