#pragma once

#include "ddro/interpolation.hpp"

namespace ddro {

/// Inputs of the ambiguity-radius formula. c2 (Lipschitz constant of the
/// true decision-to-distribution map) and the concentration constants c3, c4
/// are not identifiable from data; the defaults are conventions and are
/// echoed into every report.
struct RadiusParams {
    double beta = 0.1;
    double c1 = 0.0;
    double c2 = 1.0;
    double c3 = 1.0;
    double c4 = 1.0;
    int k = 1;

    void validate() const {
        if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("radius: beta must be in (0,1)");
        if (!(c1 >= 0.0) || !(c2 >= 0.0)) throw ValidationError("radius: c1, c2 must be >= 0");
        if (!(c3 > 0.0) || !(c4 > 0.0)) throw ValidationError("radius: c3, c4 must be > 0");
        if (k < 1) throw ValidationError("radius: outcome dimension k must be >= 1");
        if (!std::isfinite(beta + c1 + c2 + c3 + c4))
            throw ValidationError("radius: parameters must be finite");
    }
};

/// Wasserstein ball around the nominal distribution at one decision.
struct AmbiguitySet {
    DiscreteMeasure nominal;
    double radius = 0.0;
    double ground_p = 1.0;
};

enum class CoveringMethod { Exact1d, Grid };

struct CoveringRadius {
    double value = 0.0;
    /// Grid method only: the true value lies within [value, value + slack].
    double slack = 0.0;
};

/// Largest distance from a feasible decision to its nearest observed
/// decision. Exact in one dimension (endpoints and midpoints of the sorted
/// decisions); grid search otherwise, with the one-cell-diameter error bound
/// reported.
inline CoveringRadius covering_radius(const Box& feasible_box, double decision_metric,
                                      const std::vector<Vector>& decisions,
                                      CoveringMethod method, int grid_resolution = 64) {
    if (decisions.empty()) throw ValidationError("covering_radius: empty decision list");
    const std::size_t d = feasible_box.dim();
    for (const auto& x : decisions) {
        if (x.size() != d) throw ValidationError("covering_radius: decision dimension mismatch");
        if (!feasible_box.contains(x))
            throw ValidationError("covering_radius: decision outside feasible box");
    }
    if (method == CoveringMethod::Exact1d) {
        if (d != 1) throw ValidationError("covering_radius: exact-1d requires d = 1");
        Vector pts;
        for (const auto& x : decisions) pts.push_back(x[0]);
        std::sort(pts.begin(), pts.end());
        double r = std::max(pts.front() - feasible_box.lo[0], feasible_box.hi[0] - pts.back());
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
            r = std::max(r, 0.5 * (pts[i + 1] - pts[i]));
        return {r, 0.0};
    }
    if (grid_resolution < 2) throw ValidationError("covering_radius: grid resolution must be >= 2");
    if (d > 4) throw ValidationError("covering_radius: grid method supports d <= 4");
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= static_cast<std::size_t>(grid_resolution);
    Vector cell(d);
    for (std::size_t i = 0; i < d; ++i)
        cell[i] = (feasible_box.hi[i] - feasible_box.lo[i]) / (grid_resolution - 1);
    double r = 0.0;
    Vector x(d);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rest = idx;
        for (std::size_t i = 0; i < d; ++i) {
            x[i] = feasible_box.lo[i] + cell[i] * static_cast<double>(rest % grid_resolution);
            rest /= grid_resolution;
        }
        double nearest = kInf;
        for (const auto& p : decisions)
            nearest = std::min(nearest, pnorm_dist(x, p, decision_metric));
        r = std::max(r, nearest);
    }
    return {r, pnorm(cell, decision_metric)};
}

/// Smallest t > 0 with sum_i exp(-t N_i) < beta/c, by bisection (the sum is
/// strictly decreasing in t). Returns the upper bracket end so the strict
/// inequality holds; returns 0 when t -> 0+ already satisfies it.
inline double sample_term(double beta, double c, const std::vector<int>& group_counts) {
    if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("sample_term: beta must be in (0,1)");
    if (!(c > 0.0)) throw ValidationError("sample_term: c must be > 0");
    if (group_counts.empty()) throw ValidationError("sample_term: empty group counts");
    for (int n : group_counts)
        if (n < 1) throw ValidationError("sample_term: group counts must be >= 1");
    const double target = beta / c;
    if (static_cast<double>(group_counts.size()) <= target) return 0.0;
    auto sum_at = [&](double t) {
        double s = 0.0;
        for (int n : group_counts) s += std::exp(-t * n);
        return s;
    };
    double lo = 0.0, hi = 1.0;
    int expand = 0;
    while (sum_at(hi) >= target) {
        hi *= 2.0;
        if (++expand > 200) throw SolverError("sample_term: bracket expansion failed");
    }
    int iters = 0;
    while (hi - lo > 1e-10) {
        if (++iters > 200) throw SolverError("sample_term: bisection did not converge");
        double mid = 0.5 * (lo + hi);
        (sum_at(mid) < target ? hi : lo) = mid;
    }
    return hi;
}

/// r_N = (c1 + c2) r_D + (b(beta, c3) / c4)^(1/k).
inline double ambiguity_radius(const RadiusParams& params, const GroupedDataset& grouped,
                               double r_D) {
    params.validate();
    if (!(r_D >= 0.0)) throw ValidationError("radius: covering radius must be >= 0");
    double b = sample_term(params.beta, params.c3, grouped.group_counts);
    return (params.c1 + params.c2) * r_D + std::pow(b / params.c4, 1.0 / params.k);
}

/// Ambiguity set at decision x: nominal interpolated distribution plus the
/// given radius.
inline AmbiguitySet build_ambiguity(const WeightScheme& scheme, const GroupedDataset& grouped,
                                    const Vector& x, double radius, double ground_p = 1.0) {
    if (!(radius >= 0.0)) throw ValidationError("build_ambiguity: radius must be >= 0");
    return {nominal_distribution(scheme, x, grouped), radius, ground_p};
}

} // namespace ddro
