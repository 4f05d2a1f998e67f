#pragma once

#include "ddro/dataset.hpp"

namespace ddro {

enum class WeightKind { NearestNeighbor, InverseDistance };

/// Interpolation scheme for the decision-dependent nominal distribution.
/// lipschitz_c1 is the scheme's declared Lipschitz constant with respect to
/// the Wasserstein criterion: certified 0 for nearest-neighbor, user-asserted
/// for inverse-distance (it enters radius calibration only).
struct WeightScheme {
    WeightKind kind = WeightKind::NearestNeighbor;
    double shepard_exponent = 2.0; // inverse-distance only
    double lipschitz_c1 = 0.0;
    double decision_metric = 2.0; // norm exponent of d_X

    static WeightScheme nearest_neighbor(double decision_metric = 2.0) {
        return {WeightKind::NearestNeighbor, 2.0, 0.0, decision_metric};
    }

    static WeightScheme inverse_distance(double exponent, double c1,
                                         double decision_metric = 2.0) {
        WeightScheme s{WeightKind::InverseDistance, exponent, c1, decision_metric};
        s.validate();
        return s;
    }

    void validate() const {
        if (kind == WeightKind::NearestNeighbor && lipschitz_c1 != 0.0)
            throw ValidationError("scheme: nearest-neighbor declares lipschitz_c1 = 0");
        if (kind == WeightKind::InverseDistance && !(shepard_exponent >= 1.0))
            throw ValidationError("scheme: shepard_exponent must be >= 1");
        if (!(lipschitz_c1 >= 0.0)) throw ValidationError("scheme: lipschitz_c1 must be >= 0");
        if (!(decision_metric >= 1.0))
            throw ValidationError("scheme: decision_metric must be a norm exponent >= 1");
    }
};

/// Index of the nearest distinct decision; equidistant ties go to the lowest
/// group index for reproducibility.
inline int nearest_group(const WeightScheme& scheme, const Vector& x, const GroupedDataset& g) {
    int best = 0;
    double best_d = kInf;
    for (std::size_t j = 0; j < g.num_groups(); ++j) {
        double d = pnorm_dist(x, g.distinct_decisions[j], scheme.decision_metric);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(j);
        }
    }
    return best;
}

/// Interpolation weights w(x) over groups: nonnegative, sum to one, one-hot
/// at every observed decision.
inline Vector interpolation_weights(const WeightScheme& scheme, const Vector& x,
                                    const GroupedDataset& g) {
    scheme.validate();
    if (g.num_groups() == 0) throw ValidationError("weights: empty grouped dataset");
    Vector w(g.num_groups(), 0.0);
    if (scheme.kind == WeightKind::NearestNeighbor) {
        w[nearest_group(scheme, x, g)] = 1.0;
        return w;
    }
    // Shepard weights d^-gamma / sum, with the exact one-hot limit at nodes
    Vector dist(g.num_groups());
    for (std::size_t j = 0; j < g.num_groups(); ++j) {
        dist[j] = pnorm_dist(x, g.distinct_decisions[j], scheme.decision_metric);
        if (dist[j] == 0.0) {
            w[j] = 1.0;
            return w;
        }
    }
    double total = 0.0;
    for (std::size_t j = 0; j < g.num_groups(); ++j) {
        w[j] = std::pow(dist[j], -scheme.shepard_exponent);
        total += w[j];
    }
    for (double& wi : w) wi /= total;
    return w;
}

/// Coefficients f(x) of the nominal distribution over the distinct outcomes:
/// f_i(x) = sum_j w_j(x) * (share of outcome i in group j).
inline Vector nominal_coefficients(const WeightScheme& scheme, const Vector& x,
                                   const GroupedDataset& g) {
    Vector w = interpolation_weights(scheme, x, g);
    Vector f(g.num_outcomes(), 0.0);
    for (std::size_t j = 0; j < g.num_groups(); ++j) {
        if (w[j] == 0.0) continue;
        for (const auto& [oi, share] : g.group_coeffs[j]) f[oi] += w[j] * share;
    }
    return f;
}

/// The nominal distribution P(x): finitely supported on the distinct
/// outcomes, zero-weight atoms dropped.
inline DiscreteMeasure nominal_distribution(const WeightScheme& scheme, const Vector& x,
                                            const GroupedDataset& g) {
    Vector f = nominal_coefficients(scheme, x, g);
    return DiscreteMeasure::make(g.distinct_outcomes, f);
}

} // namespace ddro
