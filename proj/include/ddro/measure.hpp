#pragma once

#include <functional>
#include <map>
#include <utility>

#include "ddro/common.hpp"

namespace ddro {

/// A point of the outcome support; coordinates live in the outcome box.
using SupportPoint = Vector;

/// Finitely supported probability measure: distinct atoms plus simplex
/// weights. Immutable after construction and safe to share across threads.
class DiscreteMeasure {
public:
    static constexpr double kWeightTol = 1e-12;

    /// Normalizes, clamps tiny negative weights at zero, merges duplicate
    /// atoms and drops zero-weight atoms.
    static DiscreteMeasure make(std::vector<SupportPoint> atoms, Vector weights) {
        if (atoms.empty()) throw ValidationError("measure: empty atom list");
        if (atoms.size() != weights.size())
            throw ValidationError("measure: atoms and weights length mismatch");
        const std::size_t k = atoms[0].size();
        for (const auto& a : atoms)
            if (a.size() != k) throw ValidationError("measure: atom dimension mismatch");
        for (double& w : weights) {
            if (w < -kWeightTol)
                throw ValidationError("measure: negative weight " + format_double(w));
            if (w < 0.0) w = 0.0;
        }
        // merge duplicates (exact coordinate equality)
        std::map<SupportPoint, double> merged;
        for (std::size_t i = 0; i < atoms.size(); ++i) merged[atoms[i]] += weights[i];
        double total = 0.0;
        for (const auto& [a, w] : merged) total += w;
        if (total <= 0.0) throw ValidationError("measure: weight sum is not positive");
        DiscreteMeasure m;
        for (const auto& [a, w] : merged) {
            if (w <= 0.0) continue;
            m.atoms_.push_back(a);
            m.weights_.push_back(w / total);
        }
        return m;
    }

    static DiscreteMeasure dirac(SupportPoint atom) {
        return make({std::move(atom)}, {1.0});
    }

    /// Empty "unset" measure, for result structs filled in later; every
    /// factory-produced measure has at least one atom.
    DiscreteMeasure() = default;

    const std::vector<SupportPoint>& atoms() const { return atoms_; }
    const Vector& weights() const { return weights_; }
    std::size_t size() const { return atoms_.size(); }
    std::size_t dim() const { return atoms_.empty() ? 0 : atoms_[0].size(); }

private:
    std::vector<SupportPoint> atoms_;
    Vector weights_;
};

/// Ground metric on the outcome space: ||s1 - s2||_p, p >= 1 or infinity.
inline double ground_distance(const SupportPoint& s1, const SupportPoint& s2, double p) {
    return pnorm_dist(s1, s2, p);
}

/// E_P[f] = sum_i w_i f(a_i). Throws if f is non-finite at an atom.
inline double expectation(const DiscreteMeasure& P,
                          const std::function<double(const SupportPoint&)>& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        double v = f(P.atoms()[i]);
        if (!std::isfinite(v))
            throw ValidationError("expectation: non-finite value at atom " + std::to_string(i));
        s += P.weights()[i] * v;
    }
    return s;
}

} // namespace ddro
