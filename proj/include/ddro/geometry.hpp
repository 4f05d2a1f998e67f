#pragma once

#include "ddro/common.hpp"

namespace ddro {

/// Halfspace a'x <= b.
struct Halfspace {
    Vector a;
    double b;
};

/// Polyhedral region of decision space where one observed decision is the
/// (Euclidean) nearest neighbor; nearest-neighbor interpolation coefficients
/// are constant on it.
struct VoronoiCell {
    int site = 0;                     // index of the generating decision
    std::vector<Halfspace> halfspaces; // bisectors only; the box is separate

    bool contains(const Vector& x, double tol = 1e-9) const {
        for (const auto& h : halfspaces)
            if (dot(h.a, x) > h.b + tol) return false;
        return true;
    }
};

/// Voronoi decomposition of the box under the Euclidean metric: cell j is
/// {x : 2 (p_j' - p_j)'x <= |p_j'|^2 - |p_j|^2, for all j' != j}, intersected
/// with the box by the caller. Cells cover the box with disjoint interiors.
inline std::vector<VoronoiCell> voronoi_cells(const std::vector<Vector>& sites, const Box& box) {
    if (sites.empty()) throw ValidationError("voronoi: empty site list");
    for (const auto& p : sites) {
        if (p.size() != box.dim()) throw ValidationError("voronoi: site dimension mismatch");
        if (!box.contains(p)) throw ValidationError("voronoi: site outside box");
    }
    std::vector<VoronoiCell> cells;
    for (std::size_t j = 0; j < sites.size(); ++j) {
        VoronoiCell cell;
        cell.site = static_cast<int>(j);
        for (std::size_t j2 = 0; j2 < sites.size(); ++j2) {
            if (j2 == j) continue;
            Halfspace h;
            h.a.resize(box.dim());
            double rhs = 0.0;
            for (std::size_t t = 0; t < box.dim(); ++t) {
                h.a[t] = 2.0 * (sites[j2][t] - sites[j][t]);
                rhs += sites[j2][t] * sites[j2][t] - sites[j][t] * sites[j][t];
            }
            h.b = rhs;
            cell.halfspaces.push_back(std::move(h));
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

} // namespace ddro
