#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ddro {

using Vector = std::vector<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Invalid input (bad data, bad configuration, violated precondition).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Internal numerical failure (non-convergence, infeasible master, ...),
/// reported distinctly from invalid input.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// Axis-aligned box [lo_1,hi_1] x ... x [lo_n,hi_n].
struct Box {
    Vector lo;
    Vector hi;

    Box() = default;
    Box(Vector lo_, Vector hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
        if (lo.size() != hi.size()) throw ValidationError("box: lo/hi dimension mismatch");
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (!(lo[i] <= hi[i])) throw ValidationError("box: lo > hi in coordinate " + std::to_string(i));
    }

    /// Cube [a,b]^n.
    static Box cube(std::size_t n, double a, double b) {
        return Box(Vector(n, a), Vector(n, b));
    }

    std::size_t dim() const { return lo.size(); }

    bool contains(const Vector& x, double tol = 1e-9) const {
        if (x.size() != lo.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
        return true;
    }

    Vector clip(Vector x) const {
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = std::min(std::max(x[i], lo[i]), hi[i]);
        return x;
    }

    Vector center() const {
        Vector c(dim());
        for (std::size_t i = 0; i < dim(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
        return c;
    }
};

/// p-norm of a vector, p >= 1 or infinity.
inline double pnorm(const Vector& v, double p) {
    if (!(p >= 1.0)) throw ValidationError("pnorm: exponent must be >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double c : v) m = std::max(m, std::abs(c));
        return m;
    }
    if (p == 1.0) {
        double s = 0.0;
        for (double c : v) s += std::abs(c);
        return s;
    }
    if (p == 2.0) {
        double s = 0.0;
        for (double c : v) s += c * c;
        return std::sqrt(s);
    }
    double s = 0.0;
    for (double c : v) s += std::pow(std::abs(c), p);
    return std::pow(s, 1.0 / p);
}

/// ||a - b||_p with dimension check.
inline double pnorm_dist(const Vector& a, const Vector& b, double p) {
    if (a.size() != b.size()) throw ValidationError("pnorm_dist: dimension mismatch");
    Vector d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return pnorm(d, p);
}

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw ValidationError("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Shortest-roundtrip decimal rendering, locale independent. Used everywhere a
/// number ends up in a report so reruns are byte-identical.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // prefer the shortest representation that round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char cand[64];
        std::snprintf(cand, sizeof(cand), "%.*g", prec, v);
        if (std::strtod(cand, nullptr) == v) return cand;
    }
    return buf;
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace ddro
