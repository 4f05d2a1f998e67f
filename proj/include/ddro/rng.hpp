#pragma once

#include <cstdint>
#include <random>

#include "ddro/common.hpp"

namespace ddro {

/// Derive an independent stream seed from a base seed and task indices.
/// splitmix64 finalizer applied to the mixed words.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t z = a * 0x9e3779b97f4a7c15ull + b * 0xbf58476d1ce4e5b9ull + c * 0x94d049bb133111ebull + 0x2545f4914f6cdd1dull;
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
}

/// Seeded random stream. Uniform and normal draws are generated with our own
/// transforms on top of mt19937_64 so that a given seed reproduces the same
/// sequence on any platform (std::normal_distribution is not pinned by the
/// standard).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    int uniform_int(int lo, int hi) { // inclusive range
        return lo + static_cast<int>(uniform() * (hi - lo + 1));
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    Vector uniform_point(const Box& box) {
        Vector x(box.dim());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = uniform(box.lo[i], box.hi[i]);
        return x;
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace ddro
