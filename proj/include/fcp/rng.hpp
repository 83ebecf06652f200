#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "fcp/tensor.hpp"

namespace fcp {

using Rng = std::mt19937_64;

/// Uniform in [0, 1). Built directly on the raw engine output so streams do
/// not depend on the standard library's distribution internals.
inline double uniform_double(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [lo, hi] inclusive.
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(rng() % span);
}

/// Standard normal via Box-Muller; two engine draws per sample.
inline double normal_double(Rng& rng) {
    double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    double u2 = uniform_double(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline Vector gaussian_vector(Index n, Rng& rng) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = normal_double(rng);
    return v;
}

/// Gaussian direction scaled to unit length.
inline Vector unit_gaussian_vector(Index n, Rng& rng) {
    Vector v = gaussian_vector(n, rng);
    double norm = v.norm();
    while (norm < 1e-12) {  // astronomically unlikely; keep the draw total-order deterministic
        v = gaussian_vector(n, rng);
        norm = v.norm();
    }
    return v / norm;
}

}  // namespace fcp
