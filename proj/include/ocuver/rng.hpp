// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#ifndef OCUVER_RNG_HPP
#define OCUVER_RNG_HPP

#include <cmath>
#include <cstdint>
#include <vector>

namespace ocuver {

/**
 * @brief Deterministic pseudo-random stream (splitmix64 core).
 *
 * Every stochastic component of the toolkit draws from this generator so
 * that a run is a pure function of its seeds on any platform. The standard
 * library distributions are avoided on purpose: their output is
 * implementation-defined.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Bernoulli draw. Always consumes exactly one value from the stream.
    bool chance(double p) {
        return uniform() < p;
    }

    /// Standard normal via Box-Muller (two uniforms per call, no cached state).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(6.283185307179586476925286766559 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Derives an independent stream from this seed and a stream label,
    /// without advancing this generator.
    Rng fork(std::uint64_t label) const {
        Rng mix(state_ ^ (label * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
        return Rng(mix.next_u64());
    }

private:
    std::uint64_t state_;
};

/// Stable 64-bit mix of two seeds, for deriving per-item streams.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a ^ (b * 0x9e3779b97f4a7c15ULL + 0x165667b19e3779f9ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace ocuver

#endif // OCUVER_RNG_HPP
