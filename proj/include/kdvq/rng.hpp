#pragma once

#include <cmath>
#include <cstdint>

namespace kdvq {

// Counter-based generator: every draw is a pure function of (seed, counter),
// so streams are reproducible across platforms and safe to split by counter
// offset. Finalizer is splitmix64.
struct Rng {
    std::uint64_t seed = 0;
    std::uint64_t ctr = 0;
    bool have_cached = false;
    double cached = 0.0;

    explicit Rng(std::uint64_t s = 0) : seed(s) {}

    std::uint64_t next_u64() {
        std::uint64_t z = seed + ctr * 0x9E3779B97F4A7C15ull;
        ++ctr;
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    // Uniform on (0,1]: never returns 0, safe under log().
    double uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; second deviate is cached.
    double normal() {
        if (have_cached) {
            have_cached = false;
            return cached;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached = r * std::sin(a);
        have_cached = true;
        return r * std::cos(a);
    }
};

} // namespace kdvq
