#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace ocd {

// Deterministic random source.  Gaussian variates use an explicit polar
// Marsaglia transform rather than std::normal_distribution so that the
// draw sequence is fully pinned down by this file; simulation results
// must reproduce bit-for-bit for a given seed independently of the
// thread count, and per-repetition generators are derived with a
// splitmix64 mix of (seed, repetition index).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
        // splitmix64 finalizer over the pair
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static Rng for_rep(std::uint64_t seed, std::uint64_t rep) { return Rng(mix(seed, rep)); }

    // uniform on [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) {
        // rejection-free enough for simulation purposes: 64-bit modulo bias
        // is far below statistical resolution, but reject anyway to keep the
        // stream well defined for any n.
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v = engine_();
        while (v >= limit) {
            v = engine_();
        }
        return v % n;
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ocd
