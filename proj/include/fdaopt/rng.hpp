#pragma once

// Counter-based deterministic RNG. All randomness in the simulator flows
// through named streams derived from (seed, purpose, round, client), so any
// single stream can be replayed without running the rest of the experiment.
// Distributions are implemented here rather than taken from <random> because
// the standard leaves their algorithms unspecified and runs must be
// bit-reproducible across platforms.

#include <cstdint>
#include <cmath>
#include <string_view>

namespace fdaopt {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // Warm up so small seeds do not produce correlated first draws.
        splitmix64(state_);
        splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1), safe as a log() argument.
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). Modulo bias is ~2^-64 at desk scale.
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller, one value per call (the pair's second half is discarded so
    // draw order stays independent of call sites).
    double normal() {
        double u1 = uniform_open();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Marsaglia-Tsang; alpha < 1 boosted through Gamma(alpha+1) * U^(1/alpha).
    double gamma(double alpha) {
        if (alpha < 1.0) {
            double u = uniform_open();
            return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
        }
        double d = alpha - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform_open();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

private:
    std::uint64_t state_;
};

// Stream key for (seed, purpose, round, client). Purposes are short string
// tags ("batch", "cohort", ...) hashed with FNV-1a.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose,
                                 std::uint64_t round = 0, std::uint64_t client = 0) {
    std::uint64_t s = seed;
    std::uint64_t k = splitmix64(s);
    s ^= fnv1a(purpose);
    k ^= splitmix64(s);
    s ^= 0x9e3779b97f4a7c15ULL * (round + 1);
    k ^= splitmix64(s);
    s ^= 0xc2b2ae3d27d4eb4fULL * (client + 1);
    k ^= splitmix64(s);
    return k;
}

inline Rng derive_rng(std::uint64_t seed, std::string_view purpose,
                      std::uint64_t round = 0, std::uint64_t client = 0) {
    return Rng(derive_seed(seed, purpose, round, client));
}

}  // namespace fdaopt
