#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ptsense {

/// SplitMix64 finalizer. This is the stable 64-bit mixer behind every seed
/// derivation in the library, so serial and parallel runs draw identically.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Fold one coordinate into a seed: mix(s, v) = splitmix64(s ^ splitmix64(v)).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value) noexcept {
    return splitmix64(seed ^ splitmix64(value));
}

/// Deterministic random source. Every randomized routine owns one of these,
/// seeded from a caller-supplied 64-bit value; draw order is part of each
/// generator's contract.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal(double stddev = 1.0) { return stddev * normal_(engine_); }

    /// Uniform in [0, 1).
    double uniform() { return uniform_(engine_); }

    /// Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(engine_);
    }

    /// N(0, stddev^2) conditioned on |value| <= bound, by rejection.
    double truncated_normal(double stddev, double bound) {
        for (;;) {
            const double v = normal(stddev);
            if (std::abs(v) <= bound) return v;
        }
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace ptsense
