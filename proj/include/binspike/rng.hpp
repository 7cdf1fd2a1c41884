#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace binspike {

/// splitmix64 finalizer; used to mix seeds and to derive per-stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a master seed and a list of
/// 64-bit tags (grid coordinates, trial numbers, ...). Tags are hashed by
/// value, so re-partitioning a grid does not change any stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t t : tags) h = splitmix64(h ^ splitmix64(t));
    return h;
}

inline std::uint64_t seed_tag(double v) { return std::bit_cast<std::uint64_t>(v); }

/// Seedable generator used everywhere in the library: mt19937_64 behind a
/// small facade. Each simulation owns one instance; reproducibility is
/// guaranteed for a fixed seed within this artifact.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    bool bernoulli(double p) { return uniform() < p; }

    double gaussian(double sigma) {
        if (sigma == 0.0) return 0.0;
        return std::normal_distribution<double>(0.0, sigma)(engine_);
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace binspike
