#pragma once

#include <cmath>
#include <cstdint>

// Stateless counter-based random number generation.  Every draw is a pure
// function of (seed, stream, hi, lo), so any element of any random object can
// be regenerated in isolation, in any order, from any thread, and always
// yields the same bits.

namespace drdam::rng {

// Domain separators.  Distinct streams never share draws.
enum Stream : std::uint64_t {
    kProjection = 1, // Gaussian entries of projection rows
    kRowBias = 2,    // uniform [0, 2pi) shifts of Cos/Exp features
    kRowScale = 3,   // chi-distributed row norms in orthogonal mode
    kPattern = 4,    // binary pattern sampling
    kFlip = 5,       // near-query coordinate selection
    kDataset = 6,    // synthetic dataset generation
    kCell = 7,       // per-experiment-cell seed derivation
    kBaseline = 8,   // fresh queries for the random-guess baseline
    kInstance = 9,   // randomized test instances
};

// splitmix64 finalizer (Steele, Lea & Flood / Vigna).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Hash of a 4-word counter.  Each stage is one splitmix64 step keyed by the
// next counter word.
constexpr std::uint64_t hash4(std::uint64_t seed, std::uint64_t stream, std::uint64_t hi,
                              std::uint64_t lo) noexcept {
    std::uint64_t h = mix64(seed + kGolden);
    h = mix64(h + stream * kGolden);
    h = mix64(h + hi * kGolden);
    h = mix64(h + lo * kGolden);
    return h;
}

// 53-bit mantissa conversions.
constexpr double unit_open(std::uint64_t u) noexcept { // [0, 1)
    return static_cast<double>(u >> 11) * 0x1.0p-53;
}

constexpr double unit_positive(std::uint64_t u) noexcept { // (0, 1]
    return static_cast<double>((u >> 11) + 1) * 0x1.0p-53;
}

inline double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t hi,
                      std::uint64_t lo) noexcept {
    return unit_open(hash4(seed, stream, hi, lo));
}

// Standard normal via Box-Muller.  Draws are paired: coordinates 2q and 2q+1
// come from one (radius, angle) pair, which keeps the cost at one log and one
// sincos per two Gaussians while preserving random access per coordinate.
inline void gaussian_pair(std::uint64_t seed, std::uint64_t stream, std::uint64_t hi,
                          std::uint64_t pair, double& g0, double& g1) noexcept {
    const double u1 = unit_positive(hash4(seed, stream, hi, 2 * pair));
    const double u2 = unit_open(hash4(seed, stream, hi, 2 * pair + 1));
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    g0 = r * std::cos(a);
    g1 = r * std::sin(a);
}

inline double gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t hi,
                       std::uint64_t lo) noexcept {
    double g0, g1;
    gaussian_pair(seed, stream, hi, lo / 2, g0, g1);
    return (lo % 2 == 0) ? g0 : g1;
}

} // namespace drdam::rng
