#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace matef {

/// splitmix64 step; the standard finalizer used to stretch and decorrelate seeds.
std::uint64_t splitmix64_next(std::uint64_t& state);

/// Combines two seeds into one, order-sensitive.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Derives a 64-bit seed from an md5 hex digest (first 16 hex chars).
std::uint64_t seed_from_md5(std::string_view md5_hex);

/// FNV-1a over a sequence of strings, splitmix-finalized. Stable across platforms.
std::uint64_t stable_hash(std::initializer_list<std::string_view> parts);

/// Maps a stable hash to [0,1). Used for per-binary intrinsic coin flips.
double stable_unit(std::initializer_list<std::string_view> parts);

/// Deterministic RNG with platform-independent value derivation.
/// mt19937_64 output is pinned by the standard; all bounded/real draws below
/// avoid std::*_distribution, whose algorithms are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t bounded(std::uint64_t n);

    /// Uniform double in [0, 1) with 53 random bits.
    double unit();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller (both values consumed for determinism).
    double normal();

    /// Poisson draw by inversion; adequate for the small means used here.
    std::uint32_t poisson(double mean);

private:
    std::mt19937_64 engine_;
};

}  // namespace matef
