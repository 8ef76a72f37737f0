#include "matef/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace matef {

std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a;
    const std::uint64_t ha = splitmix64_next(s);
    s = b ^ ha;
    return splitmix64_next(s);
}

std::uint64_t seed_from_md5(std::string_view md5_hex) {
    // Whole digest, not a prefix: callers may feed structured test hashes.
    return stable_hash({md5_hex});
}

std::uint64_t stable_hash(std::initializer_list<std::string_view> parts) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV offset basis
    for (const auto& part : parts) {
        for (char c : part) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;  // FNV prime
        }
        h ^= 0x1f;  // part separator
        h *= 0x100000001b3ULL;
    }
    std::uint64_t s = h;
    return splitmix64_next(s);
}

double stable_unit(std::initializer_list<std::string_view> parts) {
    return static_cast<double>(stable_hash(parts) >> 11) * 0x1.0p-53;
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next_u64() { return engine_(); }

std::uint64_t Rng::bounded(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::bounded: n must be > 0");
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double Rng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

double Rng::normal() {
    double u1 = unit();
    while (u1 <= 0.0) u1 = unit();
    const double u2 = unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * M_PI * u2);
}

std::uint32_t Rng::poisson(double mean) {
    if (mean <= 0.0) return 0;
    // Knuth inversion; mean stays small (< ~50) in the simulation model.
    const double limit = std::exp(-mean);
    double p = 1.0;
    std::uint32_t k = 0;
    do {
        ++k;
        p *= unit();
    } while (p > limit);
    return k - 1;
}

}  // namespace matef
