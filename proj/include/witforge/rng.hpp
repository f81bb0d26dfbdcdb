#pragma once

#include <cstdint>
#include <random>

namespace witforge {

/// Deterministic RNG wrapper. Raw mt19937_64 output is fully specified by
/// the standard; the [0,1) and bounded mappings are hand-rolled so that
/// sequences are reproducible across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [0, n). Requires n > 0.
    std::size_t next_below(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

    /// Uniform in [lo, hi).
    double next_in(double lo, double hi) { return lo + (hi - lo) * next_double(); }

private:
    std::mt19937_64 engine_;
};

/// Stateless mix for deriving independent child seeds from one root seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace witforge
