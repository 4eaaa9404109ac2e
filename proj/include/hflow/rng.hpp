#pragma once

#include <cmath>
#include <cstdint>

namespace hflow {

// Deterministic random stream used everywhere randomness is needed (RANSAC
// sampling, window draws, noise synthesis, test fixtures).  splitmix64 is
// small enough to specify exactly, so two builds on different platforms
// produce identical draws.  std::mt19937 + std::*_distribution are avoided
// on purpose: the distributions are implementation-defined.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n).  Modulo bias is below 2^-53 for the small n used
    // here (n is never larger than a pixel count).
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller.  One call consumes two uniforms; the
    // second variate is discarded so the draw count per call is fixed.
    double next_gaussian() {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 0x1.0p-60) u1 = 0x1.0p-60;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

private:
    uint64_t state_;
};

// Stateless mix of two seeds into one, used to derive per-step or per-frame
// substreams from a base seed without correlation between streams.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    SplitMix64 rng(a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2)));
    return rng.next_u64();
}

}  // namespace hflow
