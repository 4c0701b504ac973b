#pragma once

#include <cstdint>

namespace wbe {

// Deterministic counter-based generator in the splitmix64 family.
// Output k of stream (seed) is mix(seed + (k+1)*gamma); no hidden state
// beyond the counter, so sequences are reproducible across platforms and
// insensitive to call-site reordering of other streams.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : base_(seed), counter_(0) {}

    std::uint64_t next_u64() { return mix(base_ + (++counter_) * gamma_); }

    // Uniform in [0,1) with 53 random mantissa bits.
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo,hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0,n), n > 0. Multiply-shift; bias is below 2^-32
    // for the n used here, far under reproducibility-relevant scales.
    std::uint64_t uniform_index(std::uint64_t n) {
        return std::uint64_t((__uint128_t(next_u64()) * n) >> 64);
    }

    // Child stream for parallel or per-sample work: derived seed depends on
    // (seed, stream index) only, never on this stream's counter position.
    Rng fork(std::uint64_t stream) const {
        return Rng(mix(base_ ^ mix((stream + 1) * gamma_)));
    }

    std::uint64_t seed() const { return base_; }

private:
    static constexpr std::uint64_t gamma_ = 0x9E3779B97F4A7C15ull;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t base_;
    std::uint64_t counter_;
};

} // namespace wbe
