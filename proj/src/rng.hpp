#pragma once

#include <cmath>
#include <cstdint>

namespace sdc {

// Finalizer from SplitMix64; full-period bijection on 64-bit state.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Combines a seed with an index into an unrelated seed. Used for per-record
// sweep seeds and for domain separation of independent stream families.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed + kGolden * (index + 1));
}

// Deterministic counter-based stream. Identical (root_seed, a, b) triples
// replay the identical draw sequence; state transitions are integer-only.
class RngStream {
public:
    RngStream(std::uint64_t root_seed, std::uint64_t a, std::uint64_t b)
        : state_(mix_seed(mix_seed(root_seed, a), b)) {}

    std::uint64_t next_u64() {
        state_ += kGolden;
        return mix64(state_);
    }

    // Uniform in [0, 1), 53 random bits.
    double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n); n must be >= 1.
    std::uint32_t next_below(std::uint32_t n) {
        return static_cast<std::uint32_t>(next_uniform() * static_cast<double>(n));
    }

    // Standard normal via Box-Muller; consumes two uniforms per call.
    double next_normal() {
        double u1 = next_uniform();
        double u2 = next_uniform();
        double r = std::sqrt(-2.0 * std::log1p(-u1));
        return r * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t state_;
};

// Stream keyed by (seed, pass, layer); the mask source for stochastic passes.
inline RngStream rng_stream(std::uint64_t root_seed, std::uint64_t pass_index, std::uint64_t layer_index) {
    return RngStream(root_seed, pass_index, layer_index);
}

// Domain tags for auxiliary stream families so draws never collide with the
// (seed, pass, layer) mask streams.
enum class StreamTag : std::uint64_t {
    init = 0x11,
    shuffle = 0x22,
    augment = 0x33,
    train_mask = 0x44,
    synth = 0x55,
};

inline std::uint64_t tagged_seed(std::uint64_t seed, StreamTag tag) {
    return mix_seed(seed, static_cast<std::uint64_t>(tag));
}

}  // namespace sdc
