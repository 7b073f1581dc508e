#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "jit/grid.hpp"

namespace jit {

/// SplitMix64 stream. A (seed, stream) pair names an independent sequence so
/// the initial noise, the selector adjustment and each transition draw never
/// share state. Normals come from Box-Muller on the uniform stream, which
/// keeps the output identical across platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : state_(mix(seed + 0x9E3779B97F4A7C15ULL) ^ mix(stream * 0xD1B54A32D192ED03ULL + 0x2545F4914F6CDD1DULL)) {}

    std::uint64_t next() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound), bound >= 1, without modulo bias.
    std::uint64_t below(std::uint64_t bound) noexcept {
        const std::uint64_t limit = bound * ((~std::uint64_t{0}) / bound);
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % bound;
    }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Stream ids used by the sampler.
namespace streams {
inline constexpr std::uint64_t initial_noise = 1;
inline constexpr std::uint64_t selector = 2;
inline constexpr std::uint64_t shared_transition_noise = 3;
inline constexpr std::uint64_t transition_base = 16; // + stage index k
} // namespace streams

/// Standard-normal grid filled token by token, channel by channel.
template <typename Scalar = float>
TokenGrid<Scalar> gaussian_grid(const GridShape& shape, Rng& rng) {
    TokenGrid<Scalar> g(shape);
    for (Scalar& v : g.data()) v = static_cast<Scalar>(rng.normal());
    return g;
}

} // namespace jit
