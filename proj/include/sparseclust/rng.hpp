#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (key, counter), so samples are reproducible bit-for-bit and any point of a
// stream can be regenerated without replaying the ones before it.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace sparseclust::rng {

/// Philox4x32-10 block function (Salmon et al., Random123).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

/// SplitMix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                    std::uint64_t c = 0) {
    return mix64(mix64(mix64(seed ^ mix64(a)) ^ b) ^ c);
}

/// Uniform in the open interval (0, 1) from 32 random bits.
inline double to_unit_open(std::uint32_t bits) {
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-32;
}

/// Uniform in (0, 1) with 53 bits of resolution.
inline double to_unit_open(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t m = ((std::uint64_t{hi} << 32) | lo) >> 11;
    return (static_cast<double>(m) + 0.5) * 0x1.0p-53;
}

/// A keyed stream; `block(i, j)` yields four 32-bit words for counter (i, j).
class CounterStream {
public:
    explicit CounterStream(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    std::array<std::uint32_t, 4> block(std::uint64_t i, std::uint64_t j = 0) const {
        return philox4x32({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32),
                           static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(j >> 32)},
                          key_);
    }

    double uniform(std::uint64_t i, std::uint64_t j = 0) const {
        const auto b = block(i, j);
        return to_unit_open(b[0], b[1]);
    }

    /// Two independent standard normals via Box-Muller on one counter block.
    std::array<double, 2> normal_pair(std::uint64_t i, std::uint64_t j = 0) const {
        const auto b = block(i, j);
        const double u1 = to_unit_open(b[0], b[1]);
        const double u2 = to_unit_open(b[2], b[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(theta), r * std::sin(theta)};
    }

private:
    std::array<std::uint32_t, 2> key_;
};

}  // namespace sparseclust::rng
