#pragma once

// Counter-based random numbers.
//
// Every draw is a pure function of (seed, stream, index, slot), so results do
// not depend on the order in which draws are consumed or on how work is split
// across threads. The mixing function is SplitMix64; the
// Gaussian transform is Box-Muller using the cosine branch only. Both are
// fixed here and must not change between versions: golden tests pin outputs.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace didinv::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Named random streams keep unrelated consumers of one seed independent.
enum class Stream : std::uint64_t {
    simulate = 1,
    bootstrap = 2,
    critical_value = 3,
    test_data = 4,
};

class CounterRng {
public:
    constexpr CounterRng(std::uint64_t seed, Stream stream) noexcept
        : key_(splitmix64(splitmix64(seed) ^ (static_cast<std::uint64_t>(stream) * 0xD1B54A32D192ED03ULL))) {}

    constexpr std::uint64_t bits(std::uint64_t index, std::uint64_t slot = 0) const noexcept {
        return splitmix64(splitmix64(key_ ^ splitmix64(index)) + slot);
    }

    /// Uniform on [0, 1) with 53 random bits.
    constexpr double uniform(std::uint64_t index, std::uint64_t slot = 0) const noexcept {
        return static_cast<double>(bits(index, slot) >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1].
    constexpr double uniform_open0(std::uint64_t index, std::uint64_t slot = 0) const noexcept {
        return static_cast<double>((bits(index, slot) >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal; consumes slots `slot` and `slot + 1`.
    double normal(std::uint64_t index, std::uint64_t slot = 0) const noexcept {
        const double u1 = uniform_open0(index, slot);
        const double u2 = uniform(index, slot + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n, std::uint64_t index, std::uint64_t slot = 0) const noexcept {
        // 128-bit multiply-shift; bias is below 2^-64 * n.
        const unsigned __int128 prod = static_cast<unsigned __int128>(bits(index, slot)) * n;
        return static_cast<std::uint64_t>(prod >> 64);
    }

private:
    std::uint64_t key_;
};

} // namespace didinv::rng
