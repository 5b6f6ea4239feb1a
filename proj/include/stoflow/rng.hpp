#pragma once

// Counter-based normal variates. Every draw is a pure function of
// (seed, level, index, lane), so Brownian refinement and parallel dispatch
// never depend on generation order.
//
// Philox4x32-10: Salmon, Moraes, Dror, Shaw, "Parallel random numbers: as
// easy as 1, 2, 3", SC11.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace stoflow {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

inline Philox4x32Counter philox4x32_10(Philox4x32Counter ctr, Philox4x32Key key) noexcept {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

namespace detail {

inline Philox4x32Counter philox_block(std::uint64_t seed, std::uint32_t level, std::uint64_t index, std::uint32_t lane) noexcept {
    const Philox4x32Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    const Philox4x32Counter ctr{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), lane, level};
    return philox4x32_10(ctr, key);
}

/// 53-bit uniform in the open interval (0, 1).
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

} // namespace detail

/// A standard normal variate addressed by (seed, level, index, lane)
/// via the Box-Muller transform of one Philox block.
inline double counter_normal(std::uint64_t seed, std::uint32_t level, std::uint64_t index, std::uint32_t lane) noexcept {
    const auto r = detail::philox_block(seed, level, index, lane);
    const double u1 = detail::to_open_unit(r[0], r[1]);
    const double u2 = detail::to_open_unit(r[2], r[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Independent 64-bit seed for stream `index` of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    const auto r = detail::philox_block(master, 0xFFFFFFFFu, index, 0x5EEDu);
    return (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
}

} // namespace stoflow
