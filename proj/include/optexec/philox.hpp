#pragma once
// Counter-based random number generation (Philox 4x32-10).
// Salmon, Moraes, Dror, Shaw, "Parallel random numbers: as easy as 1, 2, 3",
// SC 2011.
//
// Every draw is a pure function of (seed, path, stream, step), so sampled
// values depend neither on evaluation order nor on thread scheduling.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace optexec {

namespace detail {

inline constexpr std::uint32_t kPhiloxMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxBump0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxBump1 = 0xBB67AE85u;

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxBump0;
      key[1] += kPhiloxBump1;
    }
    const std::uint64_t p0 = std::uint64_t{kPhiloxMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kPhiloxMul1} * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
           static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
           static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

}  // namespace detail

/// Noise streams of one simulated path. Distinct labels give independent draws
/// for the same (seed, path, step) triple.
enum class RngStream : std::uint32_t { Volume = 0, Price = 1 };

/// Two uniforms from one Philox block: `u_pos` in (0,1], `u` in [0,1).
struct UniformPair {
  double u_pos;
  double u;
};

inline UniformPair uniform_pair_at(std::uint64_t seed, std::uint64_t path,
                                   std::uint32_t stream, std::uint32_t step) {
  const auto w = detail::philox4x32(
      {step, static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32),
       stream},
      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  const std::uint64_t a = (std::uint64_t{w[0]} << 32) | w[1];
  const std::uint64_t b = (std::uint64_t{w[2]} << 32) | w[3];
  return {static_cast<double>((a >> 11) + 1) * 0x1.0p-53,
          static_cast<double>(b >> 11) * 0x1.0p-53};
}

/// Uniform draw in [0,1) at a counter position.
inline double uniform_at(std::uint64_t seed, std::uint64_t path, std::uint32_t stream,
                         std::uint32_t step) {
  return uniform_pair_at(seed, path, stream, step).u;
}

/// Standard normal draw at a counter position (Box-Muller on one block).
inline double normal_at(std::uint64_t seed, std::uint64_t path, std::uint32_t stream,
                        std::uint32_t step) {
  const auto [u_pos, u] = uniform_pair_at(seed, path, stream, step);
  return std::sqrt(-2.0 * std::log(u_pos)) * std::cos(2.0 * std::numbers::pi * u);
}

inline double normal_at(std::uint64_t seed, std::uint64_t path, RngStream stream,
                        std::uint32_t step) {
  return normal_at(seed, path, static_cast<std::uint32_t>(stream), step);
}

}  // namespace optexec
