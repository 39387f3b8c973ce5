#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace mflq {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

  static Key key_from_seed(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;
};

enum class StreamPurpose : std::uint32_t { initial_state = 0, brownian = 1 };

/// Uniform in (0, 1) from two 32-bit words.
inline double uniform_open(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Standard normals for draw indices 2m and 2m+1 of one stream.
inline std::pair<double, double> normal_pair(std::uint64_t seed, std::uint32_t pair_index, std::uint32_t agent,
                                             std::uint32_t replication, StreamPurpose purpose) {
  const auto out = Philox4x32::block({pair_index, agent, replication, static_cast<std::uint32_t>(purpose)},
                                     Philox4x32::key_from_seed(seed));
  const double u1 = uniform_open(out[0], out[1]);
  const double u2 = uniform_open(out[2], out[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

/// Single draw; even indices take the cosine branch, odd the sine branch.
inline double normal_draw(std::uint64_t seed, std::uint32_t index, std::uint32_t agent, std::uint32_t replication,
                          StreamPurpose purpose) {
  const auto [c, s] = normal_pair(seed, index / 2, agent, replication, purpose);
  return index % 2 == 0 ? c : s;
}

}  // namespace mflq
