#pragma once

// Counter-based random numbers: Philox4x32-10 (Salmon et al., SC'11).
// A stream is addressed by (seed, realization index, stream id) and a
// 32-bit block counter, so draws never depend on scheduling order.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace superrad {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

inline Philox4x32Counter philox4x32_10(Philox4x32Counter ctr, Philox4x32Key key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

/// Well-known stream ids.
enum class RngStream : std::uint32_t { Geometry = 0, Drive = 1 };

class CounterRng {
public:
  CounterRng(std::uint64_t seed, std::uint64_t index, RngStream stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(static_cast<std::uint32_t>(stream)),
        index_lo_(static_cast<std::uint32_t>(index)),
        index_hi_(static_cast<std::uint32_t>(index >> 32)) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) {
      buffer_ = philox4x32_10({block_++, stream_, index_lo_, index_hi_}, key_);
      pos_ = 0;
    }
    return buffer_[pos_++];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t a = next_u32() >> 5;
    const std::uint64_t b = next_u32() >> 6;
    return static_cast<double>((a << 26) | b) * 0x1.0p-53;
  }

  /// Standard normal by Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

private:
  Philox4x32Key key_;
  std::uint32_t stream_;
  std::uint32_t index_lo_;
  std::uint32_t index_hi_;
  std::uint32_t block_ = 0;
  Philox4x32Counter buffer_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace superrad
