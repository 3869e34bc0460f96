#pragma once

// Counter-based Philox4x32-10 generator. A stream is addressed by
// (seed, replication, path, lane); the generator is a pure function of that
// address and a block counter, so replications can be produced in any order
// on any number of workers with identical output.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace fbmilt {

namespace detail {

inline void philox_round(std::array<std::uint32_t, 4>& ctr, const std::array<std::uint32_t, 2>& key) {
  constexpr std::uint64_t m0 = 0xD2511F53u;
  constexpr std::uint64_t m1 = 0xCD9E8D57u;
  const std::uint64_t p0 = m0 * ctr[0];
  const std::uint64_t p1 = m1 * ctr[2];
  ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
         static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
}

}  // namespace detail

/// One Philox4x32 block for the given counter and key, 10 rounds.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    detail::philox_round(ctr, key);
  }
  return ctr;
}

struct StreamAddress {
  std::uint64_t seed = 0;
  std::uint32_t replication = 0;
  std::uint16_t path = 0;
  std::uint16_t lane = 0;
};

/// Sequential view of one addressed stream.
class PhiloxStream {
 public:
  explicit PhiloxStream(const StreamAddress& a)
      : key_{static_cast<std::uint32_t>(a.seed), static_cast<std::uint32_t>(a.seed >> 32)},
        hi_{(static_cast<std::uint32_t>(a.path) << 16) | a.lane, a.replication} {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    return (static_cast<std::uint64_t>(next_u32()) << 32) | lo;
  }

  /// Uniform on (0, 1] with 53 random bits.
  double next_uniform() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  /// Standard normal by the Box-Muller transform (exact law, no tail truncation
  /// beyond the 2^-53 resolution of the uniforms).
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(next_uniform()));
    const double a = 2.0 * std::numbers::pi * next_uniform();
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  void refill() {
    buf_ = philox4x32({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32), hi_[0], hi_[1]},
                      key_);
    ++block_;
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> hi_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fbmilt
