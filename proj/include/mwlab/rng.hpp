// Counter-based random numbers (Philox4x32-10).
//
// Every draw is a pure function of (seed, stream, counter), so a path step,
// a Monte Carlo replicate or an iid observation can be regenerated in
// isolation and in any order. Salmon et al., "Parallel random numbers: as
// easy as 1, 2, 3", SC'11.
#pragma once

#include <array>
#include <cstdint>

namespace mwlab {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter block(Counter ctr, Key key) {
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

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// A keyed random stream: seed is the Philox key, stream and counter fill
/// the 128-bit counter block. Each counter yields two independent doubles
/// (lane 0 and lane 1).
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  constexpr std::uint64_t seed() const { return seed_; }
  constexpr std::uint64_t stream() const { return stream_; }

  constexpr Philox4x32::Counter raw(std::int64_t counter) const {
    const auto c = static_cast<std::uint64_t>(counter);
    return Philox4x32::block(
        {static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
         static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
        {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
  }

  /// Uniform on [0, 1) with 53 random bits.
  constexpr double uniform(std::int64_t counter, int lane = 0) const {
    const auto r = raw(counter);
    const std::uint64_t bits = lane == 0 ? (static_cast<std::uint64_t>(r[0]) << 32 | r[1])
                                         : (static_cast<std::uint64_t>(r[2]) << 32 | r[3]);
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace mwlab
