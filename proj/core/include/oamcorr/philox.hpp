#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace oamcorr {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// A pure function of (counter, key): the same inputs always give the same
/// 128 output bits, independent of call order or thread. Speckle cells are
/// drawn by keying with the master seed and counting over (cell, realization).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

  static constexpr Key key_from_seed(std::uint64_t seed) noexcept {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static constexpr Counter single_round(const Counter& c, const Key& k) noexcept {
    const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

inline constexpr std::size_t kPhiloxBatch = 8;

/// out[w][i] is word w of block i.
using PhiloxBatch = std::array<std::array<std::uint32_t, kPhiloxBatch>, 4>;

using PhiloxLanes = std::array<std::uint32_t, kPhiloxBatch>;

/// Eight blocks at counters (lanes[i], c1, c2, c3). Uses AVX2 when the CPU
/// has it; the bits are the same as philox_batch_portable either way.
void philox_batch(const PhiloxLanes& lanes, std::uint32_t c1, std::uint32_t c2, std::uint32_t c3,
                  const Philox4x32::Key& key, PhiloxBatch& out) noexcept;
void philox_batch_portable(const PhiloxLanes& lanes, std::uint32_t c1, std::uint32_t c2, std::uint32_t c3,
                           const Philox4x32::Key& key, PhiloxBatch& out) noexcept;

/// Maps 32 random bits to a double in (-1, 1), symmetric about zero.
constexpr double signed_unit(std::uint32_t bits) noexcept {
  return (static_cast<double>(static_cast<std::int32_t>(bits)) + 0.5) * 0x1.0p-31;
}

}  // namespace oamcorr
