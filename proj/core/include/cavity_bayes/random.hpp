#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <utility>

namespace cavity_bayes {

/// Philox4x32-10 block function (Salmon et al., SC'11). Counter-based: the
/// n-th block of a stream is a pure function of (key, counter).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      ctr = single_round(ctr, key);
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static constexpr Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Stable per-stage seed: the same (seed, label) always yields the same value.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return splitmix64(seed ^ splitmix64(h));
}

/// Independent stream `stream_id` under `seed`. Draws are reproducible and do
/// not depend on which thread consumes the stream.
class RandomStream {
 public:
  constexpr RandomStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_{static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)} {}

  /// Four raw 32-bit words; advances the block counter by one.
  constexpr Philox4x32::Counter next_block() {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                  stream_[0], stream_[1]};
    ++block_;
    return Philox4x32::block(ctr, key_);
  }

  /// Two independent standard normals from one block (Box-Muller).
  std::pair<double, double> next_gaussian_pair() {
    const auto w = next_block();
    const double u1 = to_open_unit(w[0], w[1]);
    const double u2 = to_open_unit(w[2], w[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  /// Uniform on (0, 1). Consumes a whole block; the second half is discarded
  /// so the counter position stays a simple function of the draw count.
  double next_uniform() {
    const auto w = next_block();
    return to_open_unit(w[0], w[1]);
  }

  double next_gaussian() { return next_gaussian_pair().first; }

  [[nodiscard]] constexpr std::uint64_t position() const { return block_; }

 private:
  static constexpr double to_open_unit(std::uint32_t lo, std::uint32_t hi) {
    const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  Philox4x32::Key key_;
  std::array<std::uint32_t, 2> stream_;
  std::uint64_t block_ = 0;
};

}  // namespace cavity_bayes
