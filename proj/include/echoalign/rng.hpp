#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace echoalign {

/// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// 64-bit FNV-1a, used to turn purpose tags into stream keys.
constexpr std::uint64_t tag_hash(std::string_view tag) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Counter-based random stream.
///
/// A stream is identified by (seed, purpose, index); draw k is
/// mix64(key + (k + 1) * golden_gamma), i.e. SplitMix64 addressed by counter.
/// Every per-instance computation opens its own stream with index = instance
/// id, so results do not depend on processing order or thread count.
///
/// Purpose tags in use:
///   "world.prototype"     index = placement attempt
///   "world.sample"        index = instance id (split 0 = train, 1 = test via salt)
///   "noise.symmetric"     index = instance id
///   "noise.pairflip"      index = instance id
///   "noise.idn"           index = instance id
///   "noise.idn.projection" index = 0
///   "modify"              index = instance id
///   "linear.world"        index = row (train 0..n-1, held-out n..2n-1)
///   "bootstrap"           index = resample
///   "rademacher"          index = draw
///   "train.shuffle"       index = epoch
class Stream {
 public:
  Stream(std::uint64_t seed, std::string_view purpose, std::uint64_t index = 0) noexcept
      : key_(mix64(seed ^ mix64(tag_hash(purpose) + mix64(index + 0x632BE59BD9B4E019ULL)))) {}

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n) noexcept {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

  /// +1 or -1 with equal probability.
  int sign() noexcept { return (next_u64() >> 63) != 0 ? 1 : -1; }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace echoalign
