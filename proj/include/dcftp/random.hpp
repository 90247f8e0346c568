#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace dcftp {

/// SplitMix64 finalizer applied to a pair; used to derive independent seeds
/// (per sample index, per process) from a master seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Tags of the independent per-sample streams.
namespace stream_tag {
inline constexpr std::uint64_t walk = 1;
inline constexpr std::uint64_t origin = 2;
inline constexpr std::uint64_t future = 3;
inline constexpr std::uint64_t debug = 4;
}  // namespace stream_tag

/// Seeded random stream. Every random quantity in the library is drawn from a
/// stream owned by the caller; there is no global generator. `child(tag)`
/// derives an independent stream, so lazily consumed sub-streams never depend
/// on the order in which they are used.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  /// Uniform on the open interval (0, 1).
  double uniform() {
    ++draws_;
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential(double rate);

  /// Index drawn with probability proportional to `weights`.
  std::size_t categorical(std::span<const double> weights);

  RandomStream child(std::uint64_t tag) const { return RandomStream(mix_seed(seed_, tag)); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

}  // namespace dcftp
