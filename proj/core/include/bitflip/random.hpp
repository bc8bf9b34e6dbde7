#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bitflip {

// Stream tags keep the substreams of one replica disjoint.
enum class StreamTag : std::uint64_t {
  kSteps = 1,
  kSnapshot = 2,
  kUpperInit = 3,
  kOccupancy = 4,
  kCoupling = 5,
  kSynthetic = 6,
};

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of replica `index` in stream `tag` under `master`. A pure function, so
/// a replica's draws never depend on scheduling or thread count.
std::uint64_t derive_seed(std::uint64_t master, StreamTag tag, std::uint64_t index) noexcept;

/// Per-replica random stream over std::mt19937_64.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);
  RngStream(std::uint64_t master, StreamTag tag, std::uint64_t index);

  /// Uniform on the open interval (0,1); never returns 0 or 1.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }
  /// Exp(rate).
  double exponential(double rate) { return -std::log(uniform()) / rate; }
  std::uint64_t poisson(double mean);
  std::uint64_t bits() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bitflip
