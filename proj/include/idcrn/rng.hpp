#pragma once

#include <cstdint>
#include <random>

namespace idcrn {

// Stateless 64-bit mixer (SplitMix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

// Derives an independent sub-seed for a named stream. Sub-seeds depend only
// on (seed, stream), so concurrent consumers stay deterministic regardless of
// scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Stream identifiers used across the library.
namespace stream {
inline constexpr std::uint64_t kNoiseView1 = 1;
inline constexpr std::uint64_t kNoiseView2 = 2;
inline constexpr std::uint64_t kEncoderInit = 3;
inline constexpr std::uint64_t kKMeansInit = 4;
inline constexpr std::uint64_t kKMeansFinal = 5;
inline constexpr std::uint64_t kReadoutPartition = 6;
inline constexpr std::uint64_t kSbmEdges = 7;
inline constexpr std::uint64_t kSbmFeatures = 8;
inline constexpr std::uint64_t kEpochNoise = 1000;
}  // namespace stream

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}
  Rng(std::uint64_t seed, std::uint64_t stream) : engine_(derive_seed(seed, stream)) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal(double mean, double stddev) { return std::normal_distribution<double>(mean, stddev)(engine_); }
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace idcrn
