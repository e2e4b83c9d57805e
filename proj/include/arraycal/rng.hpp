#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "arraycal/types.hpp"

namespace arraycal {

// Random streams are derived from a master seed and a key (purpose plus any
// number of indices) by hashing, never by advancing a shared generator. Work
// keyed by (subcarrier, trial, ...) therefore sees the same numbers no
// matter which thread runs it or in which order.

enum class StreamPurpose : std::uint64_t {
  kMeasurementNoise = 1,
  kInitialGain = 2,
  kSweepNoise = 3,
  kScenarioTrack = 4,
  kScenarioProfile = 5,
  kScenarioPhases = 6,
  kPowerIteration = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t master, StreamPurpose purpose,
                                 std::initializer_list<std::uint64_t> indices = {}) {
  std::uint64_t h = splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(purpose)));
  for (std::uint64_t index : indices) h = splitmix64(h ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  return h;
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t master, StreamPurpose purpose,
                          std::initializer_list<std::uint64_t> indices = {}) {
  return Engine(stream_seed(master, purpose, indices));
}

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
inline cplx complex_normal(Engine& engine, double variance = 1.0) {
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  const double re = normal(engine);
  const double im = normal(engine);
  return {re, im};
}

}  // namespace arraycal
