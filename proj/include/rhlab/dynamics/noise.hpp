#pragma once

#include <cstdint>

#include "rhlab/util/hash.hpp"

namespace rhlab {

enum class StreamTag : std::uint64_t {
  noise = 1,
  start = 2,
  witness = 3,
  pair = 4,
  calibration = 5,
  sequence = 6,
  pareto = 7,
};

inline std::uint64_t stream_key(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) {
  return derive_key(seed, static_cast<std::uint64_t>(tag), index);
}

/// Index-addressable iid Uniform[-sigma, sigma) samples. Sample i depends only
/// on (key, offset + i), so shifting the stream is free and exact.
struct NoiseStream {
  double sigma = 0.0;
  std::uint64_t key = 0;
  std::uint64_t offset = 0;

  NoiseStream() = default;
  NoiseStream(double s, std::uint64_t k, std::uint64_t off = 0) : sigma(s), key(k), offset(off) {}

  double at(std::uint64_t i) const { return sigma * (2.0 * counter_uniform(key, offset + i) - 1.0); }
  NoiseStream shifted(std::uint64_t k) const { return NoiseStream(sigma, key, offset + k); }

  /// Stream of replica r under a master seed.
  static NoiseStream replica(double sigma, std::uint64_t seed, std::uint64_t r) {
    return NoiseStream(sigma, stream_key(seed, StreamTag::noise, r));
  }
};

/// Zero noise; handy for deterministic single-map checks.
inline NoiseStream zero_noise() { return NoiseStream(0.0, 0); }

/// Uniform [0, 1) draws for initial conditions, independent of the noise.
struct UniformStream {
  std::uint64_t key = 0;
  std::uint64_t next = 0;
  explicit UniformStream(std::uint64_t k) : key(k) {}
  double operator()() { return counter_uniform(key, next++); }
};

}  // namespace rhlab
