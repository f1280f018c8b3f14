#pragma once

#include <cstdint>
#include <vector>

#include "rhlab/stats/lyapunov.hpp"

namespace rhlab {

struct Histogram {
  std::vector<double> freq;
  std::vector<std::uint64_t> counts;
  std::size_t n_steps = 0;

  std::size_t bins() const { return freq.size(); }
  double bin_lo(std::size_t j) const { return static_cast<double>(j) / bins(); }
  double bin_hi(std::size_t j) const { return static_cast<double>(j + 1) / bins(); }
};

/// Occupation frequencies of one long orbit after burn-in.
inline Histogram stationary_histogram(const MapModel& m, double sigma, std::size_t bins, std::size_t n_steps,
                                      std::uint64_t seed, std::size_t burn_in = 10000) {
  require(bins >= 16, ErrorCode::config, "histogram: need at least 16 bins");
  require(n_steps >= 1, ErrorCode::config, "histogram: need at least one step after burn-in");
  Histogram h;
  h.n_steps = n_steps;
  h.counts.assign(bins, 0);
  NoiseStream noise = NoiseStream::replica(sigma, seed, 0);
  double x = advance(m, noise, replica_start(m, seed, 0), 0, burn_in);
  for (std::size_t i = 0; i < n_steps; ++i) {
    auto j = static_cast<std::size_t>(x * static_cast<double>(bins));
    ++h.counts[std::min(j, bins - 1)];
    x = iterate(m, x, noise.at(burn_in + i));
  }
  h.freq.resize(bins);
  for (std::size_t j = 0; j < bins; ++j) h.freq[j] = static_cast<double>(h.counts[j]) / static_cast<double>(n_steps);
  return h;
}

}  // namespace rhlab
