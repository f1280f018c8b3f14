#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rhlab/dynamics/orbit.hpp"
#include "rhlab/util/numeric.hpp"
#include "rhlab/util/parallel.hpp"

namespace rhlab {

struct LyapunovEstimate {
  double lambda_hat = 0.0;
  double std_err = 0.0;
  std::size_t n_steps = 0;
  std::size_t n_replicas = 0;
  std::size_t burn_in = 0;
  bool h2_ok = true;  // lambda_hat < 0
  std::vector<double> per_replica;
};

/// Initial condition of replica r: uniform on the circle, never exactly on C.
inline double replica_start(const MapModel& m, std::uint64_t seed, std::uint64_t r) {
  UniformStream u(stream_key(seed, StreamTag::start, r));
  double x = u();
  while (m.critical_distance(x) == 0.0) x = u();
  return x;
}

/// Runs `steps` noisy iterations starting at stream index `first`.
inline double advance(const MapModel& m, const NoiseStream& noise, double x, std::size_t first, std::size_t steps) {
  for (std::size_t i = 0; i < steps; ++i) x = iterate(m, x, noise.at(first + i));
  return x;
}

inline LyapunovEstimate estimate_lyapunov(const MapModel& m, double sigma, std::size_t burn_in, std::size_t n_steps,
                                          std::size_t n_replicas, std::uint64_t seed) {
  require(n_steps > 0 && n_replicas > 0, ErrorCode::config, "lyapunov: n and replicas must be positive");
  require(sigma > 0.0, ErrorCode::config, "lyapunov: sigma must be positive");
  LyapunovEstimate est;
  est.n_steps = n_steps;
  est.n_replicas = n_replicas;
  est.burn_in = burn_in;
  est.per_replica.assign(n_replicas, 0.0);
  parallel_for(n_replicas, [&](std::size_t r) {
    NoiseStream noise = NoiseStream::replica(sigma, seed, r);
    double x = advance(m, noise, replica_start(m, seed, r), 0, burn_in);
    ShiftedSum s;
    for (std::size_t i = 0; i < n_steps; ++i) {
      double a = std::abs(m.deriv(x));
      if (a == 0.0) throw CriticalHit(burn_in + i, x);
      s.add(-std::log(a));
      x = iterate(m, x, noise.at(burn_in + i));
    }
    est.per_replica[r] = s.mean();
  });
  MeanSe ms = mean_se(est.per_replica);
  est.lambda_hat = ms.mean;
  est.std_err = ms.std_err;
  est.h2_ok = est.lambda_hat < 0.0;
  return est;
}

}  // namespace rhlab
