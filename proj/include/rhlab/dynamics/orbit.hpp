#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rhlab/dynamics/model.hpp"
#include "rhlab/dynamics/noise.hpp"

namespace rhlab {

class CriticalHit : public Error {
 public:
  CriticalHit(std::size_t index, double x)
      : Error(ErrorCode::critical_hit, "orbit hit the critical set at step " + std::to_string(index)),
        index_(index),
        x_(x) {}
  std::size_t index() const { return index_; }
  double state() const { return x_; }

 private:
  std::size_t index_;
  double x_;
};

/// x_0..x_n of the random composition together with the derivative ledger.
/// All per-state vectors have n + 1 entries.
struct RandomOrbit {
  MapModel model;
  NoiseStream noise;
  double x0 = 0.0;
  std::vector<double> states;
  std::vector<double> inv_deriv_norms;
  std::vector<double> log_inv_deriv;
  std::vector<double> critical_distances;

  std::size_t length() const { return states.empty() ? 0 : states.size() - 1; }
};

inline RandomOrbit orbit(const MapModel& m, const NoiseStream& noise, double x0, std::size_t n) {
  require(n >= 1, ErrorCode::config, "orbit length must be at least 1");
  RandomOrbit o;
  o.model = m;
  o.noise = noise;
  o.x0 = x0;
  o.states.resize(n + 1);
  o.inv_deriv_norms.resize(n + 1);
  o.log_inv_deriv.resize(n + 1);
  o.critical_distances.resize(n + 1);
  double x = x0;
  for (std::size_t i = 0; i <= n; ++i) {
    double d = m.critical_distance(x);
    if (d == 0.0) throw CriticalHit(i, x);
    double a = std::abs(m.deriv(x));
    o.states[i] = x;
    o.critical_distances[i] = d;
    o.inv_deriv_norms[i] = 1.0 / a;
    o.log_inv_deriv[i] = -std::log(a);
    if (i < n) x = iterate(m, x, noise.at(i));
  }
  return o;
}

/// prod_{i=k}^{n-1} inv_deriv_norms[i], accumulated in log space.
inline double cocycle_product(const RandomOrbit& o, std::size_t k, std::size_t n) {
  require(k < n && n <= o.length(), ErrorCode::config, "cocycle_product needs 0 <= k < n <= length");
  double s = 0.0;
  for (std::size_t i = k; i < n; ++i) s += o.log_inv_deriv[i];
  return std::exp(s);
}

}  // namespace rhlab
