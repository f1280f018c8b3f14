#pragma once

#include <cmath>
#include <cstddef>

#include "rhlab/dynamics/orbit.hpp"
#include "rhlab/util/numeric.hpp"

namespace rhlab {

/// Average of log inv_deriv_norms over indices k..k+n-1.
inline double birkhoff_S_range(const RandomOrbit& o, std::size_t k, std::size_t n) {
  require(n >= 1 && k + n <= o.length(), ErrorCode::config, "birkhoff_S needs 1 <= n and k + n <= length");
  ShiftedSum s;
  for (std::size_t i = k; i < k + n; ++i) s.add(o.log_inv_deriv[i]);
  return s.mean();
}

inline double birkhoff_S(const RandomOrbit& o, std::size_t n) { return birkhoff_S_range(o, 0, n); }

/// -log of the delta-truncated distance: zero outside B_delta(C).
inline double truncated_log_term(double dist, double delta) { return dist > delta ? 0.0 : -std::log(dist); }

inline double birkhoff_Z(const RandomOrbit& o, double delta, std::size_t n) {
  require(delta > 0.0 && delta < 0.5, ErrorCode::config, "birkhoff_Z needs 0 < delta < 1/2");
  require(n >= 1 && n <= o.length(), ErrorCode::config, "birkhoff_Z needs 1 <= n <= length");
  ShiftedSum s(0.0);
  for (std::size_t i = 0; i < n; ++i) s.add(truncated_log_term(o.critical_distances[i], delta));
  return s.mean();
}

}  // namespace rhlab
