#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rhlab/covering/calibration.hpp"
#include "rhlab/covering/events.hpp"
#include "rhlab/dynamics/orbit.hpp"

namespace rhlab {

enum class HTVariant { paper_literal, standard_alves };

inline std::string variant_name(HTVariant v) {
  return v == HTVariant::paper_literal ? "paper_literal" : "standard_alves";
}

inline HTVariant parse_variant(const std::string& s) {
  if (s == "paper_literal") return HTVariant::paper_literal;
  if (s == "standard_alves") return HTVariant::standard_alves;
  fail(ErrorCode::config, "unknown variant '" + s + "'");
}

/// Contraction base and recurrence constants. sigma2 is the primary field so
/// that sigma^2 = 1/2 is exact.
struct HTParams {
  double sigma2 = 0.5;
  double b = 0.45;
  double r = 0.01;
  std::size_t sparsity_N = 2;
  HTVariant variant = HTVariant::paper_literal;

  double sigma() const { return std::sqrt(sigma2); }
  double log_sigma2() const { return std::log(sigma2); }
  double log_sigma() const { return 0.5 * std::log(sigma2); }

  static HTParams from_sigma(double ht_sigma, double b, double r, std::size_t sparsity, HTVariant v) {
    HTParams p;
    p.sigma2 = ht_sigma * ht_sigma;
    p.b = b;
    p.r = r;
    p.sparsity_N = sparsity;
    p.variant = v;
    return p;
  }

  void validate() const {
    require(sigma2 > 0.0 && sigma2 < 1.0, ErrorCode::config, "ht sigma must lie in (0, 1)");
    require(b > 0.0 && b < 0.5, ErrorCode::config, "b must lie in (0, 1/2)");
    require(r > 0.0, ErrorCode::config, "r must be positive");
  }
};

/// log dist_r(x_j, C): the truncated distance is 1 beyond r.
inline double log_dist_r(double d, double r) { return d > r ? 0.0 : std::log(d); }

/// Direct check at one n; O(n).
inline bool is_hyperbolic_time(const RandomOrbit& o, std::size_t n, const HTParams& p) {
  require(n <= o.length(), ErrorCode::config, "is_hyperbolic_time: n beyond orbit length");
  if (n == 0) return false;
  const double ls2 = p.log_sigma2(), ls = p.log_sigma();
  double s = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    s += o.log_inv_deriv[k] - ls2;
    if (s > 0.0) return false;
    std::size_t j = n - k;  // the point f^{n-k} x
    double e = p.variant == HTVariant::paper_literal ? static_cast<double>(j) : static_cast<double>(k);
    if (log_dist_r(o.critical_distances[j], p.r) < p.b * e * ls) return false;
  }
  return true;
}

/// Streaming detector: feed x_0, x_1, ... and learn after each x_n whether n
/// is a hyperbolic time. Used where orbits are generated on the fly.
class HyperbolicScanner {
 public:
  explicit HyperbolicScanner(const HTParams& p) : p_(p), ls2_(p.log_sigma2()), bls_(p.b * p.log_sigma()) {}

  /// Push x_n with its log inverse derivative and critical distance; the
  /// value for n = 0 is always false.
  bool push(double log_inv_deriv, double crit_dist) {
    bool hyp = false;
    if (n_ > 0) {
      A_ += prev_g_ - ls2_;
      bool prod = A_ <= minA_;
      minA_ = std::min(minA_, A_);
      double L = log_dist_r(crit_dist, p_.r);
      double jn = static_cast<double>(n_);
      if (p_.variant == HTVariant::paper_literal) {
        alive_ = alive_ && L >= bls_ * jn;
        hyp = prod && alive_;
      } else {
        minL_ = std::min(minL_, L + bls_ * jn);
        hyp = prod && minL_ >= bls_ * jn;
      }
    }
    prev_g_ = log_inv_deriv;
    ++n_;
    return hyp;
  }

  std::size_t count() const { return n_; }
  /// paper_literal only: no later time can be hyperbolic any more.
  bool dead() const { return p_.variant == HTVariant::paper_literal && !alive_; }

 private:
  HTParams p_;
  double ls2_, bls_;
  std::size_t n_ = 0;
  double A_ = 0.0, minA_ = 0.0, prev_g_ = 0.0;
  bool alive_ = true;
  double minL_ = kInf;
};

inline std::vector<std::size_t> hyperbolic_times(const RandomOrbit& o, const HTParams& p) {
  std::vector<std::size_t> out;
  HyperbolicScanner sc(p);
  for (std::size_t n = 0; n <= o.length(); ++n)
    if (sc.push(o.log_inv_deriv[n], o.critical_distances[n])) out.push_back(n);
  return out;
}

/// Greedy N-sparse subfamily: tau_1 = first, tau_i = first > N + tau_{i-1}.
inline std::vector<std::size_t> sparse_from(const std::vector<std::size_t>& hyp, std::size_t N) {
  std::vector<std::size_t> out;
  for (std::size_t t : hyp)
    if (out.empty() || t > N + out.back()) out.push_back(t);
  return out;
}

inline std::vector<std::size_t> sparse_hyperbolic_times(const RandomOrbit& o, const HTParams& p) {
  return sparse_from(hyperbolic_times(o, p), p.sparsity_N);
}

/// What Young-time detection needs from a reference calibration.
struct CoveringConfig {
  Ball J;
  std::size_t N = 0;
  double iota = 0.0;
  double delta1 = 0.0;
  CoveringSearch search;

  static CoveringConfig from(const ReferenceCalibration& c, const CoveringSearch& s = {}) {
    return CoveringConfig{c.J, c.N, c.iota, c.delta1, s};
  }
};

/// E(B_delta1(x)) on the noise shifted so that its first sample acts on x.
inline std::optional<CoveringEvent> young_covering(const MapModel& m, const NoiseStream& shifted, double x,
                                                   const CoveringConfig& cc) {
  if (cc.N == 0) return std::nullopt;
  return detect_covering(m, shifted, Ball{x, cc.delta1}, cc.J, cc.N, cc.iota, cc.search);
}

struct TimeRecord {
  HTParams params;
  std::size_t length = 0;
  std::vector<std::size_t> hyperbolic_times;
  std::vector<std::size_t> sparse_times;
  std::vector<std::size_t> young_times;
  std::vector<CoveringEvent> young_events;        // parallel to young_times
  std::vector<std::pair<std::size_t, double>> density_profile;  // (n, |Y_n| / n)
};

inline std::vector<std::pair<std::size_t, double>> density_profile(const std::vector<std::size_t>& young,
                                                                   std::size_t length, std::size_t rows = 100) {
  std::vector<std::pair<std::size_t, double>> out;
  if (length == 0) return out;
  std::size_t stride = std::max<std::size_t>(1, length / rows);
  std::size_t c = 0;
  for (std::size_t n = stride; n <= length; n += stride) {
    while (c < young.size() && young[c] <= n) ++c;
    out.emplace_back(n, static_cast<double>(c) / static_cast<double>(n));
  }
  return out;
}

inline TimeRecord young_times(const RandomOrbit& o, const HTParams& p, const CoveringConfig& cc) {
  p.validate();
  TimeRecord rec;
  rec.params = p;
  rec.length = o.length();
  rec.hyperbolic_times = hyperbolic_times(o, p);
  rec.sparse_times = sparse_from(rec.hyperbolic_times, p.sparsity_N);
  for (std::size_t i : rec.sparse_times) {
    auto ev = young_covering(o.model, o.noise.shifted(i), o.states[i], cc);
    if (ev) {
      rec.young_times.push_back(i);
      rec.young_events.push_back(*ev);
    }
  }
  rec.density_profile = density_profile(rec.young_times, rec.length);
  return rec;
}

/// Distortion constant of the hyperbolic-ball estimate, from summing
/// K sigma^j / d over the pullback with d >= min(r, sigma^{b j}) and a factor 2
/// for moving off the orbit point. Zero for maps with constant |f'|.
inline double distortion_constant(const MapModel& m, const HTParams& p) {
  if (m.distortion_coeff == 0.0) return 0.0;
  const double s = p.sigma(), sb = std::pow(s, 1.0 - p.b);
  double sum = s / ((1.0 - s) * (m.has_critical() ? p.r : 1.0));
  if (m.has_critical()) sum += sb / (1.0 - sb);
  return 2.0 * m.distortion_coeff * sum;
}

/// A radius below which that estimate and the contraction sigma^k both hold:
/// distortion e^{2 C delta} must stay below 1/sigma, and the pulled-back balls
/// must keep half their distance to C.
inline double hyperbolic_radius(const MapModel& m, const HTParams& p) {
  double d = 0.25;
  if (m.has_critical()) d = std::min(d, 0.5 * p.r);
  double C = distortion_constant(m, p);
  if (C > 0.0) d = std::min(d, -p.log_sigma() / (2.0 * C));
  return d;
}

}  // namespace rhlab
