#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rhlab/hyperbolic/ball.hpp"
#include "rhlab/util/parallel.hpp"

namespace rhlab {

/// M disjoint balls of radius |J|/(4M) centred on the even grid
/// J.lo + (2q + 1)|J|/(2M); consecutive balls are |J|/(2M) apart.
inline std::vector<Ball> split_reference(const Ball& J, std::size_t M) {
  require(M >= 2, ErrorCode::config, "split_reference needs M >= 2");
  require(J.radius > 0.0, ErrorCode::config, "split_reference needs a non-degenerate J");
  const double len = J.diameter(), Md = static_cast<double>(M);
  std::vector<Ball> out;
  out.reserve(M);
  for (std::size_t q = 0; q < M; ++q)
    out.push_back(Ball{J.lo() + (2.0 * static_cast<double>(q) + 1.0) * len / (2.0 * Md), len / (4.0 * Md)});
  return out;
}

/// Renewal times of one ball: m_0 = 0 and m_{k+1} = m_k + (cover time of the
/// ball on the noise shifted by m_k). The cover time of a hop is the ball Young
/// time plus the step at which its covering event reaches J, so at every
/// recorded time the image of a sub-ball of I has just covered J.
struct CoverFamily {
  std::size_t index = 0;
  Ball ball;
  std::size_t horizon = 0;
  std::vector<std::size_t> times;       // m_1 < m_2 < ... <= horizon (m_0 = 0 not stored)
  std::vector<std::size_t> increments;  // m_k - m_{k-1}
  std::vector<std::size_t> young;       // the ball Young time of each hop
  bool truncated = false;               // last hop ran out of horizon

  /// H^n = |{k >= 1 : m_k <= n}|.
  std::size_t count(std::size_t n) const {
    return static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), n) - times.begin());
  }
  bool contains(std::size_t t) const { return std::binary_search(times.begin(), times.end(), t); }
};

inline CoverFamily collect_cover_family(const MapModel& m, const NoiseStream& noise, const Ball& I, const HTParams& p,
                                        const CoveringConfig& cc, std::size_t T, std::size_t index = 0) {
  require(T >= 1, ErrorCode::config, "collect_cover_family needs T >= 1");
  CoverFamily f;
  f.index = index;
  f.ball = I;
  f.horizon = T;
  const std::size_t n_min = ball_n_min(I.diameter(), cc.delta1, p);
  std::size_t t = 0;
  while (t < T) {
    if (T - t < n_min + 1) break;
    try {
      auto bt = ball_young_time(m, noise.shifted(t), I, p, cc, T - t - 1);
      std::size_t inc = *bt.m + bt.event->step;
      if (t + inc > T) break;
      t += inc;
      f.times.push_back(t);
      f.increments.push_back(inc);
      f.young.push_back(*bt.m);
    } catch (const HorizonExceeded&) {
      f.truncated = true;
      break;
    }
  }
  return f;
}

/// Ball-parallel collection over a split of J.
inline std::vector<CoverFamily> collect_families(const MapModel& m, const NoiseStream& noise,
                                                 const std::vector<Ball>& balls, const HTParams& p,
                                                 const CoveringConfig& cc, std::size_t T) {
  std::vector<CoverFamily> out(balls.size());
  parallel_for(balls.size(), [&](std::size_t i) { out[i] = collect_cover_family(m, noise, balls[i], p, cc, T, i); });
  return out;
}

/// Sample lag-1 autocorrelation of a family's increments.
inline double lag1_autocorrelation(const std::vector<std::size_t>& inc) {
  if (inc.size() < 3) return 0.0;
  double mu = 0.0;
  for (auto v : inc) mu += static_cast<double>(v);
  mu /= static_cast<double>(inc.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < inc.size(); ++i) {
    double d = static_cast<double>(inc[i]) - mu;
    den += d * d;
    if (i + 1 < inc.size()) num += d * (static_cast<double>(inc[i + 1]) - mu);
  }
  return den > 0.0 ? num / den : 0.0;
}

struct MChoice {
  std::size_t M = 0;
  double V_M = 0.0;
  double Z_M = 0.0;
  std::vector<std::pair<std::size_t, double>> curve;  // (M, V_M) for M = 2..chosen or cap
};

class NoFeasibleM : public Error {
 public:
  explicit NoFeasibleM(std::vector<std::pair<std::size_t, double>> curve)
      : Error(ErrorCode::no_feasible_m, "no M <= 1024 with M V_M > 1"), curve_(std::move(curve)) {}
  const std::vector<std::pair<std::size_t, double>>& curve() const { return curve_; }

 private:
  std::vector<std::pair<std::size_t, double>> curve_;
};

inline constexpr std::size_t kMaxM = 1024;

/// V_M = 1 / (2 (C_hat + log(M / |J|))); the least M with M V_M > 1 and
/// Z_M = V_M / M - 1 / M^2 > 0. M where the bracket is not positive are skipped.
inline double v_of_m(double C_hat, double J_diameter, std::size_t M) {
  double d = C_hat + std::log(static_cast<double>(M) / J_diameter);
  return d > 0.0 ? 1.0 / (2.0 * d) : kInf;
}

inline MChoice choose_M(double C_hat, double J_diameter, std::size_t cap = kMaxM) {
  require(J_diameter > 0.0 && std::isfinite(C_hat), ErrorCode::config, "choose_M: bad inputs");
  MChoice c;
  for (std::size_t M = 2; M <= cap; ++M) {
    double V = v_of_m(C_hat, J_diameter, M);
    c.curve.emplace_back(M, V);
    if (!std::isfinite(V)) continue;
    const double Md = static_cast<double>(M);
    double Z = V / Md - 1.0 / (Md * Md);
    if (Md * V > 1.0 && Z > 0.0) {
      c.M = M;
      c.V_M = V;
      c.Z_M = Z;
      return c;
    }
  }
  throw NoFeasibleM(std::move(c.curve));
}

/// Sorted common times of two families.
inline std::vector<std::size_t> intersect_times(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::vector<std::size_t> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

class EmptyIntersection : public Error {
 public:
  explicit EmptyIntersection(const std::string& what) : Error(ErrorCode::empty_intersection, what) {}
};

struct PairChoice {
  std::size_t i = 0, j = 0;
  std::vector<std::size_t> times;  // H_i^T and H_j^T in common
  std::size_t T = 0;
  long long bonferroni_bound = 0;  // sum_j |H_j^T| - T
  std::size_t pair_count = 0;      // C(M, 2)
};

/// Pair with the most common times up to T; ties go to the smallest (i, j).
inline PairChoice find_pair(const std::vector<CoverFamily>& fams, std::size_t T) {
  require(fams.size() >= 2, ErrorCode::config, "find_pair needs at least two families");
  std::vector<std::vector<std::size_t>> cut(fams.size());
  long long total = 0;
  for (std::size_t q = 0; q < fams.size(); ++q) {
    const auto& t = fams[q].times;
    cut[q].assign(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(fams[q].count(T)));
    total += static_cast<long long>(cut[q].size());
  }
  PairChoice best;
  best.T = T;
  bool have = false;
  for (std::size_t a = 0; a < fams.size(); ++a)
    for (std::size_t b = a + 1; b < fams.size(); ++b) {
      auto common = intersect_times(cut[a], cut[b]);
      if (!have || common.size() > best.times.size()) {
        best.i = a;
        best.j = b;
        best.times = std::move(common);
        have = true;
      }
    }
  best.pair_count = fams.size() * (fams.size() - 1) / 2;
  best.bonferroni_bound = total - static_cast<long long>(T);
  if (best.bonferroni_bound > 0)
    require(static_cast<double>(best.times.size()) * static_cast<double>(best.pair_count) >=
                static_cast<double>(best.bonferroni_bound),
            ErrorCode::verification_failed, "pair count below the Bonferroni bound");
  if (best.times.empty())
    throw EmptyIntersection("no common cover time up to " + std::to_string(T));
  return best;
}

/// Merge-intersection of the two renewal sequences up to T.
inline std::vector<std::size_t> simultaneous_cover_times(const CoverFamily& a, const CoverFamily& b, std::size_t T) {
  auto out = intersect_times(a.times, b.times);
  out.erase(std::upper_bound(out.begin(), out.end(), T), out.end());
  if (out.empty()) throw EmptyIntersection("no common cover time up to " + std::to_string(T));
  return out;
}

inline std::vector<std::size_t> simultaneous_cover_times(const MapModel& m, const NoiseStream& noise, const Ball& Ii,
                                                         const Ball& Ij, const HTParams& p, const CoveringConfig& cc,
                                                         std::size_t T) {
  auto a = collect_cover_family(m, noise, Ii, p, cc, T, 0);
  auto b = collect_cover_family(m, noise, Ij, p, cc, T, 1);
  return simultaneous_cover_times(a, b, T);
}

/// n >= |U_j H_j^n| >= sum_j |H_j^n| - sum_{i<j} |H_i^n n H_j^n| for every
/// n = 1..T, in exact integer arithmetic.
struct BonferroniReport {
  bool ok = true;
  std::size_t checked = 0;
  std::size_t first_failure = 0;
  long long min_upper_slack = 0;  // min over n of n - |union|
  long long min_lower_slack = 0;  // min over n of |union| - (sum - pairs)
};

inline BonferroniReport bonferroni_check(const std::vector<CoverFamily>& fams, std::size_t T) {
  std::vector<long long> mult(T + 1, 0);
  for (const auto& f : fams)
    for (std::size_t t : f.times)
      if (t >= 1 && t <= T) ++mult[t];
  BonferroniReport rep;
  rep.min_upper_slack = rep.min_lower_slack = static_cast<long long>(T) + 1;
  long long uni = 0, sum = 0, pairs = 0;
  for (std::size_t n = 1; n <= T; ++n) {
    long long c = mult[n];
    if (c > 0) ++uni;
    sum += c;
    pairs += c * (c - 1) / 2;
    long long up = static_cast<long long>(n) - uni, lo = uni - (sum - pairs);
    rep.min_upper_slack = std::min(rep.min_upper_slack, up);
    rep.min_lower_slack = std::min(rep.min_lower_slack, lo);
    ++rep.checked;
    if ((up < 0 || lo < 0) && rep.ok) {
      rep.ok = false;
      rep.first_failure = n;
    }
  }
  return rep;
}

}  // namespace rhlab
