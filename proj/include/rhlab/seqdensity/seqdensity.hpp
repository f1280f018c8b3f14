#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rhlab/dynamics/noise.hpp"
#include "rhlab/util/error.hpp"
#include "rhlab/util/numeric.hpp"
#include "rhlab/util/parallel.hpp"

namespace rhlab {

/// Strictly increasing positive integers, 1-based: seq[0] is n_1.
using IncreasingSeq = std::vector<std::uint64_t>;

inline void validate_seq(const IncreasingSeq& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    require(s[i] >= 1, ErrorCode::config, "sequence terms must be positive");
    if (i > 0) require(s[i] > s[i - 1], ErrorCode::config, "sequence must be strictly increasing");
  }
}

/// |{i : n_i <= n}|.
inline std::size_t density_count(const IncreasingSeq& s, std::uint64_t n) {
  return static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), n) - s.begin());
}

/// n_k for 1-based k.
inline std::uint64_t term(const IncreasingSeq& s, std::size_t k) { return s[k - 1]; }

struct ImplicationCheck {
  bool premise = false;    // the finite-horizon hypothesis held
  bool conclusion = false;
  std::size_t checked = 0; // conclusion instances tested
  std::optional<std::uint64_t> counterexample;  // first failing n (or k)
  bool holds() const { return !premise || conclusion; }
};

/// Finite form of "limsup n_k/k <= alpha => liminf density >= 1/(3 alpha)".
/// Premise: n_k <= 2 alpha k for k0 < k <= K. Conclusion, for every n with
/// n >= 6 alpha and k0 < floor(n / 2 alpha) <= K:
/// density_count(n) / n >= 1/(3 alpha) - slack.
inline ImplicationCheck gap_to_density(const IncreasingSeq& s, double alpha, double slack = 0.0, std::size_t k0 = 0) {
  validate_seq(s);
  require(alpha > 0.0, ErrorCode::config, "alpha must be positive");
  ImplicationCheck r;
  const std::size_t K = s.size();
  r.premise = true;
  for (std::size_t k = k0 + 1; k <= K; ++k)
    if (static_cast<double>(term(s, k)) > 2.0 * alpha * static_cast<double>(k)) {
      r.premise = false;
      break;
    }
  r.conclusion = true;
  if (K == 0) return r;
  // floor(n / 2 alpha) <= K bounds n by 2 alpha (K + 1)
  const auto n_hi = static_cast<std::uint64_t>(std::ceil(2.0 * alpha * static_cast<double>(K + 1)));
  for (std::uint64_t n = 1; n <= n_hi; ++n) {
    const double nd = static_cast<double>(n);
    const auto J = static_cast<std::size_t>(std::floor(nd / (2.0 * alpha)));
    if (J <= k0 || J > K || nd < 6.0 * alpha) continue;
    ++r.checked;
    if (static_cast<double>(density_count(s, n)) / nd < 1.0 / (3.0 * alpha) - slack) {
      r.conclusion = false;
      r.counterexample = n;
      break;
    }
  }
  return r;
}

inline bool check_gap_to_density(const IncreasingSeq& s, double alpha, double slack = 0.0, std::size_t k0 = 0) {
  return gap_to_density(s, alpha, slack, k0).holds();
}

/// Finite form of "liminf density >= beta => limsup n_k/k <= 3/beta".
/// Premise: density_count(j) >= (beta/2) j for k0 < j <= H. Conclusion, for
/// every k >= 1 with (2/beta) k > k0 and m = floor(2k/beta) + 1 <= H:
/// n_k exists and n_k <= (3/beta) k + slack.
inline ImplicationCheck density_to_gap(const IncreasingSeq& s, double beta, double slack = 0.0, std::size_t k0 = 0,
                                       std::uint64_t horizon = 0) {
  validate_seq(s);
  require(beta > 0.0 && beta <= 1.0, ErrorCode::config, "beta must lie in (0, 1]");
  ImplicationCheck r;
  const std::uint64_t H = horizon ? horizon : (s.empty() ? 0 : s.back());
  r.premise = true;
  for (std::uint64_t j = k0 + 1; j <= H; ++j)
    if (static_cast<double>(density_count(s, j)) < 0.5 * beta * static_cast<double>(j)) {
      r.premise = false;
      break;
    }
  r.conclusion = true;
  for (std::size_t k = 1;; ++k) {
    const double kd = static_cast<double>(k);
    const auto m = static_cast<std::uint64_t>(std::floor(2.0 * kd / beta)) + 1;
    if (m > H) break;
    if (!(2.0 * kd / beta > static_cast<double>(k0))) continue;
    ++r.checked;
    if (k > s.size() || static_cast<double>(term(s, k)) > 3.0 * kd / beta + slack) {
      r.conclusion = false;
      r.counterexample = k;
      break;
    }
  }
  return r;
}

inline bool check_density_to_gap(const IncreasingSeq& s, double beta, double slack = 0.0, std::size_t k0 = 0,
                                 std::uint64_t horizon = 0) {
  return density_to_gap(s, beta, slack, k0, horizon).holds();
}

/// "limsup density > beta => liminf n_k/k < 2/beta" on [tail_from, H]: the
/// witnesses s_r are the s with density_count(s) > beta s, and
/// q_r = floor(beta s_r / 2) + 1. tail_from plays the role of r_0.
struct LimsupReport {
  std::vector<std::uint64_t> s;     // witnesses s_r
  std::vector<std::size_t> q;       // q_r
  double best_ratio = kInf;         // min over r of n_{q_r} / q_r
  bool holds = false;               // some n_k <= (2/beta) k, strictly below for the q_r
};

class NoWitness : public Error {
 public:
  explicit NoWitness(const std::string& what) : Error(ErrorCode::no_witness, what) {}
};

inline LimsupReport limsup_density_witnesses(const IncreasingSeq& s, double beta, std::uint64_t horizon = 0,
                                             std::uint64_t tail_from = 1) {
  validate_seq(s);
  require(beta > 0.0 && beta <= 1.0, ErrorCode::config, "beta must lie in (0, 1]");
  LimsupReport rep;
  const std::uint64_t H = horizon ? horizon : (s.empty() ? 0 : s.back());
  bool all = true;
  for (std::uint64_t x = std::max<std::uint64_t>(1, tail_from); x <= H; ++x) {
    const double xd = static_cast<double>(x);
    if (!(static_cast<double>(density_count(s, x)) > beta * xd)) continue;
    rep.s.push_back(x);
    const auto q = static_cast<std::size_t>(std::floor(0.5 * beta * xd)) + 1;
    rep.q.push_back(q);
    // q <= count(s) because count(s) > beta s > q - 1, so n_q <= s exists
    const double nq = static_cast<double>(term(s, q));
    rep.best_ratio = std::min(rep.best_ratio, nq / static_cast<double>(q));
    all = all && nq <= xd && nq < 2.0 / beta * static_cast<double>(q);
  }
  rep.holds = !rep.s.empty() && all;
  return rep;
}

inline bool check_limsup_density_to_liminf_gap(const IncreasingSeq& s, double beta, std::uint64_t horizon = 0,
                                               std::uint64_t tail_from = 1) {
  auto rep = limsup_density_witnesses(s, beta, horizon, tail_from);
  if (rep.s.empty()) throw NoWitness("no s with density above beta up to the horizon");
  return rep.holds;
}

/// Pareto law P{X > t} = t^-alpha for t >= 1.
struct ParetoConfig {
  double alpha = 1.0;

  double sample(double u) const { return std::pow(1.0 - u, -1.0 / alpha); }  // u in [0, 1)
  /// E[min(X, k)] in closed form.
  double truncated_mean(double k) const {
    if (k <= 1.0) return k;
    if (alpha == 1.0) return 1.0 + std::log(k);
    return 1.0 + (1.0 - std::pow(k, 1.0 - alpha)) / (alpha - 1.0);
  }
  bool infinite_mean() const { return alpha <= 1.0; }
};

struct TruncationRow {
  double k = 0.0;
  double exact = 0.0;     // E[min(X, k)]
  double mean = 0.0;      // grand mean over replicas of the running mean at n
  double std_err = 0.0;
  double z = 0.0;
  double frac_untruncated_above = 0.0;  // replicas whose untruncated mean at n exceeds `exact`
  bool within_3se() const { return std::abs(z) <= 3.0; }
};

struct HeavyTailTable {
  std::size_t n = 0;
  std::size_t replicas = 0;
  std::vector<TruncationRow> rows;
  std::vector<double> untruncated;  // running mean at n per replica
  double frac_above_5 = 0.0;
  double median_untruncated = 0.0;
};

/// Running means of min(X, k) and of X over n iid draws, per replica.
inline HeavyTailTable heavy_tail_divergence(const ParetoConfig& dist, const std::vector<double>& k_list, std::size_t n,
                                            std::size_t replicas, std::uint64_t seed) {
  require(dist.alpha > 0.0, ErrorCode::config, "Pareto tail index must be positive");
  require(n >= 1 && replicas >= 2, ErrorCode::config, "heavy_tail_divergence needs n >= 1 and replicas >= 2");
  for (double k : k_list) require(k >= 1.0, ErrorCode::config, "truncation levels must be >= 1");
  const std::size_t K = k_list.size();
  std::vector<std::vector<double>> trunc(K, std::vector<double>(replicas, 0.0));
  std::vector<double> full(replicas, 0.0);
  parallel_for(replicas, [&](std::size_t r) {
    UniformStream u(stream_key(seed, StreamTag::pareto, r));
    std::vector<double> acc(K, 0.0);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double x = dist.sample(u());
      s += x;
      for (std::size_t q = 0; q < K; ++q) acc[q] += std::min(x, k_list[q]);
    }
    full[r] = s / static_cast<double>(n);
    for (std::size_t q = 0; q < K; ++q) trunc[q][r] = acc[q] / static_cast<double>(n);
  });
  HeavyTailTable t;
  t.n = n;
  t.replicas = replicas;
  t.untruncated = full;
  for (std::size_t q = 0; q < K; ++q) {
    TruncationRow row;
    row.k = k_list[q];
    row.exact = dist.truncated_mean(row.k);
    auto st = mean_se(trunc[q]);
    row.mean = st.mean;
    row.std_err = st.std_err;
    row.z = st.std_err > 0.0 ? (st.mean - row.exact) / st.std_err : (st.mean == row.exact ? 0.0 : kInf);
    std::size_t above = 0;
    for (double v : full) above += v > row.exact;
    row.frac_untruncated_above = static_cast<double>(above) / static_cast<double>(replicas);
    t.rows.push_back(row);
  }
  std::size_t a5 = 0;
  for (double v : full) a5 += v > 5.0;
  t.frac_above_5 = static_cast<double>(a5) / static_cast<double>(replicas);
  std::vector<double> sorted = full;
  std::sort(sorted.begin(), sorted.end());
  t.median_untruncated = sorted[sorted.size() / 2];
  return t;
}

}  // namespace rhlab
