#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "rhlab/stats/birkhoff.hpp"
#include "rhlab/stats/lyapunov.hpp"

namespace rhlab {

/// Per-replica Birkhoff averages S_n and Z_n for one horizon n.
struct TailSamples {
  std::size_t n = 0;
  std::vector<double> S;
  std::vector<double> Z;
  std::uint64_t rejections = 0;
};

struct TailRow {
  std::size_t n = 0;
  double prob_S = 0.0;
  double prob_Z = 0.0;
  std::size_t hits_S = 0;
  std::size_t hits_Z = 0;
  std::size_t replicas = 0;
  std::uint64_t rejections = 0;
  bool insufficient_S = false;  // no hit: prob is the 3/replicas upper bound
  bool insufficient_Z = false;
};

struct TailCurve {
  double epsilon = 0.0;
  double delta = 0.0;
  double lambda_hat = 0.0;
  std::vector<TailRow> rows;
  double fitted_rate = 0.0;  // slope of -log prob_S against n
  double fit_r2 = 0.0;
  std::size_t fit_rows = 0;
  double fitted_rate_Z = 0.0;
  double fit_r2_Z = 0.0;
  std::size_t fit_rows_Z = 0;
};

inline std::uint64_t tail_row_seed(std::uint64_t seed, std::size_t n) { return derive_key(seed, 0x7a11, n); }

/// Samples (S_n, Z_n) over replicas whose start avoids B_{e^{-epsilon n}}(C).
inline TailSamples tail_samples(const MapModel& m, double sigma, double epsilon, double delta, std::size_t n,
                                std::size_t replicas, std::uint64_t seed) {
  require(n >= 1 && replicas >= 1, ErrorCode::config, "ldp: n and replicas must be positive");
  TailSamples out;
  out.n = n;
  out.S.assign(replicas, 0.0);
  out.Z.assign(replicas, 0.0);
  std::vector<std::uint32_t> rej(replicas, 0);
  const std::uint64_t row_seed = tail_row_seed(seed, n);
  const double excl = std::exp(-epsilon * static_cast<double>(n));
  const double inv_n = 1.0 / static_cast<double>(n);
  parallel_chunks(replicas, 4096, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t r = lo; r < hi; ++r) {
      UniformStream u(stream_key(row_seed, StreamTag::start, r));
      double x = u();
      while (m.critical_distance(x) <= excl) {
        x = u();
        ++rej[r];
      }
      NoiseStream noise = NoiseStream::replica(sigma, row_seed, r);
      double s = 0.0, z = 0.0;
      double ref = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double a = std::abs(m.deriv(x));
        if (a == 0.0) throw CriticalHit(i, x);
        double v = -std::log(a);
        if (i == 0) ref = v;
        s += v - ref;
        z += truncated_log_term(m.critical_distance(x), delta);
        x = iterate(m, x, noise.at(i));
      }
      out.S[r] = ref + s * inv_n;
      out.Z[r] = z * inv_n;
    }
  });
  for (auto v : rej) out.rejections += v;
  return out;
}

inline std::size_t count_at_least(const std::vector<double>& xs, double threshold) {
  return static_cast<std::size_t>(std::count_if(xs.begin(), xs.end(), [&](double v) { return v >= threshold; }));
}

inline TailRow tail_row(const TailSamples& s, double lambda_hat, double epsilon) {
  TailRow row;
  row.n = s.n;
  row.replicas = s.S.size();
  row.rejections = s.rejections;
  row.hits_S = count_at_least(s.S, lambda_hat + epsilon);
  row.hits_Z = count_at_least(s.Z, epsilon);
  const double R = static_cast<double>(row.replicas);
  row.insufficient_S = row.hits_S == 0;
  row.insufficient_Z = row.hits_Z == 0;
  row.prob_S = row.insufficient_S ? 3.0 / R : row.hits_S / R;
  row.prob_Z = row.insufficient_Z ? 3.0 / R : row.hits_Z / R;
  return row;
}

/// Least squares of -log p on n over rows with at least `min_hits` events.
inline LineFit fit_tail_rate(const std::vector<TailRow>& rows, bool use_S, std::size_t min_hits = 10) {
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    std::size_t h = use_S ? r.hits_S : r.hits_Z;
    if (h < min_hits) continue;
    xs.push_back(static_cast<double>(r.n));
    ys.push_back(-std::log(use_S ? r.prob_S : r.prob_Z));
  }
  return fit_line(xs, ys);
}

/// Empirical annealed tails P{S_n >= lambda_hat + eps} and P{Z_n >= eps}.
/// When lambda_hat is not supplied it is estimated first (64 replicas, 10^5 steps).
inline TailCurve ldp_tail(const MapModel& m, double sigma, double epsilon, double delta,
                          std::vector<std::size_t> n_list, std::size_t replicas, std::uint64_t seed,
                          std::optional<double> lambda_hat = std::nullopt) {
  require(epsilon > 0.0, ErrorCode::config, "ldp: epsilon must be positive");
  require(delta > 0.0 && delta < 0.5, ErrorCode::config, "ldp: delta must lie in (0, 1/2)");
  require(!n_list.empty(), ErrorCode::config, "ldp: empty n_list");
  std::sort(n_list.begin(), n_list.end());
  TailCurve tc;
  tc.epsilon = epsilon;
  tc.delta = delta;
  tc.lambda_hat = lambda_hat ? *lambda_hat : estimate_lyapunov(m, sigma, 1000, 100000, 64, seed).lambda_hat;
  for (std::size_t n : n_list) {
    TailSamples s = tail_samples(m, sigma, epsilon, delta, n, replicas, seed);
    tc.rows.push_back(tail_row(s, tc.lambda_hat, epsilon));
  }
  LineFit fs = fit_tail_rate(tc.rows, true);
  tc.fitted_rate = fs.slope;
  tc.fit_r2 = fs.r2;
  tc.fit_rows = fs.n;
  LineFit fz = fit_tail_rate(tc.rows, false);
  tc.fitted_rate_Z = fz.slope;
  tc.fit_r2_Z = fz.r2;
  tc.fit_rows_Z = fz.n;
  return tc;
}

}  // namespace rhlab
