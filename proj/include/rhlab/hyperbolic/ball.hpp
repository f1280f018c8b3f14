#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "rhlab/hyperbolic/times.hpp"
#include "rhlab/stats/ldp.hpp"
#include "rhlab/stats/lyapunov.hpp"
#include "rhlab/util/parallel.hpp"

namespace rhlab {

inline constexpr int kWitnessGrid = 17;

struct BallStoppingTime {
  Ball I;
  std::optional<std::size_t> m;   // empty: nothing up to the horizon
  std::size_t n_min = 0;
  std::size_t horizon = 0;
  int witness_index = -1;         // 0..16 along the grid
  double witness_x = 0.0;
  std::optional<CoveringEvent> event;
  int critical_skips = 0;         // witnesses whose orbit hit C exactly
};

class HorizonExceeded : public Error {
 public:
  explicit HorizonExceeded(BallStoppingTime partial)
      : Error(ErrorCode::horizon_exceeded,
              "no ball Young time up to horizon " + std::to_string(partial.horizon)),
        partial_(std::move(partial)) {}
  const BallStoppingTime& partial() const { return partial_; }

 private:
  BallStoppingTime partial_;
};

/// ceil(log(2 delta1 / |I|) / log(1/sigma)), clamped at 0. A relative slack of
/// 1e-12 keeps exact ratios (e.g. sigma^2 = 1/2, |I| = 2^-k delta1) from being
/// pushed up by one by rounding.
inline std::size_t ball_n_min(double diameter, double delta1, const HTParams& p) {
  double v = std::log(2.0 * delta1 / diameter) / -p.log_sigma();
  if (!(v > 0.0)) return 0;
  return static_cast<std::size_t>(std::ceil(v * (1.0 - 1e-12)));
}

inline double witness_point(const Ball& I, int q) {
  return wrap01(I.center + I.diameter() * (static_cast<double>(q) / (kWitnessGrid - 1) - 0.5));
}

namespace detail {

// First Young time >= n_min and <= limit of one witness orbit, or nothing.
inline std::optional<std::pair<std::size_t, CoveringEvent>> first_young(const MapModel& m, const NoiseStream& noise,
                                                                        double x, const HTParams& p,
                                                                        const CoveringConfig& cc, std::size_t n_min,
                                                                        std::size_t limit) {
  HyperbolicScanner sc(p);
  std::optional<std::size_t> last;
  for (std::size_t t = 0; t <= limit; ++t) {
    double d = m.critical_distance(x);
    if (d == 0.0) throw CriticalHit(t, x);
    bool hyp = sc.push(-std::log(std::abs(m.deriv(x))), d);
    if (hyp && (!last || t > p.sparsity_N + *last)) {
      last = t;
      if (t >= n_min) {
        auto ev = young_covering(m, noise.shifted(t), x, cc);
        if (ev) return std::make_pair(t, *ev);
      }
    }
    if (sc.dead()) return std::nullopt;
    x = iterate(m, x, noise.at(t));
  }
  return std::nullopt;
}

}  // namespace detail

/// m(omega, I): least admissible Young time over the 17-point witness grid.
/// Witnesses run centre-out and each stops at the best time found so far, so
/// ties keep the more central witness.
inline BallStoppingTime ball_young_time(const MapModel& m, const NoiseStream& noise, const Ball& I, const HTParams& p,
                                        const CoveringConfig& cc, std::size_t horizon) {
  p.validate();
  require(I.radius > 0.0, ErrorCode::config, "ball_young_time: empty ball");
  require(I.diameter() <= 2.0 * cc.delta1 * (1.0 + 1e-12), ErrorCode::config, "ball_young_time needs |I| <= 2 delta1");
  BallStoppingTime bt;
  bt.I = I;
  bt.horizon = horizon;
  bt.n_min = ball_n_min(I.diameter(), cc.delta1, p);
  require(horizon >= bt.n_min, ErrorCode::config, "ball_young_time: horizon below n_min");
  const int mid = kWitnessGrid / 2;
  for (int s = 0; s < kWitnessGrid; ++s) {
    int q = mid + ((s + 1) / 2) * (s % 2 == 1 ? -1 : 1);
    std::size_t limit = bt.m ? *bt.m - 1 : horizon;
    if (bt.m && *bt.m == 0) break;
    double x = witness_point(I, q);
    try {
      auto found = detail::first_young(m, noise, x, p, cc, bt.n_min, limit);
      if (found && (!bt.m || found->first < *bt.m)) {
        bt.m = found->first;
        bt.witness_index = q;
        bt.witness_x = x;
        bt.event = found->second;
      }
    } catch (const CriticalHit&) {
      ++bt.critical_skips;
    }
  }
  if (!bt.m) throw HorizonExceeded(bt);
  return bt;
}

/// P{|Y_m| <= theta1 m} for each m in n_list.
struct YoungTailRow {
  std::size_t m = 0;
  double prob = 0.0;
  std::size_t hits = 0;
  std::size_t replicas = 0;
  bool insufficient = false;  // no hit: prob is the 3/replicas upper bound
};

struct YoungTailTable {
  double theta1 = 0.0;
  std::vector<YoungTailRow> rows;
  double mean_density = 0.0;  // |Y_n| / n at the largest n, averaged
  LineFit fit;                // -log prob against m, rows with >= 10 hits
};

/// Start of replica r: uniform draw pushed through burn_in steps of its own
/// stream, so that starts sample the stationary law.
inline double stationary_start(const MapModel& m, double sigma, std::uint64_t seed, std::uint64_t r, std::size_t burn_in) {
  NoiseStream w(sigma, stream_key(seed, StreamTag::start, r));
  return advance(m, w, replica_start(m, seed, r), 0, burn_in);
}

inline YoungTailTable young_tail_stats(const MapModel& m, double sigma, const HTParams& p, const CoveringConfig& cc,
                                       std::vector<std::size_t> n_list, std::size_t replicas, double theta1,
                                       std::uint64_t seed, std::size_t burn_in = 1000) {
  require(!n_list.empty() && replicas > 0, ErrorCode::config, "young_tail_stats: empty n_list or replicas");
  require(theta1 > 0.0, ErrorCode::config, "theta1 must be positive");
  std::sort(n_list.begin(), n_list.end());
  const std::size_t L = n_list.back();
  std::vector<std::vector<std::size_t>> counts(replicas);
  std::vector<double> dens(replicas, 0.0);
  parallel_for(replicas, [&](std::size_t r) {
    double x0 = stationary_start(m, sigma, seed, r, burn_in);
    auto o = orbit(m, NoiseStream::replica(sigma, seed, r), x0, L);
    auto rec = young_times(o, p, cc);
    counts[r].resize(n_list.size());
    for (std::size_t q = 0; q < n_list.size(); ++q)
      counts[r][q] = static_cast<std::size_t>(
          std::upper_bound(rec.young_times.begin(), rec.young_times.end(), n_list[q]) - rec.young_times.begin());
    dens[r] = static_cast<double>(rec.young_times.size()) / static_cast<double>(L);
  });
  YoungTailTable t;
  t.theta1 = theta1;
  for (double d : dens) t.mean_density += d;
  t.mean_density /= static_cast<double>(replicas);
  std::vector<double> xs, ys;
  for (std::size_t q = 0; q < n_list.size(); ++q) {
    YoungTailRow row;
    row.m = n_list[q];
    row.replicas = replicas;
    for (std::size_t r = 0; r < replicas; ++r)
      if (static_cast<double>(counts[r][q]) <= theta1 * static_cast<double>(row.m)) ++row.hits;
    const double R = static_cast<double>(replicas);
    row.insufficient = row.hits == 0;
    row.prob = row.insufficient ? 3.0 / R : row.hits / R;
    if (row.hits >= 10) {
      xs.push_back(static_cast<double>(row.m));
      ys.push_back(-std::log(row.prob));
    }
    t.rows.push_back(row);
  }
  t.fit = fit_line(xs, ys);
  return t;
}

/// Sample mean of m(omega, I) for |I| = 2^-k delta1.
struct MStatsRow {
  int k = 0;
  double radius = 0.0;
  double m_mean = 0.0;
  double m_std = 0.0;
  std::size_t n_min = 0;
  std::size_t replicas = 0;
  std::size_t censored = 0;  // horizon reached; counted at the horizon
};

struct MStats {
  std::vector<MStatsRow> rows;
  LineFit fit;         // m_mean against log(1/|I|)
  double slope_se = 0.0;
  double C_hat = 0.0;   // least C with m_mean <= C + log(1/|I|) on every row
};

inline MStats m_stats(const MapModel& m, double sigma, const HTParams& p, const CoveringConfig& cc,
                      const std::vector<int>& ks, std::size_t replicas, std::uint64_t seed, std::size_t horizon,
                      std::size_t burn_in = 1000) {
  require(!ks.empty() && replicas >= 2, ErrorCode::config, "m_stats needs k values and at least 2 replicas");
  MStats out;
  std::vector<double> xs, ys;
  for (int k : ks) {
    MStatsRow row;
    row.k = k;
    const double diam = std::ldexp(cc.delta1, -k);
    row.radius = 0.5 * diam;
    row.n_min = ball_n_min(diam, cc.delta1, p);
    row.replicas = replicas;
    std::vector<double> ms(replicas, 0.0);
    std::vector<char> cens(replicas, 0);
    parallel_for(replicas, [&](std::size_t r) {
      Ball I{stationary_start(m, sigma, seed, r, burn_in), row.radius};
      try {
        ms[r] = static_cast<double>(*ball_young_time(m, NoiseStream::replica(sigma, seed, r), I, p, cc, horizon).m);
      } catch (const HorizonExceeded&) {
        ms[r] = static_cast<double>(horizon);
        cens[r] = 1;
      }
    });
    auto st = mean_se(ms);
    row.m_mean = st.mean;
    row.m_std = st.sd;
    row.censored = static_cast<std::size_t>(std::count(cens.begin(), cens.end(), 1));
    out.rows.push_back(row);
    xs.push_back(std::log(1.0 / diam));
    ys.push_back(row.m_mean);
  }
  out.fit = fit_line(xs, ys);
  out.C_hat = -kInf;
  for (std::size_t i = 0; i < xs.size(); ++i) out.C_hat = std::max(out.C_hat, ys[i] - xs[i]);
  if (xs.size() > 2) {
    double mx = 0.0;
    for (double v : xs) mx += v;
    mx /= static_cast<double>(xs.size());
    double sxx = 0.0, sse = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      double e = ys[i] - out.fit.intercept - out.fit.slope * xs[i];
      sse += e * e;
    }
    out.slope_se = std::sqrt(sse / static_cast<double>(xs.size() - 2) / sxx);
  }
  return out;
}

}  // namespace rhlab
