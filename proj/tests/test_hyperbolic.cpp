#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rhlab/dynamics/models.hpp"
#include "rhlab/hyperbolic/ball.hpp"
#include "rhlab/hyperbolic/pullback.hpp"
#include "rhlab/hyperbolic/times.hpp"

using namespace rhlab;

namespace {

HTParams params(double s2, HTVariant v = HTVariant::paper_literal, std::size_t N = 2) {
  HTParams p;
  p.sigma2 = s2;
  p.b = 0.45;
  p.r = 0.01;
  p.sparsity_N = N;
  p.variant = v;
  return p;
}

// all-pairs oracle straight from the definition
bool oracle_hyperbolic(const RandomOrbit& o, std::size_t n, const HTParams& p) {
  if (n == 0) return false;
  for (std::size_t k = 0; k < n; ++k) {
    if (cocycle_product(o, k, n) > std::pow(p.sigma2, static_cast<double>(n - k))) return false;
    double d = o.critical_distances[n - k];
    double dr = d > p.r ? 1.0 : d;
    double e = p.variant == HTVariant::paper_literal ? static_cast<double>(n - k) : static_cast<double>(k);
    if (dr < std::pow(p.sigma(), p.b * e)) return false;
  }
  return true;
}

std::vector<std::size_t> oracle_sparse(const std::vector<std::size_t>& hyp, std::size_t N) {
  std::vector<std::size_t> tau;
  std::size_t i = 0;
  while (i < hyp.size()) {
    if (tau.empty()) {
      tau.push_back(hyp[i]);
    } else {
      while (i < hyp.size() && !(hyp[i] > N + tau.back())) ++i;
      if (i == hyp.size()) break;
      tau.push_back(hyp[i]);
    }
    ++i;
  }
  return tau;
}

CoveringConfig doubling_cover(double delta1) {
  CoveringConfig cc;
  cc.J = Ball{0.3, 0.1};
  cc.delta1 = delta1;
  cc.N = 2 + static_cast<std::size_t>(std::ceil(std::log2(1.0 / (2.0 * delta1))));
  cc.iota = 0.0;
  return cc;
}

CoveringConfig logistic_cover() {
  // calibrated once for sigma = 0.1 at the hyperbolic radius of params(0.5)
  auto m = make_model("logistic16");
  CalibrationConfig cfg;
  cfg.replicas = 10;
  cfg.max_balls = 8;
  auto c = calibrate_reference(m, 0.1, hyperbolic_radius(m, params(0.5)), cfg, 1);
  return CoveringConfig::from(c);
}

}  // namespace

TEST(Hyperbolic, DoublingEveryTimeAtHalf) {
  auto m = make_model("doubling");
  for (auto v : {HTVariant::paper_literal, HTVariant::standard_alves}) {
    auto o = orbit(m, NoiseStream(0.2, 1), 0.3, 300);
    auto p = params(0.5, v);
    for (std::size_t n = 1; n <= 300; ++n) ASSERT_TRUE(is_hyperbolic_time(o, n, p)) << n;
    EXPECT_EQ(hyperbolic_times(o, p).size(), 300u);
    auto q = params(0.4, v);
    for (std::size_t n = 1; n <= 300; ++n) ASSERT_FALSE(is_hyperbolic_time(o, n, q)) << n;
    EXPECT_TRUE(hyperbolic_times(o, q).empty());
  }
}

TEST(Hyperbolic, TernaryVariantsAgree) {
  auto m = make_model("ternary");
  auto o = orbit(m, NoiseStream(0.2, 2), 0.1, 200);
  for (double s2 : {0.3, 0.34, 0.5}) {
    auto a = hyperbolic_times(o, params(s2, HTVariant::paper_literal));
    auto b = hyperbolic_times(o, params(s2, HTVariant::standard_alves));
    EXPECT_EQ(a, b) << s2;
    EXPECT_EQ(a.size(), s2 < 1.0 / 3.0 ? 0u : 200u);
  }
}

TEST(Hyperbolic, LogisticMatchesAllPairsOracle) {
  auto m = make_model("logistic16");
  UniformStream u(31337);
  std::size_t positives = 0;
  for (auto v : {HTVariant::paper_literal, HTVariant::standard_alves}) {
    auto p = params(0.5, v);
    for (int t = 0; t < 10000; ++t) {
      std::uint64_t seed = static_cast<std::uint64_t>(u() * 1e9);
      auto o = orbit(m, NoiseStream(0.1, seed), 0.05 + 0.9 * u(), 200);
      std::size_t n = 1 + static_cast<std::size_t>(u() * 200.0);
      bool want = oracle_hyperbolic(o, n, p);
      ASSERT_EQ(is_hyperbolic_time(o, n, p), want) << "seed " << seed << " n " << n;
      positives += want;
    }
  }
  EXPECT_GT(positives, 500u);
}

TEST(Hyperbolic, ScannerMatchesDirectCheck) {
  auto m = make_model("logistic16");
  for (auto v : {HTVariant::paper_literal, HTVariant::standard_alves}) {
    auto p = params(0.5, v);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      auto o = orbit(m, NoiseStream(0.1, 100 + seed), 0.3, 400);
      auto hyp = hyperbolic_times(o, p);
      std::vector<std::size_t> direct;
      for (std::size_t n = 1; n <= 400; ++n)
        if (is_hyperbolic_time(o, n, p)) direct.push_back(n);
      ASSERT_EQ(hyp, direct) << seed;
      for (std::size_t n : hyp) EXPECT_LE(cocycle_product(o, 0, n), std::pow(p.sigma2, static_cast<double>(n)) * (1 + 1e-12));
    }
  }
}

TEST(Hyperbolic, PaperLiteralIsAPrefixCondition) {
  auto m = make_model("logistic16");
  auto p = params(0.5, HTVariant::paper_literal);
  int died = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto o = orbit(m, NoiseStream(0.1, 7000 + seed), 0.3, 300);
    HyperbolicScanner sc(p);
    std::size_t death = 0;
    for (std::size_t n = 0; n <= 300; ++n) {
      sc.push(o.log_inv_deriv[n], o.critical_distances[n]);
      if (sc.dead() && !death) death = n;
    }
    if (!death) continue;
    ++died;
    for (std::size_t n = death; n <= 300; ++n) ASSERT_FALSE(is_hyperbolic_time(o, n, p));
  }
  EXPECT_GT(died, 0);
}

TEST(Sparse, DoublingSpacing) {
  auto m = make_model("doubling");
  auto o = orbit(m, NoiseStream(0.1, 3), 0.2, 40);
  auto tau = sparse_hyperbolic_times(o, params(0.5, HTVariant::paper_literal, 2));
  std::vector<std::size_t> want;
  for (std::size_t t = 1; t <= 40; t += 3) want.push_back(t);
  EXPECT_EQ(tau, want);
  auto all = sparse_hyperbolic_times(o, params(0.5, HTVariant::paper_literal, 0));
  EXPECT_EQ(all.size(), 40u);
}

TEST(Sparse, LogisticMatchesRecursion) {
  auto m = make_model("logistic16");
  for (std::size_t N : {0u, 1u, 3u, 10u}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto o = orbit(m, NoiseStream(0.1, 40 + seed), 0.7, 500);
      auto p = params(0.5, HTVariant::standard_alves, N);
      auto hyp = hyperbolic_times(o, p);
      auto tau = sparse_hyperbolic_times(o, p);
      EXPECT_EQ(tau, oracle_sparse(hyp, N));
      for (std::size_t i = 1; i < tau.size(); ++i) EXPECT_GT(tau[i] - tau[i - 1], N);
    }
  }
}

TEST(Young, ZeroHorizonGivesNothing) {
  auto m = make_model("doubling");
  auto o = orbit(m, NoiseStream(0.1, 3), 0.2, 100);
  auto cc = doubling_cover(0.01);
  cc.N = 0;
  auto rec = young_times(o, params(0.5), cc);
  EXPECT_FALSE(rec.sparse_times.empty());
  EXPECT_TRUE(rec.young_times.empty());
}

TEST(Young, DoublingEverySparseTimeIsYoung) {
  auto m = make_model("doubling");
  for (double d1 : {0.01, 0.003, 0.05}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto o = orbit(m, NoiseStream(0.25, 50 + seed), 0.41, 300);
      auto rec = young_times(o, params(0.5), doubling_cover(d1));
      EXPECT_EQ(rec.young_times, rec.sparse_times);
      EXPECT_EQ(rec.young_events.size(), rec.young_times.size());
      ASSERT_FALSE(rec.density_profile.empty());
      EXPECT_NEAR(rec.density_profile.back().second, 1.0 / 3.0, 0.01);
    }
  }
}

TEST(Young, LogisticDensityStabilises) {
  auto m = make_model("logistic16");
  auto cc = logistic_cover();
  auto p = params(0.5, HTVariant::standard_alves);
  auto o = orbit(m, NoiseStream::replica(0.1, 12, 0), stationary_start(m, 0.1, 12, 0, 1000), 10000);
  auto rec = young_times(o, p, cc);
  for (std::size_t t : rec.young_times)
    EXPECT_TRUE(std::binary_search(rec.sparse_times.begin(), rec.sparse_times.end(), t));
  ASSERT_GE(rec.density_profile.size(), 50u);
  double last = rec.density_profile.back().second;
  double half = rec.density_profile[rec.density_profile.size() / 2 - 1].second;
  EXPECT_GT(last, 0.02);
  EXPECT_LT(std::abs(last - half), 0.2 * last);
}

TEST(Ball, NMin) {
  auto p = params(0.5);
  EXPECT_EQ(ball_n_min(0.02, 0.01, p), 0u);
  EXPECT_EQ(ball_n_min(0.04, 0.01, p), 0u);
  for (int k = 1; k <= 8; ++k) EXPECT_EQ(ball_n_min(std::ldexp(0.01, -k), 0.01, p), static_cast<std::size_t>(2 * k + 2));
}

TEST(Ball, FullSizeBallTakesFirstWitnessYoungTime) {
  auto m = make_model("logistic16");
  auto cc = logistic_cover();
  auto p = params(0.5, HTVariant::standard_alves);
  for (std::uint64_t r = 0; r < 10; ++r) {
    NoiseStream w = NoiseStream::replica(0.1, 77, r);
    Ball I{stationary_start(m, 0.1, 77, r, 500), cc.delta1};
    auto bt = ball_young_time(m, w, I, p, cc, 2000);
    EXPECT_EQ(bt.n_min, 0u);
    std::size_t best = SIZE_MAX;
    for (int q = 0; q < kWitnessGrid; ++q) {
      auto o = orbit(m, w, witness_point(I, q), 2000);
      auto rec = young_times(o, p, cc);
      if (!rec.young_times.empty()) best = std::min(best, rec.young_times.front());
    }
    ASSERT_TRUE(bt.m.has_value());
    EXPECT_EQ(*bt.m, best) << r;
    auto o = orbit(m, w, bt.witness_x, *bt.m);
    EXPECT_TRUE(is_hyperbolic_time(o, *bt.m, p));
    EXPECT_LE(circle_dist(bt.witness_x, I.center), I.radius * (1 + 1e-12));
  }
}

TEST(Ball, DoublingBound) {
  auto m = make_model("doubling");
  auto cc = doubling_cover(0.01);
  auto p = params(0.5, HTVariant::paper_literal, 2);
  for (int k = 0; k <= 8; ++k) {
    for (std::uint64_t r = 0; r < 20; ++r) {
      Ball I{0.05 * static_cast<double>(r), 0.5 * std::ldexp(2 * cc.delta1, -k)};
      auto bt = ball_young_time(m, NoiseStream(0.3, r), I, p, cc, 1000);
      ASSERT_TRUE(bt.m.has_value());
      EXPECT_GE(*bt.m, bt.n_min);
      EXPECT_LE(*bt.m, bt.n_min + p.sparsity_N + 1);
    }
  }
}

TEST(Ball, HorizonExceededCarriesPartial) {
  auto m = make_model("doubling");
  auto cc = doubling_cover(0.01);
  try {
    ball_young_time(m, NoiseStream(0.3, 1), Ball{0.2, 0.0025}, params(0.4), cc, 50);
    FAIL() << "expected HorizonExceeded";
  } catch (const HorizonExceeded& e) {
    EXPECT_EQ(e.code(), ErrorCode::horizon_exceeded);
    EXPECT_EQ(e.partial().horizon, 50u);
    EXPECT_EQ(e.partial().n_min, 4u);
    EXPECT_FALSE(e.partial().m.has_value());
  }
  EXPECT_THROW(ball_young_time(m, NoiseStream(0.3, 1), Ball{0.2, 0.02}, params(0.5), cc, 50), Error);
}

TEST(Ball, LogisticMeanGrowsAffinely) {
  auto m = make_model("logistic16");
  auto cc = logistic_cover();
  auto ms = m_stats(m, 0.1, params(0.5, HTVariant::standard_alves), cc, {1, 2, 3, 4, 5, 6, 7, 8}, 60, 9, 5000);
  EXPECT_GT(ms.fit.slope, 0.0);
  EXPECT_GE(ms.fit.r2, 0.9);
  for (const auto& row : ms.rows) EXPECT_GE(row.m_mean, static_cast<double>(row.n_min));
}

TEST(YoungTail, DoublingDeterministicDensity) {
  auto m = make_model("doubling");
  auto cc = doubling_cover(0.01);
  auto p = params(0.5, HTVariant::paper_literal, 2);
  auto half = young_tail_stats(m, 0.2, p, cc, {30, 60, 120}, 50, 1.0 / 6.0, 3);
  for (const auto& row : half.rows) {
    EXPECT_EQ(row.hits, 0u);
    EXPECT_TRUE(row.insufficient);
  }
  EXPECT_NEAR(half.mean_density, 1.0 / 3.0, 0.01);
  auto one = young_tail_stats(m, 0.2, p, cc, {30, 60, 120}, 50, 1.0, 3);
  for (const auto& row : one.rows) EXPECT_EQ(row.prob, 1.0);
}

TEST(YoungTail, LogisticTailDecreases) {
  auto m = make_model("logistic16");
  auto cc = logistic_cover();
  auto p = params(0.5, HTVariant::standard_alves);
  auto probe = young_tail_stats(m, 0.1, p, cc, {2000}, 40, 1.0, 21);
  double theta1 = 0.5 * probe.mean_density;
  auto t = young_tail_stats(m, 0.1, p, cc, {25, 50, 100, 200, 400}, 400, theta1, 22);
  for (std::size_t i = 1; i < t.rows.size(); ++i) EXPECT_LE(t.rows[i].prob, t.rows[i - 1].prob);
  EXPECT_LT(t.rows.back().prob, t.rows.front().prob);
}

TEST(HyperbolicBall, DoublingIsExactlyLinear) {
  auto m = make_model("doubling");
  auto p = params(0.5);
  auto o = orbit(m, NoiseStream(0.3, 4), 0.37, 60);
  for (std::size_t n : {1u, 10u, 60u}) {
    auto rep = check_hyperbolic_ball(o, n, 0.01, p, 20, 5);
    EXPECT_EQ(rep.pairs, 20u);
    EXPECT_EQ(rep.contraction_violations_strict, 0u);
    EXPECT_EQ(rep.distortion_violations, 0u);
    EXPECT_EQ(rep.max_distortion_ratio, 0.0);
    EXPECT_NEAR(rep.V_width, std::ldexp(0.02, -static_cast<int>(n)), 1e-12 * rep.V_width);
  }
}

TEST(HyperbolicBall, LogisticYoungTimesContractWithBoundedDistortion) {
  auto m = make_model("logistic16");
  auto cc = logistic_cover();
  for (auto v : {HTVariant::paper_literal, HTVariant::standard_alves}) {
    auto p = params(0.5, v);
    std::size_t pairs = 0;
    for (std::uint64_t r = 0; r < 4; ++r) {
      auto o = orbit(m, NoiseStream::replica(0.1, 31, r), stationary_start(m, 0.1, 31, r, 500), 600);
      auto rec = young_times(o, p, cc);
      for (std::size_t i = 0; i < rec.young_times.size() && i < 10; ++i) {
        auto rep = check_hyperbolic_ball(o, rec.young_times[i], cc.delta1, p, 3, 1000 * r + i);
        EXPECT_FALSE(rep.clipped);
        EXPECT_EQ(rep.contraction_violations, 0u);
        EXPECT_EQ(rep.distortion_violations, 0u);
        pairs += rep.pairs;
      }
    }
    EXPECT_GT(pairs, 30u);
  }
}
