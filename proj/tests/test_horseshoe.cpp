#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "rhlab/dynamics/models.hpp"
#include "rhlab/horseshoe/certificate.hpp"
#include "rhlab/horseshoe/family.hpp"

using namespace rhlab;

namespace {

HTParams alves() {
  HTParams p;
  p.variant = HTVariant::standard_alves;
  return p;
}

// doubling with delta1 = 1/4: a delta1-ball doubles onto the whole circle in
// one step, so every hop is (first sparse time >= n_min) + 1
CoveringConfig doubling_cc() {
  CoveringConfig cc;
  cc.J = Ball{0.5, 1.0 / 16.0};
  cc.delta1 = 0.25;
  cc.N = 3;
  cc.iota = 0.0;
  return cc;
}

std::size_t doubling_increment(const Ball& I, const CoveringConfig& cc, const HTParams& p) {
  std::size_t n_min = ball_n_min(I.diameter(), cc.delta1, p);
  std::size_t t = 1;  // sparse times of doubling are 1, 1 + (N + 1), ...
  while (t < n_min) t += p.sparsity_N + 1;
  return t + 1;
}

struct LogisticSetup {
  MapModel m = make_logistic16();
  HTParams p = alves();
  ReferenceCalibration cal;
  CoveringConfig cc;
  std::vector<Ball> balls;
  NoiseStream noise = NoiseStream::replica(0.1, 1, 0);
  std::vector<CoverFamily> fams;
  std::size_t T = 3000;

  LogisticSetup() {
    CalibrationConfig cfg;
    cfg.j_radius = 0.01;
    cfg.replicas = 50;
    cfg.max_balls = 32;
    cfg.region = Ball{0.3, 0.05};
    cal = calibrate_reference(m, 0.1, hyperbolic_radius(m, p), cfg, 1);
    cc = CoveringConfig::from(cal);
    balls = split_reference(cal.J, 27);
    fams = collect_families(m, noise, balls, p, cc, T);
  }
};

const LogisticSetup& logistic() {
  static LogisticSetup s;
  return s;
}

CoverFamily family_from(std::vector<std::size_t> times, std::size_t T) {
  CoverFamily f;
  f.horizon = T;
  f.times = std::move(times);
  return f;
}

}  // namespace

TEST(Split, WorkedExample) {
  auto b = split_reference(Ball{0.1, 0.1}, 2);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_NEAR(b[0].center, 0.05, 1e-15);
  EXPECT_NEAR(b[1].center, 0.15, 1e-15);
  EXPECT_NEAR(b[0].radius, 0.025, 1e-15);
  EXPECT_GE(b[1].lo() - b[0].hi(), 0.2 / 4 - 1e-15);
}

TEST(Split, DisjointAndInsideJ) {
  Ball J{0.4, 0.03};
  for (std::size_t M = 2; M <= 60; ++M) {
    auto b = split_reference(J, M);
    for (std::size_t q = 0; q < M; ++q) {
      EXPECT_GE(b[q].lo(), J.lo() - 1e-15);
      EXPECT_LE(b[q].hi(), J.hi() + 1e-15);
      if (q + 1 < M) {
        EXPECT_GT(b[q + 1].lo(), b[q].hi());
      }
    }
  }
  EXPECT_THROW(split_reference(J, 1), Error);
}

TEST(Family, DoublingConstantIncrements) {
  auto m = make_doubling();
  auto cc = doubling_cc();
  HTParams p;
  Ball I{0.37, 1.0 / 64.0};
  std::size_t c = doubling_increment(I, cc, p);
  ASSERT_EQ(c, 11u);
  const std::size_t T = 200;
  auto f = collect_cover_family(m, NoiseStream::replica(0.1, 4, 0), I, p, cc, T);
  ASSERT_FALSE(f.increments.empty());
  for (auto inc : f.increments) EXPECT_EQ(inc, c);
  for (std::size_t n = 1; n <= T; ++n) EXPECT_EQ(f.count(n), n / c);
}

TEST(Family, ShortHorizonIsEmpty) {
  auto m = make_doubling();
  auto f = collect_cover_family(m, NoiseStream::replica(0.1, 4, 0), Ball{0.37, 1.0 / 64.0}, HTParams{}, doubling_cc(), 5);
  EXPECT_TRUE(f.times.empty());
  for (std::size_t n = 1; n <= 5; ++n) EXPECT_EQ(f.count(n), 0u);
}

TEST(Family, LogisticInvariantsAndIidIncrements) {
  const auto& L = logistic();
  for (const auto& f : L.fams) {
    ASSERT_GT(f.times.size(), 50u);
    for (std::size_t q = 1; q < f.times.size(); ++q) EXPECT_LT(f.times[q - 1], f.times[q]);
    for (std::size_t n = 1; n <= L.T; n += 97) {
      EXPECT_LE(f.count(n), n);
      EXPECT_LE(f.count(n), f.count(n + 1));
    }
  }
  // lag-1 autocorrelation inside 3 / sqrt(k) for most balls
  std::size_t inside = 0;
  for (const auto& f : L.fams) {
    double bound = 3.0 / std::sqrt(static_cast<double>(f.increments.size()));
    if (std::abs(lag1_autocorrelation(f.increments)) <= bound) ++inside;
  }
  EXPECT_GE(inside, L.fams.size() - 1);
}

TEST(ChooseM, FormulaArithmetic) {
  const double Jd = 0.02;
  const double C = 1.0 - std::log(3.0 / Jd);  // bracket = 1 at M = 3
  EXPECT_NEAR(v_of_m(C, Jd, 3), 0.5, 1e-12);
  double Z3 = v_of_m(C, Jd, 3) / 3.0 - 1.0 / 9.0;
  EXPECT_NEAR(Z3, 1.0 / 18.0, 1e-12);
}

TEST(ChooseM, LeastFeasibleAndZEquivalence) {
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> uc(-2.0, 15.0), uj(0.005, 0.2);
  for (int rep = 0; rep < 200; ++rep) {
    double C = uc(g), Jd = uj(g);
    try {
      auto ch = choose_M(C, Jd);
      const double Md = static_cast<double>(ch.M);
      EXPECT_GT(Md * ch.V_M, 1.0);
      EXPECT_GT(ch.Z_M, 0.0);
      EXPECT_NEAR(ch.V_M, v_of_m(C, Jd, ch.M), 0.0);
      for (auto [M, V] : ch.curve) {
        if (!std::isfinite(V)) continue;
        const double Mi = static_cast<double>(M);
        EXPECT_EQ(Mi * V > 1.0, V / Mi - 1.0 / (Mi * Mi) > 0.0);
        if (M < ch.M) {
          EXPECT_LE(Mi * V, 1.0);
        }
      }
    } catch (const NoFeasibleM&) {
      ADD_FAILURE() << "no M for C=" << C << " |J|=" << Jd;
    }
  }
}

TEST(ChooseM, InfeasibleReportsCurve) {
  try {
    choose_M(1000.0, 0.02);
    FAIL() << "expected NoFeasibleM";
  } catch (const NoFeasibleM& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_feasible_m);
    EXPECT_EQ(e.curve().size(), kMaxM - 1);
  }
}

TEST(ChooseM, LogisticRecomputesFromStoredCHat) {
  const auto& L = logistic();
  auto ms = m_stats(L.m, 0.1, L.p, L.cc, {1, 2, 3, 4}, 20, 3, 5000);
  auto ch = choose_M(ms.C_hat, L.cal.J.diameter());
  double V = 1.0 / (2.0 * (ms.C_hat + std::log(static_cast<double>(ch.M) / L.cal.J.diameter())));
  EXPECT_GT(static_cast<double>(ch.M) * V, 1.0);
  EXPECT_LE(ch.M, kMaxM);
}

TEST(Pair, IdenticalFamilies) {
  std::vector<std::size_t> t{3, 9, 14, 20, 33};
  std::vector<CoverFamily> f{family_from(t, 40), family_from(t, 40)};
  auto pc = find_pair(f, 40);
  EXPECT_EQ(pc.times, t);
}

TEST(Pair, DisjointThrows) {
  std::vector<CoverFamily> f{family_from({2, 4, 6}, 10), family_from({3, 5, 7}, 10)};
  EXPECT_THROW(find_pair(f, 10), EmptyIntersection);
}

TEST(Pair, MatchesExhaustiveSearch) {
  std::mt19937_64 g(11);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t M = 20, T = 1000;
    std::bernoulli_distribution bit(0.05 + 0.01 * rep);
    std::vector<std::vector<char>> mat(M, std::vector<char>(T + 1, 0));
    std::vector<CoverFamily> fams;
    for (std::size_t i = 0; i < M; ++i) {
      std::vector<std::size_t> t;
      for (std::size_t n = 1; n <= T; ++n)
        if (bit(g)) {
          mat[i][n] = 1;
          t.push_back(n);
        }
      fams.push_back(family_from(t, T));
    }
    std::size_t bi = 0, bj = 0, best = 0;
    bool have = false;
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = i + 1; j < M; ++j) {
        std::size_t c = 0;
        for (std::size_t n = 1; n <= T; ++n) c += mat[i][n] && mat[j][n];
        if (!have || c > best) {
          best = c;
          bi = i;
          bj = j;
          have = true;
        }
      }
    auto pc = find_pair(fams, T);
    EXPECT_EQ(pc.i, bi);
    EXPECT_EQ(pc.j, bj);
    EXPECT_EQ(pc.times.size(), best);
  }
}

TEST(Bonferroni, ExactOnCollectedFamilies) {
  const auto& L = logistic();
  auto rep = bonferroni_check(L.fams, L.T);
  EXPECT_TRUE(rep.ok);
  EXPECT_EQ(rep.checked, L.T);
  EXPECT_GE(rep.min_lower_slack, 0);
  EXPECT_GE(rep.min_upper_slack, 0);
  auto pc = find_pair(L.fams, L.T);
  EXPECT_GT(pc.bonferroni_bound, 0);
  EXPECT_GE(static_cast<double>(pc.times.size()) * pc.pair_count, static_cast<double>(pc.bonferroni_bound));
}

TEST(Bonferroni, RandomFamilies) {
  std::mt19937_64 g(2);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<CoverFamily> fams;
    std::bernoulli_distribution bit(0.3);
    for (int i = 0; i < 8; ++i) {
      std::vector<std::size_t> t;
      for (std::size_t n = 1; n <= 300; ++n)
        if (bit(g)) t.push_back(n);
      fams.push_back(family_from(t, 300));
    }
    EXPECT_TRUE(bonferroni_check(fams, 300).ok);
  }
}

TEST(Simultaneous, DoublingMultiples) {
  auto m = make_doubling();
  auto cc = doubling_cc();
  HTParams p;
  auto balls = split_reference(cc.J, 2);
  const std::size_t c = doubling_increment(balls[0], cc, p), T = 300;
  auto t = simultaneous_cover_times(m, NoiseStream::replica(0.1, 8, 0), balls[0], balls[1], p, cc, T);
  ASSERT_EQ(t.size(), T / c);
  for (std::size_t q = 0; q < t.size(); ++q) EXPECT_EQ(t[q], c * (q + 1));
}

TEST(Simultaneous, SameBallAndPairConsistency) {
  const auto& L = logistic();
  auto self = simultaneous_cover_times(L.fams[0], L.fams[0], L.T);
  EXPECT_EQ(self, L.fams[0].times);
  auto pc = find_pair(L.fams, L.T);
  EXPECT_EQ(simultaneous_cover_times(L.fams[pc.i], L.fams[pc.j], L.T), pc.times);
}

TEST(Simultaneous, LogisticRunningMeanSettles) {
  const auto& L = logistic();
  auto pc = find_pair(L.fams, L.T);
  std::vector<double> inc;
  std::size_t prev = 0;
  for (auto t : pc.times) {
    inc.push_back(static_cast<double>(t - prev));
    prev = t;
  }
  ASSERT_GE(inc.size(), 40u);
  auto all = mean_se(inc);
  std::vector<double> half(inc.begin(), inc.begin() + static_cast<std::ptrdiff_t>(inc.size() / 2));
  auto h = mean_se(half);
  EXPECT_TRUE(std::isfinite(all.mean));
  EXPECT_LE(std::abs(all.mean - h.mean), 5.0 * all.sd / std::sqrt(static_cast<double>(half.size())));
}

namespace {

HorseshoeCertificate doubling_certificate(double kappa, std::size_t T = 120) {
  auto m = make_doubling();
  auto cc = doubling_cc();
  HTParams p;
  auto balls = split_reference(cc.J, 2);
  auto noise = NoiseStream::replica(0.1, 8, 0);
  static std::vector<CoverFamily> fams;
  fams = collect_families(m, noise, balls, p, cc, T);
  auto pc = find_pair(fams, T);
  PairData pd{pc.i, pc.j, balls[pc.i], balls[pc.j], cc.J, pc.times, &fams[pc.i], &fams[pc.j], T};
  CertificateOptions opt;
  opt.kappa = kappa;
  opt.max_merge = 0;
  return build_certificate(m, noise, pd, opt);
}

}  // namespace

TEST(Certificate, DoublingExpansionIsTwoToTheC) {
  auto cert = doubling_certificate(1.5);
  ASSERT_EQ(cert.blocks.size(), 10u);
  EXPECT_TRUE(cert.flags.all());
  for (const auto& b : cert.blocks) {
    EXPECT_EQ(b.length(), 11u);
    for (const auto& w : b.w) {
      double bound = std::stod(w.inv_deriv_bound);
      EXPECT_NEAR(bound, std::ldexp(1.0, -11), 1e-18);
      EXPECT_GE(bound, std::ldexp(1.0, -11));
    }
  }
  EXPECT_TRUE(doubling_certificate(2048.0 * (1.0 - 1e-9)).flags.e2);
  EXPECT_FALSE(doubling_certificate(2048.0 * (1.0 + 1e-9)).flags.e2);
}

TEST(Certificate, KappaBarelyAboveOneOnOneBlock) {
  const auto& L = logistic();
  auto pc = find_pair(L.fams, L.T);
  PairData pd{pc.i, pc.j, L.balls[pc.i], L.balls[pc.j], L.cal.J, pc.times, &L.fams[pc.i], &L.fams[pc.j], L.T};
  CertificateOptions opt;
  opt.kappa = 1.0 + 1e-9;
  opt.max_blocks = 1;
  auto cert = build_certificate(L.m, L.noise, pd, opt);
  ASSERT_EQ(cert.blocks.size(), 1u);
  EXPECT_TRUE(cert.flags.e1 && cert.flags.idk && cert.flags.e2);
}

namespace {

const HorseshoeCertificate& logistic_certificate() {
  static HorseshoeCertificate cert = [] {
    const auto& L = logistic();
    auto pc = find_pair(L.fams, L.T);
    PairData pd{pc.i, pc.j, L.balls[pc.i], L.balls[pc.j], L.cal.J, pc.times, &L.fams[pc.i], &L.fams[pc.j], L.T};
    CertificateOptions opt;
    opt.max_blocks = 20;
    return build_certificate(L.m, L.noise, pd, opt);
  }();
  return cert;
}

}  // namespace

TEST(Certificate, LogisticEndToEnd) {
  const auto& cert = logistic_certificate();
  ASSERT_EQ(cert.blocks.size(), 20u);
  EXPECT_TRUE(cert.flags.all());
  for (std::size_t k = 0; k < cert.blocks.size(); ++k) {
    EXPECT_EQ(cert.blocks[k].n_k, cert.times[k]);
    EXPECT_LT(cert.times[k], cert.times[k + 1]);
  }
  auto rep = reverify(logistic().m, cert);
  EXPECT_TRUE(rep.ok) << rep.detail;
}

TEST(Certificate, InflatedWitnessIsCaught) {
  auto cert = logistic_certificate();
  auto& w = cert.blocks[3].w[1];
  Mpf r = Mpf::parse(w.radius, cert.blocks[3].prec);
  w.radius = mul(r, 1.01, Round::nearest).str();
  auto rep = reverify(logistic().m, cert);
  EXPECT_FALSE(rep.ok);
  EXPECT_NE(std::find(rep.failed_clauses.begin(), rep.failed_clauses.end(), "e2"), rep.failed_clauses.end());
}

TEST(Certificate, Deterministic) {
  const auto& L = logistic();
  auto fams2 = collect_families(L.m, L.noise, L.balls, L.p, L.cc, L.T);
  for (std::size_t q = 0; q < fams2.size(); ++q) EXPECT_EQ(fams2[q].times, L.fams[q].times);
}

TEST(Shadow, ConstantWordStaysInI0) {
  const auto& cert = logistic_certificate();
  auto sp = symbolic_shadow(logistic().m, cert, "000000");
  EXPECT_TRUE(sp.verified);
  ASSERT_EQ(sp.K.size(), 6u);
  for (std::size_t k = 1; k < sp.K.size(); ++k) {
    EXPECT_TRUE(sp.K[k].first > sp.K[k - 1].first);
    EXPECT_TRUE(sp.K[k].second < sp.K[k - 1].second);
  }
}

TEST(Shadow, ComplementsDiffer) {
  const auto& cert = logistic_certificate();
  for (std::string w : {"010011", "000111", "101010"}) {
    std::string c = w;
    for (char& ch : c) ch = ch == '0' ? '1' : '0';
    auto a = symbolic_shadow(logistic().m, cert, w), b = symbolic_shadow(logistic().m, cert, c);
    EXPECT_FALSE(a.x == b.x);
  }
}

TEST(Shadow, DoublingAllWordsOfLengthFive) {
  auto cert = doubling_certificate(1.5);
  auto m = make_doubling();
  std::set<std::string> seen;
  for (const auto& w : binary_words(5)) {
    auto sp = symbolic_shadow(m, cert, w);
    EXPECT_TRUE(sp.verified);
    seen.insert(sp.x.str());
  }
  EXPECT_EQ(seen.size(), 32u);
}

TEST(Shadow, LongWordRejected) {
  auto cert = doubling_certificate(1.5, 40);
  EXPECT_THROW(symbolic_shadow(make_doubling(), cert, std::string(cert.blocks.size() + 2, '0')), Error);
}
