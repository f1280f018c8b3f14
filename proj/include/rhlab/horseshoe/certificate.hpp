#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rhlab/covering/enclosure.hpp"
#include "rhlab/covering/events.hpp"
#include "rhlab/horseshoe/family.hpp"
#include "rhlab/util/mpf.hpp"
#include "rhlab/util/parallel.hpp"

namespace rhlab {

/// Witness sub-ball J(k)_{a,b} of I_a, stored as decimal strings at `prec` bits.
struct BlockWitness {
  int a = 0, b = 0;
  bool found = false;
  std::string center, radius;
  std::string inv_deriv_bound;  // upper bound on sup |(df^n)^{-1}| over the witness
  std::string note;             // why planning failed, when it did
};

struct CertBlock {
  std::size_t n_k = 0, n_k1 = 0;
  long prec = 0;
  std::array<BlockWitness, 4> w;  // index 2a + b
  bool e1 = false, idk = false, e2 = false;
  std::size_t merged = 0;         // common times skipped to reach n_k1

  std::size_t length() const { return n_k1 - n_k; }
};

struct CertFlags {
  bool disjoint = false;
  bool e1 = false;
  bool idk = false;
  bool e2 = false;
  bool e0_proxy = false;
  bool all() const { return disjoint && e1 && idk && e2 && e0_proxy; }
};

struct HorseshoeCertificate {
  std::string model;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t noise_key = 0;
  std::size_t pair_i = 0, pair_j = 0;
  Ball I0, I1;
  Ball J;
  double kappa = 1.5;
  std::size_t horizon = 0;
  std::vector<std::size_t> times;  // n_0 = 0 < n_1 < ...
  std::vector<CertBlock> blocks;
  double increments_mean = 0.0;
  double increments_sd = 0.0;
  double e0_gap = 0.0;             // |mean of first half - mean|
  CertFlags flags;
  std::string config_hash;

  const Ball& ball(int a) const { return a == 0 ? I0 : I1; }
  NoiseStream noise() const { return NoiseStream(sigma, noise_key); }
};

/// One step of a verified chain: the integer subtracted before the step and
/// the branch used.
struct ChainStep {
  long shift = 0;
  std::size_t branch = 0;
};

struct WitnessCheck {
  bool contained = false;  // J ⊂ I_a
  bool diffeo = false;     // every outer iterate inside one branch, |f'| > 0
  bool covers = false;     // inner image ⊇ I_b
  bool e2 = false;
  Mpf bound{128};          // prod over steps of 1 / min |F'|, rounded up
  long start_shift = 0;    // J + start_shift ⊂ I_a as stored
  long end_shift = 0;      // I_b + end_shift ⊂ final inner image
  std::vector<ChainStep> path;
  std::string reason;

  bool ok() const { return contained && diffeo && covers && e2; }
};

namespace detail {

// Ball endpoints as exact multiprecision numbers (inflated outward by rounding).
inline Mpf ball_lo(const Ball& B, long P) { return sub(Mpf(B.center, P), B.radius, Round::down); }
inline Mpf ball_hi(const Ball& B, long P) { return add(Mpf(B.center, P), B.radius, Round::up); }

// Shift q with [lo, hi] + q inside [L, H], if any.
inline std::optional<long> shift_inside(const Mpf& lo, const Mpf& hi, const Mpf& L, const Mpf& H) {
  long q = -floor_long(sub(lo, L, Round::down));
  Mpf a = add(lo, static_cast<double>(q), Round::down), b = add(hi, static_cast<double>(q), Round::up);
  if (a >= L && b <= H) return q;
  return std::nullopt;
}

inline bool single_branch(const MapModel& m) { return m.branches.size() == 1; }

// Branch holding [lo, hi] (lo already reduced to [0, 1)).
inline std::optional<std::size_t> branch_of(const MapModel& m, const Mpf& lo, const Mpf& hi) {
  if (single_branch(m)) {
    if (sub(hi, lo, Round::up) < 1.0) return std::size_t{0};
    return std::nullopt;
  }
  for (std::size_t k = 0; k < m.branches.size(); ++k)
    if (lo >= m.branches[k].lo && hi <= m.branches[k].hi) return k;
  return std::nullopt;
}

}  // namespace detail

/// Rigorous forward check of one witness: directed-rounding images of the
/// outer and inner hulls of [c - r, c + r] over `steps` steps of `noise`.
inline WitnessCheck verify_witness(const MapModel& m, const NoiseStream& noise, std::size_t steps, const Ball& Ia,
                                   const Ball& Ib, const std::string& center, const std::string& radius, long prec,
                                   double kappa) {
  WitnessCheck wc;
  const long P = prec;
  wc.bound = Mpf(1.0, P);
  Mpf c = Mpf::parse(center, P), r = Mpf::parse(radius, P);
  if (!(r > 0.0)) {
    wc.reason = "non-positive radius";
    return wc;
  }
  Mpf olo = sub(c, r, Round::down), ohi = add(c, r, Round::up);
  Mpf ilo = sub(c, r, Round::up), ihi = add(c, r, Round::down);
  if (auto q = detail::shift_inside(olo, ohi, detail::ball_lo(Ia, P), detail::ball_hi(Ia, P))) {
    wc.contained = true;
    wc.start_shift = *q;
  }
  wc.diffeo = true;
  for (std::size_t t = 0; t < steps; ++t) {
    long k = floor_long(olo);
    const double kd = static_cast<double>(k);
    olo = sub(olo, kd, Round::down);
    ohi = sub(ohi, kd, Round::up);
    ilo = sub(ilo, kd, Round::up);
    ihi = sub(ihi, kd, Round::down);
    auto bi = detail::branch_of(m, olo, ohi);
    if (!bi) {
      wc.diffeo = false;
      wc.reason = "iterate " + std::to_string(t) + " crosses a branch boundary";
      return wc;
    }
    Mpf md = m.kernel->min_abs_deriv(olo, ohi, Round::down);
    if (!(md > 0.0)) {
      wc.diffeo = false;
      wc.reason = "iterate " + std::to_string(t) + " touches the critical set";
      return wc;
    }
    wc.bound = mul(wc.bound, div(1.0, md, Round::up), Round::up);
    wc.path.push_back({k, *bi});
    const double w = noise.at(t);
    const bool inc = m.branches[*bi].increasing;
    Mpf a = m.kernel->lift(inc ? olo : ohi, Round::down), b = m.kernel->lift(inc ? ohi : olo, Round::up);
    Mpf ia = m.kernel->lift(inc ? ilo : ihi, Round::up), ib = m.kernel->lift(inc ? ihi : ilo, Round::down);
    olo = add(a, w, Round::down);
    ohi = add(b, w, Round::up);
    ilo = add(ia, w, Round::up);
    ihi = add(ib, w, Round::down);
    if (ilo > ihi) {
      wc.diffeo = false;
      wc.reason = "inner hull empty at step " + std::to_string(t + 1);
      return wc;
    }
  }
  if (auto q = detail::shift_inside(detail::ball_lo(Ib, P), detail::ball_hi(Ib, P), ilo, ihi)) {
    wc.covers = true;
    wc.end_shift = *q;
  } else {
    wc.reason = "inner image misses part of I_b";
  }
  wc.e2 = wc.bound < 1.0 / kappa;
  if (!wc.e2 && wc.reason.empty()) wc.reason = "inverse derivative bound not below 1/kappa";
  return wc;
}

namespace detail {

struct Piece {
  Mpf lo, hi;     // lifted, lo in [0, 1) for pieces produced by pull_one
  double gain = 0.0;
};

// Unclipped preimages of [A, B] under F + w, most expanding first.
inline std::vector<Piece> pull_one(const MapModel& m, const Mpf& A, const Mpf& B, double w) {
  std::vector<Piece> out;
  Mpf a0 = sub(A, w, Round::nearest), b0 = sub(B, w, Round::nearest);
  const double ad = a0.to_double(), bd = b0.to_double();
  for (std::size_t k = 0; k < m.branches.size(); ++k) {
    const Branch& br = m.branches[k];
    double f0 = m.kernel->lift(br.lo), f1 = m.kernel->lift(br.hi);
    double fmin = std::min(f0, f1), fmax = std::max(f0, f1);
    long qlo = static_cast<long>(std::floor(fmin - ad)) - 1, qhi = static_cast<long>(std::ceil(fmax - bd)) + 1;
    for (long q = qlo; q <= qhi; ++q) {
      Mpf va = add(a0, static_cast<double>(q), Round::nearest), vb = add(b0, static_cast<double>(q), Round::nearest);
      if (!(va > fmin && vb < fmax)) continue;
      Mpf ya = m.kernel->inverse(va, k, Round::nearest), yb = m.kernel->inverse(vb, k, Round::nearest);
      Piece p{br.increasing ? ya : yb, br.increasing ? yb : ya, 0.0};
      if (!(p.lo < p.hi)) continue;
      p.gain = std::abs(m.deriv(0.5 * (p.lo.to_double() + p.hi.to_double())));
      out.push_back(std::move(p));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Piece& x, const Piece& y) { return x.gain > y.gain; });
  return out;
}

inline bool arcs_meet(const Arc& x, const Arc& y) { return x.contains(y.lo) || y.contains(x.lo); }

inline bool meets_any(const Piece& p, const std::vector<Arc>& arcs) {
  double lo = p.lo.to_double(), hi = p.hi.to_double();
  Arc a = arc_from(lo, std::max(hi, lo), true);
  for (const Arc& b : arcs)
    if (arcs_meet(a, b)) return true;
  return false;
}

inline Piece inflate(const Piece& p, double rel) {
  Mpf w = mul(sub(p.hi, p.lo, Round::nearest), rel, Round::nearest);
  return Piece{sub(p.lo, w, Round::nearest), add(p.hi, w, Round::nearest), p.gain};
}

// Backward search over [t0, t1] of a block: a piece at t0 inside I_a whose
// image at t1 contains `target`. Outer images of I_a from t0 prune the tree.
inline std::optional<Piece> plan_segment(const MapModel& m, const NoiseStream& block_noise, std::size_t t0,
                                         std::size_t t1, const Ball& Ia, const Piece& target, long P,
                                         std::size_t budget, std::size_t arc_cap) {
  const std::size_t L = t1 - t0;
  std::vector<std::vector<Arc>> fwd(L);  // fwd[j] = outer of f^j(I_a), j = 1..L-1 at index j
  std::size_t known = 0;
  try {
    auto imgs = image_enclosure(m, block_noise.shifted(t0), Ia.lo(), Ia.hi(), std::max<std::size_t>(1, L - 1), arc_cap);
    for (std::size_t j = 1; j < L; ++j) {
      fwd[j] = imgs[j - 1].outer;
      if (fwd[j].size() == 1 && fwd[j][0].full) break;
      known = j;
    }
  } catch (const Error&) {
  }
  const Mpf L_a = ball_lo(Ia, P), H_a = ball_hi(Ia, P);
  struct Frame {
    std::size_t t;  // time of the pieces in `cand`
    std::vector<Piece> cand;
    std::size_t next = 0;
  };
  std::vector<Frame> stack;
  stack.push_back({t1 - 1, pull_one(m, target.lo, target.hi, block_noise.at(t1 - 1)), 0});
  std::size_t nodes = 0;
  while (!stack.empty() && nodes < budget) {
    Frame& f = stack.back();
    if (f.next >= f.cand.size()) {
      stack.pop_back();
      continue;
    }
    const Piece& p = f.cand[f.next++];
    ++nodes;
    const std::size_t j = f.t - t0;
    if (j == 0) {
      Piece s = inflate(p, 1e-6);
      if (shift_inside(s.lo, s.hi, L_a, H_a)) return p;
      continue;
    }
    if (j <= known && !meets_any(p, fwd[j])) continue;
    std::size_t t = f.t;
    auto next = pull_one(m, p.lo, p.hi, block_noise.at(t - 1));
    stack.push_back({t - 1, std::move(next), 0});
  }
  return std::nullopt;
}

inline long block_precision(const MapModel& m, std::size_t steps) {
  return 128 + static_cast<long>(std::ceil(static_cast<double>(steps) * std::log2(std::max(2.0, m.deriv_sup))));
}

}  // namespace detail

struct CertificateOptions {
  double kappa = 1.5;
  std::size_t max_blocks = 0;        // 0: every common time up to the horizon
  std::size_t node_budget = 20000;   // per segment search
  std::size_t max_merge = 8;         // common times a failing block may absorb
  std::size_t arc_cap = 1 << 10;
};

/// Witness J(k)_{a,b}: planned segment by segment between the renewal times
/// of I_a inside the block (at each of those I_a has just covered J), with the
/// intermediate checkpoints dropped one by one when a segment has no chain.
inline BlockWitness plan_witness(const MapModel& m, const NoiseStream& noise, std::size_t n_k, std::size_t n_k1,
                                 const Ball& Ia, const Ball& Ib, const CoverFamily* fam_a, int a, int b, long P,
                                 const CertificateOptions& opt) {
  BlockWitness bw;
  bw.a = a;
  bw.b = b;
  const NoiseStream bn = noise.shifted(n_k);
  std::vector<std::size_t> cps{0};
  if (fam_a)
    for (std::size_t t : fam_a->times)
      if (t > n_k && t < n_k1) cps.push_back(t - n_k);
  cps.push_back(n_k1 - n_k);
  detail::Piece target{detail::ball_lo(Ib, P), detail::ball_hi(Ib, P), 0.0};
  target = detail::inflate(target, 1e-9);
  // walk back over checkpoints; cps.back() is the block end
  std::size_t hi_idx = cps.size() - 1;
  while (hi_idx > 0) {
    std::size_t lo_idx = hi_idx - 1;
    std::optional<detail::Piece> got;
    while (true) {
      got = detail::plan_segment(m, bn, cps[lo_idx], cps[hi_idx], Ia, target, P, opt.node_budget, opt.arc_cap);
      if (got || lo_idx == 0) break;
      --lo_idx;
    }
    if (!got) {
      bw.note = "no pullback chain over steps " + std::to_string(cps[lo_idx]) + ".." + std::to_string(cps[hi_idx]);
      return bw;
    }
    target = lo_idx == 0 ? *got : detail::inflate(*got, 1e-6);
    hi_idx = lo_idx;
  }
  Mpf c = mul(add(target.lo, target.hi, Round::nearest), 0.5, Round::nearest);
  Mpf r = mul(sub(target.hi, target.lo, Round::nearest), 0.5, Round::nearest);
  bw.center = c.str();
  bw.radius = r.str();
  bw.found = true;
  return bw;
}

/// Recompute one block from its stored witnesses and set its clause flags.
inline void check_block(const MapModel& m, const NoiseStream& noise, const Ball& I0, const Ball& I1, double kappa,
                        CertBlock& blk, std::vector<WitnessCheck>* out = nullptr, bool fill_bounds = false) {
  blk.e1 = blk.idk = blk.e2 = true;
  const NoiseStream bn = noise.shifted(blk.n_k);
  for (int ab = 0; ab < 4; ++ab) {
    BlockWitness& w = blk.w[ab];
    const Ball& Ia = ab / 2 == 0 ? I0 : I1;
    const Ball& Ib = ab % 2 == 0 ? I0 : I1;
    if (!w.found) {
      blk.e1 = blk.idk = blk.e2 = false;
      if (out) out->emplace_back();
      continue;
    }
    WitnessCheck wc = verify_witness(m, bn, blk.length(), Ia, Ib, w.center, w.radius, blk.prec, kappa);
    if (fill_bounds) w.inv_deriv_bound = wc.bound.str(Round::up);
    bool declared_ok = !w.inv_deriv_bound.empty() && wc.bound <= Mpf::parse(w.inv_deriv_bound, blk.prec, Round::up) &&
                       Mpf::parse(w.inv_deriv_bound, blk.prec, Round::up) < 1.0 / kappa;
    bool cover = wc.contained && wc.diffeo && wc.covers;
    blk.e1 = blk.e1 && wc.contained && wc.covers;
    blk.idk = blk.idk && cover;
    blk.e2 = blk.e2 && wc.diffeo && wc.e2 && declared_ok;
    if (out) out->push_back(std::move(wc));
  }
}

/// e0 surrogate and the increment statistics, from the certified times.
inline void set_increment_stats(HorseshoeCertificate& c) {
  const std::size_t K = c.blocks.size();
  c.increments_mean = c.increments_sd = c.e0_gap = 0.0;
  if (K == 0) {
    c.flags.e0_proxy = false;
    return;
  }
  std::vector<double> d;
  for (const auto& b : c.blocks) d.push_back(static_cast<double>(b.length()));
  auto st = mean_se(d);
  c.increments_mean = st.mean;
  c.increments_sd = K > 1 ? st.sd : 0.0;
  std::size_t h = std::max<std::size_t>(1, K / 2);
  double first = 0.0;
  for (std::size_t q = 0; q < h; ++q) first += d[q];
  first /= static_cast<double>(h);
  c.e0_gap = std::abs(first - st.mean);
  const double tol = 5.0 * c.increments_sd / std::sqrt(static_cast<double>(K));
  double nK = static_cast<double>(c.blocks.back().n_k1 - c.times.front()) / static_cast<double>(K);
  c.flags.e0_proxy = K >= 2 && std::abs(nK - st.mean) <= tol + 1e-12 && c.e0_gap <= tol + 1e-12;
}

inline void set_flags(HorseshoeCertificate& c) {
  c.flags.disjoint = circle_dist(c.I0.center, c.I1.center) > c.I0.radius + c.I1.radius;
  c.flags.e1 = c.flags.idk = c.flags.e2 = !c.blocks.empty();
  for (const auto& b : c.blocks) {
    c.flags.e1 = c.flags.e1 && b.e1;
    c.flags.idk = c.flags.idk && b.idk;
    c.flags.e2 = c.flags.e2 && b.e2;
  }
  set_increment_stats(c);
}

/// Everything the builder needs from the earlier stages.
struct PairData {
  std::size_t i = 0, j = 0;
  Ball I0, I1, J;
  std::vector<std::size_t> times;   // common cover times, sorted
  const CoverFamily* fam0 = nullptr;
  const CoverFamily* fam1 = nullptr;
  std::size_t horizon = 0;
};

/// Blocks between consecutive certified times, starting at n_0 = 0. A block
/// that cannot be certified absorbs the next common time (up to max_merge) so
/// the chain n_k stays inside the common cover times.
inline HorseshoeCertificate build_certificate(const MapModel& m, const NoiseStream& noise, const PairData& pd,
                                              const CertificateOptions& opt = {}) {
  require(opt.kappa > 1.0, ErrorCode::config, "kappa must exceed 1");
  require(!pd.times.empty(), ErrorCode::empty_intersection, "build_certificate: no common cover times");
  HorseshoeCertificate c;
  c.model = m.name;
  c.sigma = noise.sigma;
  c.noise_key = noise.key;
  require(noise.offset == 0, ErrorCode::config, "certificate noise must start at offset 0");
  c.pair_i = pd.i;
  c.pair_j = pd.j;
  c.I0 = pd.I0;
  c.I1 = pd.I1;
  c.J = pd.J;
  c.kappa = opt.kappa;
  c.horizon = pd.horizon;
  c.times.push_back(0);
  std::size_t next = 0;  // index into pd.times of the candidate end
  while (next < pd.times.size() && (opt.max_blocks == 0 || c.blocks.size() < opt.max_blocks)) {
    const std::size_t n_k = c.times.back();
    bool done = false;
    for (std::size_t skip = 0; skip <= opt.max_merge && next + skip < pd.times.size(); ++skip) {
      CertBlock blk;
      blk.n_k = n_k;
      blk.n_k1 = pd.times[next + skip];
      blk.merged = skip;
      blk.prec = detail::block_precision(m, blk.length());
      for (int ab = 0; ab < 4; ++ab) {
        int a = ab / 2, b = ab % 2;
        blk.w[ab] = plan_witness(m, noise, blk.n_k, blk.n_k1, c.ball(a), c.ball(b), a == 0 ? pd.fam0 : pd.fam1, a, b,
                                 blk.prec, opt);
      }
      check_block(m, noise, c.I0, c.I1, c.kappa, blk, nullptr, true);
      if (blk.e1 && blk.idk && blk.e2) {
        c.blocks.push_back(std::move(blk));
        c.times.push_back(c.blocks.back().n_k1);
        next += skip + 1;
        done = true;
        break;
      }
      if (skip == opt.max_merge || next + skip + 1 >= pd.times.size()) {
        c.blocks.push_back(std::move(blk));  // kept for diagnosis, flags false
        c.times.push_back(c.blocks.back().n_k1);
        next += skip + 1;
        done = true;
        break;
      }
    }
    if (!done) break;
    if (!(c.blocks.back().e1 && c.blocks.back().idk && c.blocks.back().e2)) break;
  }
  set_flags(c);
  return c;
}

/// First failing clause, as "clause k (a,b): reason"; empty when all hold.
struct CertificateReport {
  bool ok = false;
  std::vector<std::string> failed_clauses;  // distinct names among disjoint, e1, idk, e2, e0_proxy
  std::string detail;
};

/// Full re-verification from stored data only (fresh enclosure computations).
inline CertificateReport reverify(const MapModel& m, HorseshoeCertificate c) {
  CertificateReport rep;
  const NoiseStream noise = c.noise();
  std::vector<std::string> fails;
  auto note = [&](const std::string& cl, const std::string& d) {
    if (std::find(fails.begin(), fails.end(), cl) == fails.end()) fails.push_back(cl);
    if (rep.detail.empty()) rep.detail = d;
  };
  bool times_ok = !c.times.empty() && c.times.size() == c.blocks.size() + 1;
  for (std::size_t k = 0; times_ok && k < c.blocks.size(); ++k)
    times_ok = c.blocks[k].n_k == c.times[k] && c.blocks[k].n_k1 == c.times[k + 1] && c.times[k] < c.times[k + 1];
  if (!times_ok) note("times", "block times are not the strictly increasing n_k");
  for (std::size_t k = 0; k < c.blocks.size(); ++k) {
    CertBlock blk = c.blocks[k];
    std::vector<WitnessCheck> wcs;
    check_block(m, noise, c.I0, c.I1, c.kappa, blk, &wcs, false);
    for (int ab = 0; ab < 4; ++ab) {
      const auto& wc = wcs[ab];
      std::string where = " block " + std::to_string(k) + " (" + std::to_string(ab / 2) + "," + std::to_string(ab % 2) + ")";
      if (!blk.w[ab].found) {
        note("idk", "missing witness" + where);
        continue;
      }
      if (!(wc.contained && wc.covers)) note("e1", "covering fails" + where + ": " + wc.reason);
      if (!(wc.contained && wc.diffeo && wc.covers)) note("idk", "witness fails" + where + ": " + wc.reason);
      bool stored = !blk.w[ab].inv_deriv_bound.empty();
      bool e2 = wc.diffeo && wc.e2 && stored && wc.bound <= Mpf::parse(blk.w[ab].inv_deriv_bound, blk.prec, Round::up) &&
                Mpf::parse(blk.w[ab].inv_deriv_bound, blk.prec, Round::up) < 1.0 / c.kappa;
      if (!e2) note("e2", "derivative bound fails" + where);
    }
  }
  HorseshoeCertificate fresh = c;
  set_increment_stats(fresh);
  if (!(circle_dist(c.I0.center, c.I1.center) > c.I0.radius + c.I1.radius)) note("disjoint", "I0 and I1 intersect");
  if (!fresh.flags.e0_proxy) note("e0_proxy", "increment means disagree");
  if (c.blocks.empty()) note("e1", "no blocks");
  rep.failed_clauses = fails;
  rep.ok = fails.empty();
  return rep;
}

struct ShadowingProof {
  std::string word;
  std::vector<std::size_t> times;        // n_0..n_{L-1}
  std::vector<std::pair<Mpf, Mpf>> K;    // K_0 ⊇ K_1 ⊇ ... at time 0, coordinates of I_{word_0}
  Mpf x{128};                            // witness point
  long prec = 0;
  bool verified = false;
};

class PullbackEmpty : public Error {
 public:
  explicit PullbackEmpty(const std::string& what) : Error(ErrorCode::pullback_empty, what) {}
};

namespace detail {

// Preimage of [A, B] (coordinates of I_b) through a verified witness chain,
// returned in coordinates of I_a.
inline std::pair<Mpf, Mpf> pull_through(const MapModel& m, const NoiseStream& bn, const WitnessCheck& wc, Mpf A, Mpf B) {
  A = add(A, static_cast<double>(wc.end_shift), Round::nearest);
  B = add(B, static_cast<double>(wc.end_shift), Round::nearest);
  for (std::size_t t = wc.path.size(); t-- > 0;) {
    const ChainStep& s = wc.path[t];
    const double w = bn.at(t);
    Mpf va = sub(A, w, Round::nearest), vb = sub(B, w, Round::nearest);
    Mpf ya = m.kernel->inverse(va, s.branch, Round::nearest), yb = m.kernel->inverse(vb, s.branch, Round::nearest);
    bool inc = m.branches[s.branch].increasing;
    A = add(inc ? ya : yb, static_cast<double>(s.shift), Round::nearest);
    B = add(inc ? yb : ya, static_cast<double>(s.shift), Round::nearest);
  }
  A = add(A, static_cast<double>(wc.start_shift), Round::nearest);
  B = add(B, static_cast<double>(wc.start_shift), Round::nearest);
  return {A, B};
}

inline bool point_in_ball(const Mpf& x, const Ball& B, long P) {
  Mpf lo = ball_lo(B, P), hi = ball_hi(B, P);
  return shift_inside(x, x, lo, hi).has_value();
}

}  // namespace detail

/// Nested pullback of I_{word_{L-1}} through the witness chain of the word,
/// a midpoint witness x, and a high-precision re-simulation of x.
inline ShadowingProof symbolic_shadow(const MapModel& m, const HorseshoeCertificate& c, const std::string& word) {
  const std::size_t L = word.size();
  require(L >= 1 && L <= c.blocks.size() + 1, ErrorCode::config, "symbolic_shadow: word longer than the certified blocks");
  for (char ch : word) require(ch == '0' || ch == '1', ErrorCode::config, "symbolic_shadow: word must be binary");
  const NoiseStream noise = c.noise();
  ShadowingProof sp;
  sp.word = word;
  sp.times.assign(c.times.begin(), c.times.begin() + static_cast<std::ptrdiff_t>(L));
  const std::size_t total = sp.times.back() - sp.times.front();
  sp.prec = detail::block_precision(m, total) + 64;
  const long P = sp.prec;
  auto sym = [&](std::size_t k) { return word[k] - '0'; };
  // chains of the word's blocks, re-verified at the shadowing precision
  std::vector<WitnessCheck> chain;
  for (std::size_t k = 0; k + 1 < L; ++k) {
    const CertBlock& blk = c.blocks[k];
    const BlockWitness& w = blk.w[2 * sym(k) + sym(k + 1)];
    if (!w.found) throw PullbackEmpty("no witness for block " + std::to_string(k));
    auto wc = verify_witness(m, noise.shifted(blk.n_k), blk.length(), c.ball(sym(k)), c.ball(sym(k + 1)), w.center,
                             w.radius, blk.prec, c.kappa);
    if (!(wc.contained && wc.diffeo && wc.covers)) throw PullbackEmpty("block " + std::to_string(k) + ": " + wc.reason);
    chain.push_back(std::move(wc));
  }
  for (std::size_t level = 0; level < L; ++level) {
    const Ball& B = c.ball(sym(level));
    Mpf A = detail::ball_lo(B, P), Bh = detail::ball_hi(B, P);
    for (std::size_t k = level; k-- > 0;) {
      auto pr = detail::pull_through(m, noise.shifted(c.blocks[k].n_k), chain[k], A, Bh);
      A = pr.first;
      Bh = pr.second;
      if (!(A < Bh)) throw PullbackEmpty("empty pullback at level " + std::to_string(level));
    }
    if (level > 0) {
      const auto& prev = sp.K.back();
      if (!(A > prev.first && Bh < prev.second))
        throw PullbackEmpty("nesting fails at level " + std::to_string(level));
    }
    sp.K.emplace_back(A, Bh);
  }
  sp.x = mul(add(sp.K.back().first, sp.K.back().second, Round::nearest), 0.5, Round::nearest);
  // re-simulation from x
  Mpf z = sp.x;
  std::size_t t = 0;
  bool ok = detail::point_in_ball(z, c.ball(sym(0)), P);
  for (std::size_t k = 1; k < L && ok; ++k) {
    for (; t < sp.times[k]; ++t) {
      z = sub(z, static_cast<double>(floor_long(z)), Round::nearest);
      z = add(m.kernel->lift(z, Round::nearest), noise.at(t), Round::nearest);
    }
    ok = detail::point_in_ball(z, c.ball(sym(k)), P);
  }
  sp.verified = ok;
  if (!ok) throw PullbackEmpty("re-simulated witness leaves the coded balls for word " + word);
  return sp;
}

/// All binary words of length L.
inline std::vector<std::string> binary_words(std::size_t L) {
  std::vector<std::string> out;
  for (std::size_t v = 0; v < (std::size_t{1} << L); ++v) {
    std::string s(L, '0');
    for (std::size_t q = 0; q < L; ++q)
      if (v >> (L - 1 - q) & 1) s[q] = '1';
    out.push_back(s);
  }
  return out;
}

}  // namespace rhlab
