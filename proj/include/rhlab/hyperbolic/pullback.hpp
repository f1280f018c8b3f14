#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "rhlab/hyperbolic/times.hpp"
#include "rhlab/util/mpf.hpp"

namespace rhlab {

/// V = the component of (f^n)^{-1} B_delta(x_n) that follows the orbit of x_0,
/// in lifted coordinates at each step.
struct Pullback {
  std::size_t n = 0;
  long prec = 0;
  std::vector<Mpf> lo, hi;         // V_k for k = 0..n
  std::vector<long> lift_shift;    // q_k with F(x_k) + w_k = x_{k+1} + q_k
  bool clipped = false;            // some preimage hit a fold or critical point
  std::size_t clipped_at = 0;
};

namespace detail {

inline long pullback_prec(const RandomOrbit& o, std::size_t n, double delta) {
  double l2 = std::log2(2.0 * delta);
  for (std::size_t k = 0; k < n; ++k) l2 += o.log_inv_deriv[k] / std::log(2.0);
  return 64 + static_cast<long>(std::ceil(std::max(0.0, -l2)));
}

}  // namespace detail

/// Interval pullback along the orbit branches, in MPFR. Single-branch maps are
/// inverted on the whole line; otherwise preimages are clipped to the branch.
inline Pullback pull_back_ball(const RandomOrbit& o, std::size_t n, double delta) {
  require(n >= 1 && n <= o.length(), ErrorCode::config, "pull_back_ball: bad time");
  const MapModel& m = o.model;
  Pullback pb;
  pb.n = n;
  pb.prec = detail::pullback_prec(o, n, delta);
  const long P = pb.prec;
  pb.lo.assign(n + 1, Mpf(P));
  pb.hi.assign(n + 1, Mpf(P));
  pb.lift_shift.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) pb.lift_shift[k] = static_cast<long>(std::floor(m.lift(o.states[k]) + o.noise.at(k)));
  pb.lo[n] = sub(Mpf(o.states[n], P), delta, Round::nearest);
  pb.hi[n] = add(Mpf(o.states[n], P), delta, Round::nearest);
  const bool single = m.branches.size() == 1;
  for (std::size_t k = n; k-- > 0;) {
    std::size_t bi = m.branch_index(o.states[k]);
    const Branch& br = m.branches[bi];
    double shift = static_cast<double>(pb.lift_shift[k]) - o.noise.at(k);
    Mpf a = add(pb.lo[k + 1], shift, Round::nearest), b = add(pb.hi[k + 1], shift, Round::nearest);
    if (!single) {
      Mpf fl = m.kernel->lift(Mpf(br.lo, P), Round::nearest), fh = m.kernel->lift(Mpf(br.hi, P), Round::nearest);
      Mpf ilo = br.increasing ? fl : fh, ihi = br.increasing ? fh : fl;
      if (a < ilo) {
        a = ilo;
        if (!pb.clipped) pb.clipped_at = k;
        pb.clipped = true;
      }
      if (b > ihi) {
        b = ihi;
        if (!pb.clipped) pb.clipped_at = k;
        pb.clipped = true;
      }
    }
    Mpf ya = m.kernel->inverse(a, bi, Round::nearest), yb = m.kernel->inverse(b, bi, Round::nearest);
    if (br.increasing) {
      pb.lo[k] = ya;
      pb.hi[k] = yb;
    } else {
      pb.lo[k] = yb;
      pb.hi[k] = ya;
    }
  }
  return pb;
}

/// Forward image of a lifted point of V_0 along the same lifts; z[k] for k = 0..n
/// and the log of |df^n| as a sum of per-step logs.
struct HpTrajectory {
  std::vector<Mpf> z;
  std::vector<Mpf> log_deriv;  // log |F'(z_k)|
};

inline HpTrajectory hp_forward(const RandomOrbit& o, const Pullback& pb, const Mpf& z0) {
  HpTrajectory t;
  t.z.reserve(pb.n + 1);
  t.log_deriv.reserve(pb.n);
  t.z.push_back(z0);
  for (std::size_t k = 0; k < pb.n; ++k) {
    const Mpf& z = t.z.back();
    t.log_deriv.push_back(log(abs(o.model.kernel->deriv(z, Round::nearest)), Round::nearest));
    double shift = o.noise.at(k) - static_cast<double>(pb.lift_shift[k]);
    t.z.push_back(add(o.model.kernel->lift(z, Round::nearest), shift, Round::nearest));
  }
  return t;
}

struct HyperbolicBallReport {
  std::size_t n = 0;
  std::size_t pairs = 0;
  bool clipped = false;
  std::size_t contraction_violations = 0;         // with the 1e-9 slack
  std::size_t contraction_violations_strict = 0;  // without it
  std::size_t distortion_violations = 0;
  double C = 0.0;
  double max_distortion_ratio = 0.0;  // max of log|df z / df y| / |f^n z - f^n y|
  double max_contraction_ratio = 0.0; // max over k of |z_{n-k} - y_{n-k}| / (sigma^k |z_n - y_n|)
  double V_width = 0.0;
};

/// Contraction and bounded distortion for `pairs` random pairs in V_n^delta.
inline HyperbolicBallReport check_hyperbolic_ball(const RandomOrbit& o, std::size_t n, double delta, const HTParams& p,
                                                  std::size_t pairs, std::uint64_t key) {
  HyperbolicBallReport rep;
  rep.n = n;
  rep.C = distortion_constant(o.model, p);
  Pullback pb = pull_back_ball(o, n, delta);
  rep.clipped = pb.clipped;
  const long P = pb.prec;
  Mpf width = sub(pb.hi[0], pb.lo[0], Round::nearest);
  rep.V_width = width.to_double();
  Mpf sig = sqrt(Mpf(p.sigma2, P), Round::nearest);
  UniformStream u(key);
  for (std::size_t q = 0; q < pairs; ++q) {
    Mpf z0 = add(pb.lo[0], mul(width, u(), Round::nearest), Round::nearest);
    Mpf y0 = add(pb.lo[0], mul(width, u(), Round::nearest), Round::nearest);
    if (z0 == y0) continue;
    auto tz = hp_forward(o, pb, z0), ty = hp_forward(o, pb, y0);
    ++rep.pairs;
    Mpf dn = abs(sub(tz.z[n], ty.z[n], Round::nearest));
    Mpf sk(1.0, P);
    for (std::size_t k = 1; k <= n; ++k) {
      sk = mul(sk, sig, Round::nearest);
      Mpf bound = mul(sk, dn, Round::nearest);
      Mpf dk = abs(sub(tz.z[n - k], ty.z[n - k], Round::nearest));
      if (dk > bound) ++rep.contraction_violations_strict;
      if (dk > add(bound, 1e-9, Round::nearest)) ++rep.contraction_violations;
      if (bound > 0.0) rep.max_contraction_ratio = std::max(rep.max_contraction_ratio, div(dk, bound, Round::nearest).to_double());
    }
    Mpf lr(0.0, P);
    for (std::size_t k = 0; k < n; ++k) lr = add(lr, sub(tz.log_deriv[k], ty.log_deriv[k], Round::nearest), Round::nearest);
    double ratio = 0.0;
    if (dn > 0.0) ratio = div(abs(lr), dn, Round::nearest).to_double();
    rep.max_distortion_ratio = std::max(rep.max_distortion_ratio, ratio);
    if (lr > mul(dn, rep.C, Round::nearest)) ++rep.distortion_violations;
  }
  return rep;
}

}  // namespace rhlab
