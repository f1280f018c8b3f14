#pragma once

#include <cstddef>
#include <vector>

#include "rhlab/covering/arc.hpp"
#include "rhlab/dynamics/model.hpp"
#include "rhlab/dynamics/noise.hpp"

namespace rhlab {

inline constexpr std::size_t kDefaultArcCap = std::size_t{1} << 14;

/// Inner and outer hulls of one iterate of an arc set.
struct Enclosure {
  std::vector<Arc> inner;   // every point is attained
  std::vector<Arc> outer;   // every attained point is inside
  std::size_t pieces = 0;   // monotone pieces before merging

  double min_crit_distance(const MapModel& m) const {
    double d = kInf;
    for (double c : m.critical_points)
      for (const Arc& a : outer) d = std::min(d, arc_distance(a, c));
    return d;
  }
};

namespace detail {

// Lifted image [lo, hi] shifted by w, as a fixed arc with directed rounding.
inline Arc shifted_arc(double lo, double hi, double w, bool outer) {
  Round rl = outer ? Round::down : Round::up;
  Round rh = outer ? Round::up : Round::down;
  double len = dround::sub(hi, lo, outer ? Round::up : Round::down);
  if (outer && len >= 1.0 - 0x1p-58) return Arc::whole();
  if (!outer && len >= 1.0) return Arc::whole();
  if (!outer && len <= 0x1p-60) return Arc{to_fixed(lo, rl) + to_fixed(w, rl), 0, false};
  Fixed a = to_fixed(lo, rl) + to_fixed(w, rl);
  Fixed b = to_fixed(hi, rh) + to_fixed(w, rh);
  if (!outer && len >= 1.0 - 0x1p-58) return Arc{a, ~Fixed{0} - 64, false};
  return Arc{a, static_cast<Fixed>(b - a), false};
}

inline Fixed branch_fixed(double x) {
  Fixed u = to_fixed(x, Round::down);
  require(to_fixed(x, Round::up) == u, ErrorCode::config, "branch boundaries must be dyadic");
  return u;
}

}  // namespace detail

/// Image pieces of one arc under x -> F(x) + w, split into monotone branches.
/// Pieces are appended unmerged.
inline void step_arc(const MapModel& m, const Arc& a, double w, bool outer, std::vector<Arc>& out) {
  if (a.full) {
    out.push_back(Arc::whole());
    return;
  }
  using U = unsigned __int128;
  const U turn = static_cast<U>(1) << 64;
  const U L = a.lo, H = U(a.lo) + U(a.len);
  for (U t = 0; t <= 1; ++t) {
    for (std::size_t k = 0; k < m.branches.size(); ++k) {
      const Branch& br = m.branches[k];
      U blo = t * turn + detail::branch_fixed(br.lo);
      U bhi = t * turn + (br.hi >= 1.0 ? turn : U(detail::branch_fixed(br.hi)));
      U pl = std::max(L, blo), ph = std::min(H, bhi);
      if (pl > ph) continue;
      if (!outer && pl == ph) continue;
      double x0 = fixed_to_double(pl - t * turn, outer ? Round::down : Round::up);
      double x1 = fixed_to_double(ph - t * turn, outer ? Round::up : Round::down);
      x0 = std::max(x0, br.lo);
      x1 = std::min(x1, br.hi);
      if (x0 > x1) continue;
      Round rl = outer ? Round::down : Round::up;
      Round rh = outer ? Round::up : Round::down;
      double lo, hi;
      if (br.increasing) {
        lo = m.kernel->lift(x0, rl);
        hi = m.kernel->lift(x1, rh);
      } else {
        lo = m.kernel->lift(x1, rl);
        hi = m.kernel->lift(x0, rh);
      }
      if (lo > hi) {
        if (outer) std::swap(lo, hi);
        else continue;
      }
      out.push_back(detail::shifted_arc(lo, hi, w, outer));
    }
  }
}

/// One step of both hulls. Throws branch_explosion past `cap` pieces.
inline Enclosure step_enclosure(const MapModel& m, const Enclosure& e, double w, std::size_t cap = kDefaultArcCap) {
  Enclosure r;
  std::vector<Arc> in, out;
  for (const Arc& a : e.inner) step_arc(m, a, w, false, in);
  for (const Arc& a : e.outer) step_arc(m, a, w, true, out);
  r.pieces = out.size();
  if (r.pieces > cap)
    fail(ErrorCode::branch_explosion, "image split into " + std::to_string(r.pieces) + " arcs (cap " + std::to_string(cap) + ")");
  r.inner = merge_arcs(std::move(in));
  r.outer = merge_arcs(std::move(out));
  return r;
}

inline Enclosure enclosure_of(double a, double b) {
  Enclosure e;
  e.inner = {arc_from(a, b, false)};
  e.outer = {arc_from(a, b, true)};
  e.pieces = 1;
  return e;
}

/// Hulls of f^j_omega(I) for j = 1..steps; I = [a, b] as a lifted interval.
inline std::vector<Enclosure> image_enclosure(const MapModel& m, const NoiseStream& noise, double a, double b,
                                              std::size_t steps, std::size_t cap = kDefaultArcCap) {
  require(steps >= 1, ErrorCode::config, "image_enclosure needs at least one step");
  require(b > a, ErrorCode::config, "image_enclosure needs a non-degenerate arc");
  std::vector<Enclosure> out;
  out.reserve(steps);
  Enclosure cur = enclosure_of(a, b);
  for (std::size_t j = 0; j < steps; ++j) {
    cur = step_enclosure(m, cur, noise.at(j), cap);
    out.push_back(cur);
  }
  return out;
}

}  // namespace rhlab
