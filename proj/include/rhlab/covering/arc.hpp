#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rhlab/util/mpf.hpp"

namespace rhlab {

// Circle points are held as 64-bit fixed point, x = u * 2^-64, so reduction
// mod 1 is integer wrap-around and every comparison is exact. Rounding only
// happens at the double <-> fixed boundary and is always directed.
using Fixed = std::uint64_t;

inline constexpr double kTwo64 = 18446744073709551616.0;

/// Directed conversion of any double to its fractional part in fixed point.
inline Fixed to_fixed(double v, Round r) {
  double f;
  if (v >= -0.5 && v < 0.0) {
    // v + 1 can be inexact here; scale first, the product is exact
    double t = std::ldexp(v, 64);
    double ti = r == Round::up ? std::ceil(t) : std::floor(t);
    return static_cast<Fixed>(static_cast<std::int64_t>(ti));
  }
  f = v - std::floor(v);  // exact outside (-1/2, 0)
  double t = std::ldexp(f, 64);
  double ti = r == Round::up ? std::ceil(t) : std::floor(t);
  if (ti >= kTwo64) return 0;  // wraps to 0 = 1 on the circle
  return static_cast<Fixed>(ti);
}

/// Fixed point on [0, 2^64] (the upper end passed as a 128-bit lift) to double.
inline double fixed_to_double(unsigned __int128 u, Round r) {
  if (u >= (static_cast<unsigned __int128>(1) << 64)) {
    unsigned __int128 rest = u - (static_cast<unsigned __int128>(1) << 64);
    return 1.0 + fixed_to_double(rest, r);
  }
  auto v = static_cast<std::uint64_t>(u);
  double hi = std::ldexp(static_cast<double>(v >> 11), -53);
  if (r == Round::up && (v & 0x7FF) != 0) hi += 0x1p-53;
  return hi;
}

inline double fixed_to_double(Fixed u) { return std::ldexp(static_cast<double>(u), -64); }

/// Closed arc {lo + s : 0 <= s <= len} on the circle; `full` is the whole circle.
struct Arc {
  Fixed lo = 0;
  Fixed len = 0;
  bool full = false;

  static Arc whole() { return Arc{0, ~Fixed{0}, true}; }

  bool contains(Fixed x) const { return full || static_cast<Fixed>(x - lo) <= len; }
  /// The other arc lies inside this one.
  bool covers(const Arc& o) const {
    if (full) return true;
    if (o.full) return false;
    Fixed off = o.lo - lo;
    return off <= len && o.len <= len - off;
  }
  Fixed hi() const { return lo + len; }
  double length() const { return full ? 1.0 : fixed_to_double(len); }
};

/// Arc for the real interval [a, b] (b - a < 1), rounded inward or outward.
inline Arc arc_from(double a, double b, bool outer) {
  if (outer && dround::sub(b, a, Round::up) >= 1.0 - 0x1p-58) return Arc::whole();
  if (!outer && dround::sub(b, a, Round::down) >= 1.0) return Arc::whole();
  Round lr = outer ? Round::down : Round::up;
  Round hr = outer ? Round::up : Round::down;
  Fixed lo = to_fixed(a, lr), hi = to_fixed(b, hr);
  double approx = b - a;
  if (!outer) {
    // lengths within a few ticks of 0 or 1 would wrap the modular difference
    if (approx <= 0x1p-60) return Arc{lo, 0, false};
    if (approx >= 1.0 - 0x1p-58) return Arc{lo, ~Fixed{0} - 64, false};
  }
  return Arc{lo, static_cast<Fixed>(hi - lo), false};
}

inline Arc ball_arc(double center, double radius, bool outer) {
  return arc_from(center - radius, center + radius, outer);
}

/// Lower bound on the circle distance from the arc to the point c.
inline double arc_distance(const Arc& a, double c) {
  if (a.full) return 0.0;
  Fixed cl = to_fixed(c, Round::down), ch = to_fixed(c, Round::up);
  if (a.contains(cl) || a.contains(ch)) return 0.0;
  Fixed d1 = a.lo - ch;      // c below the arc
  Fixed d2 = cl - a.hi();    // c above the arc
  double d = fixed_to_double(std::min(d1, d2), Round::down);
  return std::min(d, 0.5);
}

/// Union of arcs as sorted disjoint arcs. Touching or overlapping arcs are
/// joined; that is sound for inner hulls too since no gap is filled in.
inline std::vector<Arc> merge_arcs(std::vector<Arc> in) {
  std::vector<Arc> out;
  for (const Arc& a : in)
    if (a.full) return {Arc::whole()};
  if (in.empty()) return out;
  std::sort(in.begin(), in.end(), [](const Arc& x, const Arc& y) { return x.lo < y.lo; });
  // 128-bit lifted coordinates; the tail spilling past one turn is folded back
  using U = unsigned __int128;
  const U turn = static_cast<U>(1) << 64;
  std::vector<std::pair<U, U>> iv;
  iv.reserve(in.size());
  for (const Arc& a : in) iv.emplace_back(U(a.lo), U(a.lo) + U(a.len));
  std::vector<std::pair<U, U>> m;
  for (auto& p : iv) {
    if (!m.empty() && p.first <= m.back().second) {
      m.back().second = std::max(m.back().second, p.second);
    } else {
      m.push_back(p);
    }
  }
  while (m.size() > 1 && m.back().second >= m.front().first + turn) {
    m.back().second = std::max(m.back().second, m.front().second + turn);
    m.erase(m.begin());
  }
  for (auto& p : m) {
    if (p.second >= p.first + turn) return {Arc::whole()};
    out.push_back(Arc{static_cast<Fixed>(p.first), static_cast<Fixed>(p.second - p.first), false});
  }
  return out;
}

inline double total_length(const std::vector<Arc>& arcs) {
  double s = 0.0;
  for (const Arc& a : arcs) s += a.length();
  return std::min(s, 1.0);
}

}  // namespace rhlab
