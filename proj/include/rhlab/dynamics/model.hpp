#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "rhlab/util/error.hpp"
#include "rhlab/util/mpf.hpp"
#include "rhlab/util/numeric.hpp"

namespace rhlab {

/// Monotone piece [lo, hi] of the lift F on the fundamental domain [0, 1].
struct Branch {
  double lo = 0.0;
  double hi = 1.0;
  bool increasing = true;
};

/// Evaluation backend for a lifted circle map F : [0, 1] -> R with f = F mod 1.
/// Directed overloads return one-sided bounds on the exact value; this is what
/// the interval enclosures are built from.
class MapKernel {
 public:
  virtual ~MapKernel() = default;

  virtual double lift(double x) const = 0;
  virtual double lift(double x, Round r) const = 0;
  virtual Mpf lift(const Mpf& x, Round r) const = 0;

  virtual double deriv(double x) const = 0;
  virtual Mpf deriv(const Mpf& x, Round r) const = 0;

  /// Bounds on |F'| over [a, b], where [a, b] lies inside one branch.
  virtual double min_abs_deriv(double a, double b, Round r) const = 0;
  virtual double max_abs_deriv(double a, double b, Round r) const = 0;
  virtual Mpf min_abs_deriv(const Mpf& a, const Mpf& b, Round r) const = 0;

  /// The point of branch `k` mapped to v by F (v inside that branch's image).
  virtual double inverse(double v, std::size_t k, Round r) const = 0;
  virtual Mpf inverse(const Mpf& v, std::size_t k, Round r) const = 0;
};

template <class Law>
class LawKernel final : public MapKernel {
 public:
  double lift(double x) const override { return Law::lift(x, Round::nearest); }
  double lift(double x, Round r) const override { return Law::lift(x, r); }
  Mpf lift(const Mpf& x, Round r) const override { return Law::lift(x, r); }
  double deriv(double x) const override { return Law::deriv(x, Round::nearest); }
  Mpf deriv(const Mpf& x, Round r) const override { return Law::deriv(x, r); }
  double min_abs_deriv(double a, double b, Round r) const override { return Law::min_abs_deriv(a, b, r); }
  double max_abs_deriv(double a, double b, Round r) const override { return Law::max_abs_deriv(a, b, r); }
  Mpf min_abs_deriv(const Mpf& a, const Mpf& b, Round r) const override { return Law::min_abs_deriv(a, b, r); }
  double inverse(double v, std::size_t k, Round r) const override { return Law::inverse(v, k, r); }
  Mpf inverse(const Mpf& v, std::size_t k, Round r) const override { return Law::inverse(v, k, r); }
};

struct MapModel {
  std::string name;
  int dim = 1;
  std::vector<double> critical_points;  // sorted, in [0, 1)
  std::vector<Branch> branches;         // cover [0, 1] in order
  double B = 2.0;
  double beta = 1.0;
  /// Near each critical point |f'(y)| = crit_coeff * |y - c|^beta exactly.
  double crit_coeff = 0.0;
  /// Radius around C on which that power law is exact (0: only at C itself).
  double power_law_radius = 0.0;
  double deriv_sup = 1.0;
  /// K with |log|f'(u)| - log|f'(v)|| <= K |u - v| / min(d(u), d(v)) inside a
  /// branch, d = dist to C (d read as 1 when C is empty).
  double distortion_coeff = 0.0;
  std::shared_ptr<const MapKernel> kernel;

  double lift(double x) const { return kernel->lift(x); }
  double eval(double x) const { return wrap01(kernel->lift(x)); }
  double deriv(double x) const { return kernel->deriv(x); }
  double inv_deriv_norm(double x) const { return 1.0 / std::abs(kernel->deriv(x)); }

  bool has_critical() const { return !critical_points.empty(); }

  /// Circle distance to the critical set; +inf when the set is empty.
  double critical_distance(double x) const {
    double d = kInf;
    for (double c : critical_points) d = std::min(d, circle_dist(x, c));
    return d;
  }

  std::size_t branch_index(double x) const {
    for (std::size_t k = 0; k + 1 < branches.size(); ++k)
      if (x < branches[k].hi) return k;
    return branches.empty() ? 0 : branches.size() - 1;
  }

  /// Upper bound on theta for integrable tilts |f'|^{-theta}.
  double theta_cap() const { return 0.9 / beta; }
};

/// One step of the random composition: F(x) + w reduced into [0, 1).
inline double iterate(const MapModel& m, double x, double w) { return wrap01(m.lift(x) + w); }

/// Two-sided derivative bound of (H1): B^{-1} d^beta <= |f'| <= B d^{-beta};
/// an empty critical set reads as d^beta = 1.
inline bool satisfies_h1(const MapModel& m, double x) {
  double d = m.critical_distance(x);
  double dp = std::isinf(d) ? 1.0 : std::pow(d, m.beta);
  double a = std::abs(m.deriv(x));
  return a >= dp / m.B && a <= m.B / dp;
}

}  // namespace rhlab
