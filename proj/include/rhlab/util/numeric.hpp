#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace rhlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Shortest representation that parses back to the same double.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// Neumaier compensated sum with a fixed reference subtracted from every
/// term, so a run of identical summands reproduces that value exactly.
class ShiftedSum {
 public:
  ShiftedSum() = default;
  explicit ShiftedSum(double ref) : ref_(ref), has_ref_(true) {}

  void add(double v) {
    if (!has_ref_) {
      ref_ = v;
      has_ref_ = true;
    }
    double d = v - ref_;
    double t = s_ + d;
    if (std::abs(s_) >= std::abs(d))
      c_ += (s_ - t) + d;
    else
      c_ += (d - t) + s_;
    s_ = t;
    ++n_;
  }
  std::size_t count() const { return n_; }
  double mean() const { return n_ == 0 ? 0.0 : ref_ + (s_ + c_) / static_cast<double>(n_); }

 private:
  double ref_ = 0.0;
  bool has_ref_ = false;
  double s_ = 0.0;
  double c_ = 0.0;
  std::size_t n_ = 0;
};

struct MeanSe {
  double mean = 0.0;
  double std_err = 0.0;
  double sd = 0.0;
};

/// Mean and standard error with the deviations taken from a shifted mean;
/// constant samples give std_err exactly zero.
inline MeanSe mean_se(std::span<const double> xs) {
  MeanSe out;
  if (xs.empty()) return out;
  ShiftedSum s(xs.front());
  for (double x : xs) s.add(x);
  out.mean = s.mean();
  if (xs.size() < 2) return out;
  double acc = 0.0;
  for (double x : xs) {
    double d = x - out.mean;
    acc += d * d;
  }
  out.sd = std::sqrt(acc / static_cast<double>(xs.size() - 1));
  out.std_err = out.sd / std::sqrt(static_cast<double>(xs.size()));
  return out;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  LineFit f;
  f.n = std::min(x.size(), y.size());
  if (f.n < 2) return f;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < f.n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= f.n;
  my /= f.n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < f.n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

/// Circle distance on R/Z.
inline double circle_dist(double a, double b) {
  double d = std::abs(a - b);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}

/// Reduction into [0, 1).
inline double wrap01(double y) {
  double r = y - std::floor(y);
  return r >= 1.0 ? 0.0 : r;
}

}  // namespace rhlab
