#pragma once

// Thin RAII layer over MPFR. Every arithmetic call takes an explicit
// rounding direction so interval code can widen outward or shrink inward.

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "rhlab/util/error.hpp"

namespace rhlab {

enum class Round { down, up, nearest };

inline Round opposite(Round r) {
  return r == Round::down ? Round::up : (r == Round::up ? Round::down : Round::nearest);
}

inline mpfr_rnd_t to_mpfr(Round r) {
  switch (r) {
    case Round::down: return MPFR_RNDD;
    case Round::up: return MPFR_RNDU;
    default: return MPFR_RNDN;
  }
}

class Mpf {
 public:
  explicit Mpf(long prec = 128) {
    mpfr_init2(v_, prec);
    mpfr_set_zero(v_, 1);
  }
  Mpf(double d, long prec) {
    mpfr_init2(v_, std::max<long>(prec, 53));
    mpfr_set_d(v_, d, MPFR_RNDN);
  }
  Mpf(const Mpf& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  Mpf(Mpf&& o) noexcept {
    mpfr_init2(v_, MPFR_PREC_MIN);
    mpfr_swap(v_, o.v_);
  }
  Mpf& operator=(const Mpf& o) {
    if (this != &o) {
      mpfr_set_prec(v_, mpfr_get_prec(o.v_));
      mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    return *this;
  }
  Mpf& operator=(Mpf&& o) noexcept {
    mpfr_swap(v_, o.v_);
    return *this;
  }
  ~Mpf() { mpfr_clear(v_); }

  mpfr_ptr raw() { return v_; }
  mpfr_srcptr raw() const { return v_; }
  long prec() const { return static_cast<long>(mpfr_get_prec(v_)); }

  double to_double(Round r = Round::nearest) const { return mpfr_get_d(v_, to_mpfr(r)); }
  bool is_finite() const { return mpfr_number_p(v_) != 0; }

  /// Copy rounded to a new precision.
  Mpf with_prec(long p, Round r = Round::nearest) const {
    Mpf out(p);
    mpfr_set(out.v_, v_, to_mpfr(r));
    return out;
  }

  /// Decimal string that parses back to the same value at this precision
  /// (or to a value on the requested side of it).
  std::string str(Round r = Round::nearest) const {
    if (mpfr_zero_p(v_)) return "0";
    if (!mpfr_number_p(v_)) return mpfr_nan_p(v_) ? "nan" : (mpfr_sgn(v_) > 0 ? "inf" : "-inf");
    mpfr_exp_t e = 0;
    char* digits = mpfr_get_str(nullptr, &e, 10, 0, v_, to_mpfr(r));
    std::string d(digits);
    mpfr_free_str(digits);
    std::string out;
    std::size_t p = 0;
    if (d[0] == '-') {
      out.push_back('-');
      p = 1;
    }
    out.push_back(d[p]);
    if (d.size() > p + 1) {
      out.push_back('.');
      out.append(d, p + 1, std::string::npos);
      while (out.back() == '0') out.pop_back();
      if (out.back() == '.') out.pop_back();
    }
    if (e - 1 != 0) out += "e" + std::to_string(static_cast<long>(e - 1));
    return out;
  }

  static Mpf parse(const std::string& s, long prec, Round r = Round::nearest) {
    Mpf out(prec);
    if (mpfr_set_str(out.v_, s.c_str(), 10, to_mpfr(r)) != 0)
      fail(ErrorCode::io, "malformed multiprecision literal: " + s);
    return out;
  }

 private:
  mpfr_t v_;
};

inline long out_prec(const Mpf& a, const Mpf& b) { return std::max(a.prec(), b.prec()); }

inline Mpf add(const Mpf& a, const Mpf& b, Round r) {
  Mpf o(out_prec(a, b));
  mpfr_add(o.raw(), a.raw(), b.raw(), to_mpfr(r));
  return o;
}
inline Mpf add(const Mpf& a, double b, Round r) {
  Mpf o(a.prec());
  mpfr_add_d(o.raw(), a.raw(), b, to_mpfr(r));
  return o;
}
inline Mpf sub(const Mpf& a, const Mpf& b, Round r) {
  Mpf o(out_prec(a, b));
  mpfr_sub(o.raw(), a.raw(), b.raw(), to_mpfr(r));
  return o;
}
inline Mpf sub(const Mpf& a, double b, Round r) {
  Mpf o(a.prec());
  mpfr_sub_d(o.raw(), a.raw(), b, to_mpfr(r));
  return o;
}
inline Mpf sub(double a, const Mpf& b, Round r) {
  Mpf o(b.prec());
  mpfr_d_sub(o.raw(), a, b.raw(), to_mpfr(r));
  return o;
}
inline Mpf mul(const Mpf& a, const Mpf& b, Round r) {
  Mpf o(out_prec(a, b));
  mpfr_mul(o.raw(), a.raw(), b.raw(), to_mpfr(r));
  return o;
}
inline Mpf mul(const Mpf& a, double b, Round r) {
  Mpf o(a.prec());
  mpfr_mul_d(o.raw(), a.raw(), b, to_mpfr(r));
  return o;
}
inline Mpf div(const Mpf& a, const Mpf& b, Round r) {
  Mpf o(out_prec(a, b));
  mpfr_div(o.raw(), a.raw(), b.raw(), to_mpfr(r));
  return o;
}
inline Mpf div(const Mpf& a, double b, Round r) {
  Mpf o(a.prec());
  mpfr_div_d(o.raw(), a.raw(), b, to_mpfr(r));
  return o;
}
inline Mpf div(double a, const Mpf& b, Round r) {
  Mpf o(b.prec());
  mpfr_d_div(o.raw(), a, b.raw(), to_mpfr(r));
  return o;
}
inline Mpf sqrt(const Mpf& a, Round r) {
  Mpf o(a.prec());
  mpfr_sqrt(o.raw(), a.raw(), to_mpfr(r));
  return o;
}
inline Mpf log(const Mpf& a, Round r) {
  Mpf o(a.prec());
  mpfr_log(o.raw(), a.raw(), to_mpfr(r));
  return o;
}
inline Mpf neg(const Mpf& a) {
  Mpf o(a.prec());
  mpfr_neg(o.raw(), a.raw(), MPFR_RNDN);
  return o;
}
inline Mpf abs(const Mpf& a) {
  Mpf o(a.prec());
  mpfr_abs(o.raw(), a.raw(), MPFR_RNDN);
  return o;
}
inline Mpf floor(const Mpf& a) {
  Mpf o(a.prec());
  mpfr_floor(o.raw(), a.raw());
  return o;
}
inline long floor_long(const Mpf& a) { return mpfr_get_si(floor(a).raw(), MPFR_RNDD); }

inline int cmp(const Mpf& a, const Mpf& b) { return mpfr_cmp(a.raw(), b.raw()); }
inline int cmp(const Mpf& a, double b) { return mpfr_cmp_d(a.raw(), b); }
inline bool operator<(const Mpf& a, const Mpf& b) { return cmp(a, b) < 0; }
inline bool operator<=(const Mpf& a, const Mpf& b) { return cmp(a, b) <= 0; }
inline bool operator>(const Mpf& a, const Mpf& b) { return cmp(a, b) > 0; }
inline bool operator>=(const Mpf& a, const Mpf& b) { return cmp(a, b) >= 0; }
inline bool operator==(const Mpf& a, const Mpf& b) { return cmp(a, b) == 0; }
inline bool operator<(const Mpf& a, double b) { return cmp(a, b) < 0; }
inline bool operator<=(const Mpf& a, double b) { return cmp(a, b) <= 0; }
inline bool operator>(const Mpf& a, double b) { return cmp(a, b) > 0; }
inline bool operator>=(const Mpf& a, double b) { return cmp(a, b) >= 0; }

inline const Mpf& min(const Mpf& a, const Mpf& b) { return b < a ? b : a; }
inline const Mpf& max(const Mpf& a, const Mpf& b) { return a < b ? b : a; }

/// Double-precision counterparts with one-ulp outward bumps; results are
/// valid enclosures because IEEE operations are correctly rounded to nearest.
namespace dround {
inline double bump(double v, Round r) {
  if (r == Round::down) return std::nextafter(v, -HUGE_VAL);
  if (r == Round::up) return std::nextafter(v, HUGE_VAL);
  return v;
}
inline double add(double a, double b, Round r) {
  double s = a + b;
  if (r == Round::nearest) return s;
  // exact when the error term vanishes
  double bb = s - a;
  double err = (a - (s - bb)) + (b - bb);
  if (err == 0.0) return s;
  if (r == Round::down) return err < 0 ? bump(s, r) : s;
  return err > 0 ? bump(s, r) : s;
}
inline double sub(double a, double b, Round r) { return add(a, -b, r); }
inline double mul(double a, double b, Round r) {
  double p = a * b;
  if (r == Round::nearest) return p;
  double err = std::fma(a, b, -p);
  if (err == 0.0) return p;
  if (r == Round::down) return err < 0 ? bump(p, r) : p;
  return err > 0 ? bump(p, r) : p;
}
inline double div(double a, double b, Round r) {
  double q = a / b;
  if (r == Round::nearest || !std::isfinite(q)) return q;
  double rem = -std::fma(q, b, -a);  // a - q*b, exact
  if (rem == 0.0) return q;
  bool above = (rem < 0) == (b > 0);  // q > a/b
  if (r == Round::down) return above ? bump(q, r) : q;
  return above ? q : bump(q, r);
}
inline double sqrt(double a, Round r) {
  double s = std::sqrt(a);
  if (r == Round::nearest) return s;
  double err = std::fma(-s, s, a);  // a - s*s exact
  if (err == 0.0) return s;
  if (r == Round::down) return err < 0 ? bump(s, r) : s;
  return err > 0 ? bump(s, r) : s;
}
}  // namespace dround

// Same call shape for doubles, so interval code can be written once.
inline double add(double a, double b, Round r) { return dround::add(a, b, r); }
inline double sub(double a, double b, Round r) { return dround::sub(a, b, r); }
inline double mul(double a, double b, Round r) { return dround::mul(a, b, r); }
inline double div(double a, double b, Round r) { return dround::div(a, b, r); }
inline double sqrt(double a, Round r) { return dround::sqrt(a, r); }

}  // namespace rhlab
