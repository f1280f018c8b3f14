#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "rhlab/dynamics/model.hpp"

namespace rhlab {

namespace detail {
inline double like(double, double v) { return v; }
inline Mpf like(const Mpf& a, double v) { return Mpf(v, a.prec()); }
}  // namespace detail

/// F(x) = K x on [0, 1]; a single increasing branch.
template <int K>
struct LinearLaw {
  template <class T>
  static T lift(const T& x, Round r) {
    return mul(x, static_cast<double>(K), r);
  }
  template <class T>
  static T deriv(const T& x, Round) {
    return detail::like(x, static_cast<double>(K));
  }
  template <class T>
  static T min_abs_deriv(const T& a, const T&, Round) {
    return detail::like(a, static_cast<double>(K));
  }
  static double max_abs_deriv(double, double, Round) { return K; }
  template <class T>
  static T inverse(const T& v, std::size_t, Round r) {
    return div(v, static_cast<double>(K), r);
  }
};

/// F(x) = 16 x (1 - x); increasing on [0, 1/2], decreasing on [1/2, 1].
struct Logistic16Law {
  template <class T>
  static T lift(const T& x, Round r) {
    return mul(mul(x, sub(1.0, x, r), r), 16.0, r);
  }
  template <class T>
  static T deriv(const T& x, Round r) {
    return sub(16.0, mul(x, 32.0, r), r);
  }
  template <class T>
  static T min_abs_deriv(const T& a, const T& b, Round r) {
    if (b <= 0.5) return mul(sub(0.5, b, r), 32.0, r);
    if (a >= 0.5) return mul(sub(a, 0.5, r), 32.0, r);
    return detail::like(a, 0.0);
  }
  static double max_abs_deriv(double a, double b, Round r) {
    double left = a < 0.5 ? sub(0.5, a, r) : 0.0;
    double right = b > 0.5 ? sub(b, 0.5, r) : 0.0;
    return mul(std::max(left, right), 32.0, r);
  }
  template <class T>
  static T inverse(const T& v, std::size_t k, Round r) {
    T quarter = mul(v, 0.25, Round::nearest);  // exact
    if (k == 0) {
      T q = sub(1.0, quarter, opposite(r));
      if (q < 0.0) q = detail::like(q, 0.0);
      T s = sqrt(q, opposite(r));
      return mul(sub(1.0, s, r), 0.5, r);
    }
    T q = sub(1.0, quarter, r);
    if (q < 0.0) q = detail::like(q, 0.0);
    T s = sqrt(q, r);
    return mul(add(s, 1.0, r), 0.5, r);
  }
};

inline MapModel make_doubling() {
  MapModel m;
  m.name = "doubling";
  m.branches = {{0.0, 1.0, true}};
  m.B = 2.0;
  m.beta = 0.5;
  m.deriv_sup = 2.0;
  m.kernel = std::make_shared<LawKernel<LinearLaw<2>>>();
  return m;
}

inline MapModel make_ternary() {
  MapModel m;
  m.name = "ternary";
  m.branches = {{0.0, 1.0, true}};
  m.B = 3.0;
  m.beta = 0.5;
  m.deriv_sup = 3.0;
  m.kernel = std::make_shared<LawKernel<LinearLaw<3>>>();
  return m;
}

inline MapModel make_logistic16() {
  MapModel m;
  m.name = "logistic16";
  m.critical_points = {0.5};
  m.branches = {{0.0, 0.5, true}, {0.5, 1.0, false}};
  m.B = 33.0;
  m.beta = 1.0;
  m.crit_coeff = 32.0;
  m.power_law_radius = 0.5;
  m.deriv_sup = 16.0;
  m.distortion_coeff = 1.0;  // |f'| = 32 d exactly
  m.kernel = std::make_shared<LawKernel<Logistic16Law>>();
  return m;
}

/// Name-keyed registry; new models are added with register_model.
class ModelTable {
 public:
  static ModelTable& instance() {
    static ModelTable t;
    return t;
  }
  void register_model(const std::string& name, std::function<MapModel()> make) {
    std::lock_guard<std::mutex> lk(mu_);
    table_[name] = std::move(make);
  }
  MapModel get(const std::string& name) const {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = table_.find(name);
    if (it == table_.end()) fail(ErrorCode::config, "unknown model '" + name + "'");
    return it->second();
  }
  bool has(const std::string& name) const {
    std::lock_guard<std::mutex> lk(mu_);
    return table_.count(name) > 0;
  }
  std::vector<std::string> names() const {
    std::lock_guard<std::mutex> lk(mu_);
    std::vector<std::string> out;
    for (auto& [k, v] : table_) out.push_back(k);
    return out;
  }

 private:
  ModelTable() {
    table_["doubling"] = make_doubling;
    table_["ternary"] = make_ternary;
    table_["logistic16"] = make_logistic16;
    table_["logistic-16"] = make_logistic16;
  }
  mutable std::mutex mu_;
  std::map<std::string, std::function<MapModel()>> table_;
};

inline MapModel make_model(const std::string& name) { return ModelTable::instance().get(name); }

}  // namespace rhlab
