#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "rhlab/transfer/ulam.hpp"
#include "rhlab/util/numeric.hpp"

namespace rhlab {

struct SpectralResult {
  double lambda_theta = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;
  std::vector<double> eigenvector;  // sup-norm 1
  bool stayed_positive = true;
};

class NoConvergence : public Error {
 public:
  NoConvergence(double best_residual, std::size_t iters)
      : Error(ErrorCode::no_convergence, "power iteration did not converge after " + std::to_string(iters) +
                                             " iterations (best residual " + fmt(best_residual) + ")"),
        best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

inline double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Power iteration from the constant vector with sup-norm normalization.
inline SpectralResult spectral_radius(const TiltedOperator& op, double tol = 1e-12, std::size_t max_iter = 20000) {
  require(tol > 0.0, ErrorCode::config, "spectral tolerance must be positive");
  const std::size_t N = op.n();
  std::vector<double> v(N, 1.0), w;
  double best = kInf;
  SpectralResult res;
  for (std::size_t k = 0; k < max_iter; ++k) {
    op.apply(v, w);
    double lam = sup_norm(w);
    require(lam > 0.0, ErrorCode::no_convergence, "operator annihilated the iterate");
    double r = 0.0;
    for (std::size_t i = 0; i < N; ++i) r = std::max(r, std::abs(w[i] - lam * v[i]));
    best = std::min(best, r);
    for (double x : v)
      if (!(x > 0.0)) res.stayed_positive = false;
    if (r <= tol) {
      res.lambda_theta = lam;
      res.iterations = k + 1;
      res.residual = r;
      res.eigenvector = std::move(v);
      return res;
    }
    for (std::size_t i = 0; i < N; ++i) v[i] = w[i] / lam;
  }
  throw NoConvergence(best, max_iter);
}

/// Moduli of the two largest eigenvalues from a full dense solve. Meant
/// for small grids: a proxy for the spectral gap.
inline std::pair<double, double> leading_moduli(const TiltedOperator& op) {
  const auto N = static_cast<Eigen::Index>(op.n());
  Eigen::MatrixXd A(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j) A(i, j) = op.at(i, j);
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  std::vector<double> mods;
  for (Eigen::Index i = 0; i < N; ++i) mods.push_back(std::abs(es.eigenvalues()[i]));
  std::sort(mods.rbegin(), mods.rend());
  return {mods.at(0), mods.size() > 1 ? mods[1] : 0.0};
}

/// Per-step large-deviation rate e^{-(lambda_hat + eps) theta} lambda_theta.
inline double ldp_rate_bound(double theta, double epsilon, double lambda_hat, double lambda_theta) {
  return std::exp(-(lambda_hat + epsilon) * theta) * lambda_theta;
}

struct TaylorRow {
  double theta = 0.0;
  double lambda_theta = 0.0;
  double residual = 0.0;  // lambda_theta - 1 - theta * lambda_hat
  double spectral_residual = 0.0;
  std::size_t iterations = 0;
};

struct TaylorTable {
  std::vector<TaylorRow> rows;
  double exponent = 0.0;  // p in |r| ~ c theta^p
  double coefficient = 0.0;
  double fit_r2 = 0.0;
  bool exponent_ok = false;  // p >= 4/3 - 0.2
  std::size_t n_cells = 0;
};

inline TaylorTable taylor_check(const MapModel& m, double sigma, const UlamGrid& grid, const std::vector<double>& thetas,
                                double lambda_hat, double tol = 1e-12) {
  TaylorTable t;
  t.n_cells = grid.n_cells;
  std::vector<double> lx, ly;
  for (double th : thetas) {
    require(th >= 0.0 && th < m.theta_cap(), th >= 0.0 ? ErrorCode::theta_too_large : ErrorCode::config,
            "taylor_check: theta outside [0, cap)");
    TaylorRow row;
    row.theta = th;
    SpectralResult sr = spectral_radius(build_tilted(m, sigma, grid, th), tol);
    row.lambda_theta = sr.lambda_theta;
    row.iterations = sr.iterations;
    row.spectral_residual = sr.residual;
    row.residual = sr.lambda_theta - 1.0 - th * lambda_hat;
    if (th > 0.0 && row.residual != 0.0) {
      lx.push_back(std::log(th));
      ly.push_back(std::log(std::abs(row.residual)));
    }
    t.rows.push_back(row);
  }
  LineFit f = fit_line(lx, ly);
  t.exponent = f.slope;
  t.coefficient = std::exp(f.intercept);
  t.fit_r2 = f.r2;
  t.exponent_ok = f.n >= 2 && t.exponent >= 4.0 / 3.0 - 0.2;
  return t;
}

}  // namespace rhlab
