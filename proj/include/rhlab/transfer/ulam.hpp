#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "rhlab/dynamics/model.hpp"
#include "rhlab/util/parallel.hpp"

namespace rhlab {

struct UlamGrid {
  std::size_t n_cells = 0;

  explicit UlamGrid(std::size_t n = 0) : n_cells(n) {}
  double width() const { return 1.0 / static_cast<double>(n_cells); }
  double lo(std::size_t j) const { return static_cast<double>(j) / n_cells; }
  double hi(std::size_t j) const { return static_cast<double>(j + 1) / n_cells; }
  double mid(std::size_t j) const { return (static_cast<double>(j) + 0.5) / n_cells; }
};

/// Annealed operator with tilt |f'|^{-theta}, collocated at source-cell midpoints.
/// Row i has its support in the cyclic band start[i] .. start[i] + len[i] - 1.
struct TiltedOperator {
  double theta = 0.0;
  double sigma = 0.0;
  std::string model;
  UlamGrid grid;
  std::vector<double> matrix;  // row-major n x n
  std::vector<std::size_t> band_start;
  std::vector<std::size_t> band_len;
  std::vector<double> quadrature_report;

  std::size_t n() const { return grid.n_cells; }
  double at(std::size_t i, std::size_t j) const { return matrix[i * n() + j]; }

  /// w = M v
  void apply(const std::vector<double>& v, std::vector<double>& w) const {
    const std::size_t N = n();
    w.assign(N, 0.0);
    parallel_chunks(N, 64, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        const double* row = &matrix[i * N];
        double acc = 0.0;
        std::size_t j = band_start[i];
        for (std::size_t k = 0; k < band_len[i]; ++k) {
          acc += row[j] * v[j];
          if (++j == N) j = 0;
        }
        w[i] = acc;
      }
    });
  }

  /// Row vector product h M, used for invariance residuals.
  std::vector<double> left_apply(const std::vector<double>& h) const {
    const std::size_t N = n();
    std::vector<double> out(N, 0.0);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) out[j] += h[i] * matrix[i * N + j];
    return out;
  }
};

namespace detail {

/// Closed-form integral of (K |y - c|^beta)^{-theta} over [a, b].
inline double singular_integral(double a, double b, double c, double K, double beta, double theta) {
  const double e = 1.0 - beta * theta;
  auto P = [&](double s) { return std::copysign(std::pow(std::abs(s), e), s) / e; };
  return std::pow(K, -theta) * (P(b - c) - P(a - c));
}

/// Smallest cyclic window [start, start + len) holding every nonzero of row.
inline void cyclic_support(const double* row, std::size_t N, std::size_t& start, std::size_t& len) {
  std::size_t best_gap = 0, best_end = 0, run = 0;
  for (std::size_t k = 0; k < 2 * N; ++k) {
    if (row[k % N] == 0.0) {
      if (++run > best_gap && run <= N) {
        best_gap = run;
        best_end = k % N;
      }
    } else {
      run = 0;
    }
  }
  if (best_gap == 0) {
    start = 0;
    len = N;
    return;
  }
  start = (best_end + 1) % N;
  len = N - best_gap;
}

inline double tilt_weight(const MapModel& m, double y, double theta) {
  if (theta == 0.0) return 1.0;
  return std::exp(-theta * std::log(std::abs(m.deriv(y))));
}

}  // namespace detail

/// `source_points` > 1 averages the row over that many equally spaced
/// collocation points inside the source cell instead of using its midpoint.
inline TiltedOperator build_tilted(const MapModel& m, double sigma, const UlamGrid& grid, double theta,
                                   std::size_t source_points = 1) {
  require(grid.n_cells >= 16, ErrorCode::config, "Ulam grid needs at least 16 cells");
  require(theta >= 0.0, ErrorCode::config, "theta must be non-negative");
  if (theta >= m.theta_cap())
    fail(ErrorCode::theta_too_large, "theta=" + fmt(theta) + " is not below the cap " + fmt(m.theta_cap()));
  if (sigma < 2.0 / static_cast<double>(grid.n_cells))
    fail(ErrorCode::grid_too_coarse, "sigma=" + fmt(sigma) + " is below two cell widths");
  require(sigma < 0.5, ErrorCode::config, "sigma must be below 1/2");

  const std::size_t N = grid.n_cells;
  const double Nd = static_cast<double>(N);
  TiltedOperator op;
  op.theta = theta;
  op.sigma = sigma;
  op.model = m.name;
  op.grid = grid;
  op.matrix.assign(N * N, 0.0);
  op.band_start.assign(N, 0);
  op.band_len.assign(N, 0);
  op.quadrature_report.assign(N, 0.0);

  // Cells whose closure contains a critical point, or which lie inside the
  // zone where |f'| = K dist^beta holds exactly, get the closed-form primitive.
  std::vector<char> singular(N, 0);
  std::vector<double> cell_crit(N, 0.0);
  for (std::size_t k = 0; k < N; ++k) {
    double lo = static_cast<double>(k) / Nd, hi = static_cast<double>(k + 1) / Nd;
    for (double c : m.critical_points) {
      double cl = c + std::round(0.5 * (lo + hi) - c);  // nearest lift
      bool touches = cl >= lo && cl <= hi;
      bool in_law = std::max(std::abs(lo - cl), std::abs(hi - cl)) <= m.power_law_radius;
      if (touches || in_law) {
        singular[k] = 1;
        cell_crit[k] = cl;
        break;
      }
    }
  }

  require(source_points >= 1, ErrorCode::config, "need at least one collocation point");
  const double inv2s = 1.0 / (2.0 * sigma) / static_cast<double>(source_points);
  parallel_for(N, [&](std::size_t i) {
    double qerr = 0.0;
    double* row = &op.matrix[i * N];
    for (std::size_t q = 0; q < source_points; ++q) {
      const double xq = (static_cast<double>(i) + (static_cast<double>(q) + 0.5) / static_cast<double>(source_points)) / Nd;
      const double c = m.eval(xq);
      const double lo = c - sigma, hi = c + sigma;
      const long J0 = static_cast<long>(std::floor(lo * Nd));
      const long J1 = static_cast<long>(std::floor(hi * Nd));
      for (long J = J0; J <= J1; ++J) {
        double a = std::max(lo, static_cast<double>(J) / Nd);
        double b = std::min(hi, static_cast<double>(J + 1) / Nd);
        if (b <= a) continue;
        long shift = J >= 0 ? J / static_cast<long>(N) : -((-J + static_cast<long>(N) - 1) / static_cast<long>(N));
        auto j = static_cast<std::size_t>(J - shift * static_cast<long>(N));
        double ya = a - static_cast<double>(shift), yb = b - static_cast<double>(shift);
        double w;
        if (singular[j] && theta > 0.0) {
          w = detail::singular_integral(ya, yb, cell_crit[j], m.crit_coeff, m.beta, theta);
        } else {
          double ym = 0.5 * (ya + yb);
          w = (yb - ya) * detail::tilt_weight(m, ym, theta);
          if (theta > 0.0) {
            double h = 0.5 * (yb - ya);
            double w2 = h * (detail::tilt_weight(m, ya + 0.5 * h, theta) + detail::tilt_weight(m, yb - 0.5 * h, theta));
            qerr += std::abs(w2 - w) * inv2s;
          }
        }
        row[j] += w * inv2s;
      }
    }
    detail::cyclic_support(row, N, op.band_start[i], op.band_len[i]);
    op.quadrature_report[i] = qerr;
  });
  return op;
}

/// Dense dump: u64 n_cells, f64 theta, f64 sigma, then n*n row-major f64.
inline void write_operator_dump(const std::string& path, const TiltedOperator& op) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::io, "cannot open " + path);
  std::uint64_t n = op.n();
  f.write(reinterpret_cast<const char*>(&n), sizeof n);
  f.write(reinterpret_cast<const char*>(&op.theta), sizeof(double));
  f.write(reinterpret_cast<const char*>(&op.sigma), sizeof(double));
  f.write(reinterpret_cast<const char*>(op.matrix.data()), static_cast<std::streamsize>(op.matrix.size() * sizeof(double)));
}

struct OperatorDump {
  std::uint64_t n_cells = 0;
  double theta = 0.0;
  double sigma = 0.0;
  std::vector<double> matrix;
};

inline OperatorDump read_operator_dump(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::io, "cannot open " + path);
  OperatorDump d;
  f.read(reinterpret_cast<char*>(&d.n_cells), sizeof d.n_cells);
  f.read(reinterpret_cast<char*>(&d.theta), sizeof(double));
  f.read(reinterpret_cast<char*>(&d.sigma), sizeof(double));
  d.matrix.resize(d.n_cells * d.n_cells);
  f.read(reinterpret_cast<char*>(d.matrix.data()), static_cast<std::streamsize>(d.matrix.size() * sizeof(double)));
  require(f.good(), ErrorCode::io, "truncated operator dump " + path);
  return d;
}

}  // namespace rhlab
