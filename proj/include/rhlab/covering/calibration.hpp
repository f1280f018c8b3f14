#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rhlab/covering/events.hpp"
#include "rhlab/stats/lyapunov.hpp"
#include "rhlab/util/parallel.hpp"

namespace rhlab {

struct CalibrationConfig {
  std::optional<Ball> region;        // the open set A that J must sit in
  double j_radius = 0.05;            // half the reference size eta
  std::size_t burn_in = 1000;
  std::size_t explore_steps = 100000;
  std::size_t max_steps = 1000000;   // cap for landing in the centre of J
  std::size_t replicas = 100;
  std::size_t max_balls = 64;
  std::optional<double> iota;        // overrides the half-min-distance rule
  std::optional<std::size_t> horizon;  // overrides the recipe's N
  CoveringSearch search;
};

struct ReferenceCalibration {
  std::string model;
  double sigma = 0.0;
  Ball J;
  std::size_t N = 0;
  double iota = 0.0;
  double rho_hat = 0.0;
  double epsilon_scale = 0.0;
  double delta1 = 0.0;
  std::uint64_t seed = 0;
  // diagnostics
  std::size_t n_cells = 0;
  std::vector<std::size_t> unvisited;
  double min_orbit_dist = kInf;
  std::vector<Ball> grid;
  std::vector<double> grid_prob;
};

inline NoiseStream calibration_noise(double sigma, std::uint64_t seed, std::uint64_t r) {
  return NoiseStream(sigma, stream_key(seed, StreamTag::calibration, r));
}

/// Empirical P{E_J(I, N, iota)} for each ball, over `replicas` noise streams
/// keyed by (seed, first_replica + r).
inline std::vector<double> covering_probabilities(const MapModel& m, const ReferenceCalibration& c,
                                                  const std::vector<Ball>& balls, std::size_t replicas,
                                                  std::uint64_t seed, std::uint64_t first_replica = 1) {
  std::vector<double> p(balls.size(), 0.0);
  parallel_for(balls.size(), [&](std::size_t b) {
    std::size_t hits = 0;
    for (std::size_t r = 0; r < replicas; ++r) {
      auto ev = detect_covering(m, calibration_noise(c.sigma, seed, first_replica + r), balls[b], c.J, c.N, c.iota);
      if (ev) ++hits;
    }
    p[b] = static_cast<double>(hits) / static_cast<double>(replicas);
  });
  return p;
}

/// Empirical version of the reference-set recipe: explore the support with one
/// long orbit, take N as the first time that orbit has visited every visited
/// cell of the eps/4 partition and sits in the centre quarter of J, then
/// estimate rho as the worst covering probability over balls of size eps.
inline ReferenceCalibration calibrate_reference(const MapModel& m, double sigma, double epsilon_scale,
                                                const CalibrationConfig& cfg, std::uint64_t seed) {
  require(epsilon_scale > 0.0 && epsilon_scale < 0.25, ErrorCode::config, "epsilon_scale must lie in (0, 1/4)");
  require(sigma > 0.0 && sigma < 0.5, ErrorCode::config, "sigma must lie in (0, 1/2)");
  require(cfg.j_radius > 0.0 && cfg.j_radius < 0.25, ErrorCode::config, "j_radius must lie in (0, 1/4)");
  ReferenceCalibration c;
  c.model = m.name;
  c.sigma = sigma;
  c.epsilon_scale = epsilon_scale;
  c.delta1 = epsilon_scale;
  c.seed = seed;

  const double delta = epsilon_scale / 4.0;
  const std::size_t cells = static_cast<std::size_t>(std::ceil(1.0 / delta));
  c.n_cells = cells;
  auto cell_of = [&](double x) { return std::min(cells - 1, static_cast<std::size_t>(x * static_cast<double>(cells))); };

  double jc;
  if (cfg.region) {
    jc = wrap01(cfg.region->center);
    c.J = Ball{jc, std::min(cfg.j_radius, cfg.region->radius)};
  } else {
    jc = m.has_critical() ? wrap01(m.critical_points.front() + 0.5) : 0.5;
    c.J = Ball{jc, cfg.j_radius};
  }
  const double core = c.J.radius / 4.0;

  NoiseStream noise = calibration_noise(sigma, seed, 0);
  double x = advance(m, noise, replica_start(m, seed, ~std::uint64_t{0}), 0, cfg.burn_in);
  NoiseStream walk = noise.shifted(cfg.burn_in);

  std::vector<char> seen(cells, 0);
  {
    double y = x;
    for (std::size_t t = 0; t < cfg.explore_steps; ++t) {
      seen[cell_of(y)] = 1;
      y = iterate(m, y, walk.at(t));
    }
  }
  for (std::size_t k = 0; k < cells; ++k)
    if (!seen[k]) c.unvisited.push_back(k);
  if (!seen[cell_of(jc)])
    fail(ErrorCode::calibration_failed, "centre of J lies in a cell never visited (" +
                                            std::to_string(c.unvisited.size()) + " of " + std::to_string(cells) +
                                            " cells unvisited)");

  std::vector<char> hit(cells, 0);
  std::size_t todo = cells - c.unvisited.size();
  std::optional<std::size_t> N;
  double y = x;
  double mind = m.critical_distance(y);
  for (std::size_t t = 0; t <= cfg.max_steps; ++t) {
    std::size_t k = cell_of(y);
    if (seen[k] && !hit[k]) {
      hit[k] = 1;
      --todo;
    }
    mind = std::min(mind, m.critical_distance(y));
    if (todo == 0 && t > 0 && circle_dist(y, jc) < core) {
      N = t;
      break;
    }
    y = iterate(m, y, walk.at(t));
  }
  if (!N) fail(ErrorCode::calibration_failed, "orbit never landed in the centre of J within max_steps");
  c.N = cfg.horizon ? *cfg.horizon : *N;
  c.min_orbit_dist = mind;
  c.iota = cfg.iota ? *cfg.iota : (std::isinf(mind) ? 0.0 : 0.5 * mind);

  // ball grid of diameter eps centred on visited cells, thinned evenly
  std::vector<std::size_t> vis;
  for (std::size_t k = 0; k < cells; ++k)
    if (seen[k]) vis.push_back(k);
  std::size_t nb = std::min(cfg.max_balls, vis.size());
  for (std::size_t q = 0; q < nb; ++q) {
    std::size_t k = vis[q * vis.size() / nb];
    c.grid.push_back(Ball{(static_cast<double>(k) + 0.5) / static_cast<double>(cells), epsilon_scale / 2.0});
  }
  c.grid_prob = covering_probabilities(m, c, c.grid, cfg.replicas, seed);
  c.rho_hat = c.grid_prob.empty() ? 0.0 : *std::min_element(c.grid_prob.begin(), c.grid_prob.end());
  if (c.rho_hat <= 0.0) {
    std::string msg = "rho_hat = 0 on the ball grid";
    if (!c.unvisited.empty()) msg += "; " + std::to_string(c.unvisited.size()) + " cells never visited";
    fail(ErrorCode::calibration_failed, msg);
  }
  return c;
}

}  // namespace rhlab
