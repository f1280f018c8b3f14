#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rhlab/cli/json_io.hpp"
#include "rhlab/covering/events.hpp"
#include "rhlab/dynamics/models.hpp"
#include "rhlab/hyperbolic/times.hpp"
#include "rhlab/util/hash.hpp"

namespace rhlab {

struct SimulateConfig {
  std::size_t burn_in = 10000;
  std::size_t n = 200000;
  std::size_t bins = 64;
};

struct LyapunovConfig {
  std::size_t burn_in = 1000;
  std::size_t n = 1000000;
  std::size_t replicas = 4;
};

struct LdpConfig {
  double epsilon = 0.15;
  double delta = 0.01;
  std::vector<std::size_t> n_list{50, 100, 200, 400};
  std::size_t replicas = 100000;
};

struct SpectrumConfig {
  std::size_t n_cells = 512;
  std::vector<double> theta_list{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> taylor_thetas{0.02, 0.04, 0.06, 0.08, 0.1, 0.12, 0.14, 0.16, 0.18, 0.2};
};

struct YoungConfig {
  double ht_sigma2 = 0.5;         // squared, so that 1/2 is exact
  double b = 0.45;
  double r = 0.01;
  std::size_t sparsity = 2;
  HTVariant variant = HTVariant::standard_alves;
  std::size_t horizon = 5000;     // cap on ball Young times
  std::size_t orbit_length = 2000;
  std::size_t orbits = 4;         // replicas written to young_times.csv
  std::size_t replicas = 200;     // per |I| in m_stats
  std::vector<int> ks{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<std::size_t> tail_n{25, 50, 100, 200, 400};
  std::size_t tail_replicas = 400;
  std::size_t calib_replicas = 10;
  std::size_t calib_max_balls = 8;

  HTParams params() const {
    auto p = HTParams::from_sigma(1.0, b, r, sparsity, variant);
    p.sigma2 = ht_sigma2;
    p.validate();
    return p;
  }
};

struct HorseshoeConfig {
  std::size_t M = 0;              // 0: least feasible M from C_hat
  double kappa = 1.5;
  std::size_t horizon = 3000;
  double j_radius = 0.01;
  std::vector<Ball> A;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8};
  std::size_t max_blocks = 25;
  std::size_t min_blocks = 20;
  std::size_t max_merge = 8;
  std::size_t word_length = 6;
  std::size_t calib_replicas = 50;
  std::size_t calib_max_balls = 32;
  std::vector<int> m_ks{1, 2, 3, 4};
  std::size_t m_replicas = 20;
};

struct ExperimentConfig {
  std::string model = "doubling";
  double sigma = 0.1;
  std::uint64_t seed = 1;
  std::string out = "out";
  SimulateConfig simulate;
  LyapunovConfig lyapunov;
  LdpConfig ldp;
  SpectrumConfig spectrum;
  YoungConfig young;
  HorseshoeConfig horseshoe;
};

namespace detail {

/// Pulls keys out of one JSON object and rejects whatever is left over.
class StrictObject {
 public:
  StrictObject(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    require(j.is_object(), ErrorCode::config, where_ + " must be an object");
  }

  template <class T>
  void get(const char* key, T& dst) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      dst = j_.at(key).get<T>();
    } catch (const Json::exception&) {
      fail(ErrorCode::config, where_ + "." + key + " has the wrong type");
    }
  }

  const Json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) fail(ErrorCode::config, "unknown key " + where_ + "." + k);
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline void check(bool ok, const std::string& what) { require(ok, ErrorCode::config, what); }

}  // namespace detail

inline void validate(const ExperimentConfig& c) {
  using detail::check;
  check(ModelTable::instance().has(c.model), "unknown model " + c.model);
  check(c.sigma > 0.0 && c.sigma < 0.5, "sigma must lie in (0, 1/2)");
  check(!c.out.empty(), "out must be non-empty");
  check(c.simulate.n >= 1 && c.simulate.bins >= 16, "simulate needs n >= 1 and bins >= 16");
  check(c.lyapunov.n >= 1 && c.lyapunov.replicas >= 1, "lyapunov needs n, replicas >= 1");
  check(c.ldp.epsilon > 0.0, "ldp.epsilon must be positive");
  check(c.ldp.delta > 0.0 && c.ldp.delta < 0.5, "ldp.delta must lie in (0, 1/2)");
  check(!c.ldp.n_list.empty() && c.ldp.replicas >= 1, "ldp needs n_list and replicas");
  for (auto n : c.ldp.n_list) check(n >= 1, "ldp.n_list entries must be >= 1");
  check(c.spectrum.n_cells >= 16, "spectrum.n_cells must be >= 16");
  check(!c.spectrum.theta_list.empty(), "spectrum.theta_list must be non-empty");
  for (double t : c.spectrum.theta_list) check(t >= 0.0, "spectrum thetas must be >= 0");
  for (double t : c.spectrum.taylor_thetas) check(t > 0.0, "taylor thetas must be > 0");
  c.young.params();
  check(c.young.horizon >= 1 && c.young.orbit_length >= 1, "young horizons must be >= 1");
  check(c.young.replicas >= 2 && !c.young.ks.empty(), "young needs replicas >= 2 and ks");
  for (int k : c.young.ks) check(k >= 0 && k <= 40, "young.ks entries must lie in [0, 40]");
  check(!c.young.tail_n.empty() && c.young.tail_replicas >= 1, "young tail needs n values");
  const auto& h = c.horseshoe;
  check(h.kappa > 1.0, "horseshoe.kappa must exceed 1");
  check(h.M == 0 || h.M >= 2, "horseshoe.M must be 0 (auto) or >= 2");
  check(h.horizon >= 2, "horseshoe.horizon must be >= 2");
  check(h.j_radius > 0.0 && h.j_radius < 0.25, "horseshoe.j_radius must lie in (0, 1/4)");
  for (const auto& a : h.A) check(a.radius > 0.0 && a.radius < 0.5, "horseshoe.A radii must lie in (0, 1/2)");
  check(!h.seeds.empty(), "horseshoe.seeds must be non-empty");
  check(h.word_length >= 1 && h.word_length <= 12, "horseshoe.word_length must lie in [1, 12]");
  check(h.min_blocks <= h.max_blocks || h.max_blocks == 0, "horseshoe.min_blocks exceeds max_blocks");
  check(h.m_replicas >= 2 && !h.m_ks.empty(), "horseshoe C_hat needs m_replicas >= 2 and m_ks");
}

inline ExperimentConfig parse_config(const Json& root) {
  ExperimentConfig c;
  detail::StrictObject top(root, "config");
  top.get("model", c.model);
  top.get("sigma", c.sigma);
  top.get("seed", c.seed);
  top.get("out", c.out);
  if (auto* j = top.sub("simulate")) {
    detail::StrictObject o(*j, "simulate");
    o.get("burn_in", c.simulate.burn_in);
    o.get("n", c.simulate.n);
    o.get("bins", c.simulate.bins);
    o.finish();
  }
  if (auto* j = top.sub("lyapunov")) {
    detail::StrictObject o(*j, "lyapunov");
    o.get("burn_in", c.lyapunov.burn_in);
    o.get("n", c.lyapunov.n);
    o.get("replicas", c.lyapunov.replicas);
    o.finish();
  }
  if (auto* j = top.sub("ldp")) {
    detail::StrictObject o(*j, "ldp");
    o.get("epsilon", c.ldp.epsilon);
    o.get("delta", c.ldp.delta);
    o.get("n_list", c.ldp.n_list);
    o.get("replicas", c.ldp.replicas);
    o.finish();
  }
  if (auto* j = top.sub("spectrum")) {
    detail::StrictObject o(*j, "spectrum");
    o.get("n_cells", c.spectrum.n_cells);
    o.get("theta_list", c.spectrum.theta_list);
    o.get("taylor_thetas", c.spectrum.taylor_thetas);
    o.finish();
  }
  if (auto* j = top.sub("young")) {
    detail::StrictObject o(*j, "young");
    // ht_sigma or its square, not both
    std::optional<double> hs;
    if (auto* s = o.sub("ht_sigma")) {
      detail::check(s->is_number(), "young.ht_sigma has the wrong type");
      hs = s->get<double>();
    }
    if (hs) {
      detail::check(!j->contains("ht_sigma2"), "young: give ht_sigma or ht_sigma2, not both");
      c.young.ht_sigma2 = *hs * *hs;
    }
    o.get("ht_sigma2", c.young.ht_sigma2);
    o.get("b", c.young.b);
    o.get("r", c.young.r);
    o.get("sparsity", c.young.sparsity);
    std::string v = variant_name(c.young.variant);
    o.get("variant", v);
    c.young.variant = parse_variant(v);
    o.get("horizon", c.young.horizon);
    o.get("orbit_length", c.young.orbit_length);
    o.get("orbits", c.young.orbits);
    o.get("replicas", c.young.replicas);
    o.get("ks", c.young.ks);
    o.get("tail_n", c.young.tail_n);
    o.get("tail_replicas", c.young.tail_replicas);
    o.get("calib_replicas", c.young.calib_replicas);
    o.get("calib_max_balls", c.young.calib_max_balls);
    o.finish();
  }
  if (auto* j = top.sub("horseshoe")) {
    detail::StrictObject o(*j, "horseshoe");
    auto& h = c.horseshoe;
    o.get("M", h.M);
    o.get("kappa", h.kappa);
    o.get("horizon", h.horizon);
    o.get("j_radius", h.j_radius);
    if (auto* a = o.sub("A")) {
      detail::check(a->is_array(), "horseshoe.A must be an array");
      h.A.clear();
      for (std::size_t q = 0; q < a->size(); ++q) {
        detail::StrictObject b((*a)[q], "horseshoe.A[" + std::to_string(q) + "]");
        Ball B;
        b.get("center", B.center);
        b.get("radius", B.radius);
        b.finish();
        h.A.push_back(B);
      }
    }
    o.get("seeds", h.seeds);
    o.get("max_blocks", h.max_blocks);
    o.get("min_blocks", h.min_blocks);
    o.get("max_merge", h.max_merge);
    o.get("word_length", h.word_length);
    o.get("calib_replicas", h.calib_replicas);
    o.get("calib_max_balls", h.calib_max_balls);
    o.get("m_ks", h.m_ks);
    o.get("m_replicas", h.m_replicas);
    o.finish();
  }
  top.finish();
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::config, path + ": " + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::config, e.what());
  }
  return parse_config(j);
}

/// Canonical form: every field, defaults filled in. `out` is a location, not
/// part of the experiment, so it stays out of the hash.
inline Json canonical_json(const ExperimentConfig& c) {
  Json j;
  j["model"] = c.model;
  j["sigma"] = c.sigma;
  j["seed"] = c.seed;
  j["simulate"] = Json{{"burn_in", c.simulate.burn_in}, {"n", c.simulate.n}, {"bins", c.simulate.bins}};
  j["lyapunov"] = Json{{"burn_in", c.lyapunov.burn_in}, {"n", c.lyapunov.n}, {"replicas", c.lyapunov.replicas}};
  j["ldp"] = Json{{"epsilon", c.ldp.epsilon}, {"delta", c.ldp.delta}, {"n_list", c.ldp.n_list},
                  {"replicas", c.ldp.replicas}};
  j["spectrum"] = Json{{"n_cells", c.spectrum.n_cells}, {"theta_list", c.spectrum.theta_list},
                       {"taylor_thetas", c.spectrum.taylor_thetas}};
  const auto& y = c.young;
  j["young"] = Json{{"ht_sigma2", y.ht_sigma2},
                    {"b", y.b},
                    {"r", y.r},
                    {"sparsity", y.sparsity},
                    {"variant", variant_name(y.variant)},
                    {"horizon", y.horizon},
                    {"orbit_length", y.orbit_length},
                    {"orbits", y.orbits},
                    {"replicas", y.replicas},
                    {"ks", y.ks},
                    {"tail_n", y.tail_n},
                    {"tail_replicas", y.tail_replicas},
                    {"calib_replicas", y.calib_replicas},
                    {"calib_max_balls", y.calib_max_balls}};
  const auto& h = c.horseshoe;
  Json A = Json::array();
  for (const auto& a : h.A) A.push_back(ball_json(a));
  j["horseshoe"] = Json{{"M", h.M},
                        {"kappa", h.kappa},
                        {"horizon", h.horizon},
                        {"j_radius", h.j_radius},
                        {"A", A},
                        {"seeds", h.seeds},
                        {"max_blocks", h.max_blocks},
                        {"min_blocks", h.min_blocks},
                        {"max_merge", h.max_merge},
                        {"word_length", h.word_length},
                        {"calib_replicas", h.calib_replicas},
                        {"calib_max_balls", h.calib_max_balls},
                        {"m_ks", h.m_ks},
                        {"m_replicas", h.m_replicas}};
  return j;
}

inline std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a64(canonical_json(c).dump())); }

}  // namespace rhlab
