#pragma once

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rhlab/cli/config.hpp"
#include "rhlab/cli/json_io.hpp"
#include "rhlab/covering/calibration.hpp"
#include "rhlab/horseshoe/certificate.hpp"
#include "rhlab/horseshoe/family.hpp"
#include "rhlab/hyperbolic/ball.hpp"
#include "rhlab/stats/histogram.hpp"
#include "rhlab/stats/ldp.hpp"
#include "rhlab/stats/lyapunov.hpp"
#include "rhlab/transfer/spectral.hpp"

namespace rhlab {

namespace fs = std::filesystem;

/// Shortest text that reads back to the same double.
inline std::string num(double v) {
  char buf[40];
  for (int p = 15; p <= 17; ++p) {
    std::snprintf(buf, sizeof buf, "%.*g", p, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// CSV with the config hash on a leading comment line.
class CsvWriter {
 public:
  CsvWriter(const std::string& hash, const std::vector<std::string>& header) {
    ss_ << "# config_hash=" << hash << "\n";
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) ss_ << (i ? "," : "") << cells[i];
    ss_ << "\n";
  }
  void save(const fs::path& p) const { write_text(p.string(), ss_.str()); }

 private:
  std::ostringstream ss_;
};

struct CsvTable {
  std::string hash;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    fail(ErrorCode::io, "csv has no column " + name);
  }
  double get(std::size_t r, const std::string& name) const { return std::stod(rows.at(r).at(col(name))); }
};

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

inline CsvTable read_csv(const fs::path& p) {
  std::istringstream in(read_text(p.string()));
  CsvTable t;
  std::string line;
  const std::string tag = "# config_hash=";
  if (!std::getline(in, line) || line.rfind(tag, 0) != 0) fail(ErrorCode::io, p.string() + ": missing hash line");
  t.hash = line.substr(tag.size());
  if (!std::getline(in, line)) fail(ErrorCode::io, p.string() + ": missing header");
  t.header = split_csv(line);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split_csv(line));
  return t;
}

struct StageContext {
  ExperimentConfig cfg;
  std::string hash;
  fs::path out;
  MapModel model;

  explicit StageContext(ExperimentConfig c, const std::string& out_dir = "")
      : cfg(std::move(c)), hash(config_hash(cfg)), out(out_dir.empty() ? cfg.out : out_dir), model(make_model(cfg.model)) {
    fs::create_directories(out);
  }
  fs::path file(const std::string& name) const { return out / name; }
  void save(const std::string& name, Json j) const {
    j["config_hash"] = hash;
    write_json(file(name).string(), j);
  }
};

/// One-line summary of a finished stage.
struct StageResult {
  std::string summary;
  int exit_code = 0;
};

inline StageResult run_simulate(const StageContext& ctx) {
  const auto& c = ctx.cfg.simulate;
  auto h = stationary_histogram(ctx.model, ctx.cfg.sigma, c.bins, c.n, ctx.cfg.seed, c.burn_in);
  CsvWriter w(ctx.hash, {"bin_lo", "bin_hi", "freq"});
  for (std::size_t j = 0; j < h.bins(); ++j) w.row({num(h.bin_lo(j)), num(h.bin_hi(j)), num(h.freq[j])});
  w.save(ctx.file("histogram.csv"));
  return {"simulate: " + std::to_string(h.bins()) + " bins over " + std::to_string(h.n_steps) + " steps"};
}

inline LyapunovEstimate stage_lyapunov_estimate(const StageContext& ctx) {
  const auto& c = ctx.cfg.lyapunov;
  return estimate_lyapunov(ctx.model, ctx.cfg.sigma, c.burn_in, c.n, c.replicas, ctx.cfg.seed);
}

inline StageResult run_lyapunov(const StageContext& ctx) {
  auto est = stage_lyapunov_estimate(ctx);
  CsvWriter w(ctx.hash, {"model", "sigma", "lambda_hat", "std_err", "n", "replicas"});
  w.row({ctx.cfg.model, num(ctx.cfg.sigma), num(est.lambda_hat), num(est.std_err), std::to_string(est.n_steps),
         std::to_string(est.n_replicas)});
  w.save(ctx.file("lyapunov.csv"));
  return {"lyapunov: lambda_hat = " + num(est.lambda_hat) + " +- " + num(est.std_err)};
}

inline StageResult run_ldp(const StageContext& ctx) {
  const auto& c = ctx.cfg.ldp;
  double lam = stage_lyapunov_estimate(ctx).lambda_hat;
  auto tc = ldp_tail(ctx.model, ctx.cfg.sigma, c.epsilon, c.delta, c.n_list, c.replicas, ctx.cfg.seed, lam);
  CsvWriter w(ctx.hash, {"n", "prob_S", "prob_Z", "hits_S", "hits_Z", "replicas", "rejections"});
  for (const auto& r : tc.rows)
    w.row({std::to_string(r.n), num(r.prob_S), num(r.prob_Z), std::to_string(r.hits_S), std::to_string(r.hits_Z),
           std::to_string(r.replicas), std::to_string(r.rejections)});
  w.save(ctx.file("tail.csv"));
  Json j;
  j["epsilon"] = c.epsilon;
  j["delta"] = c.delta;
  j["lambda_hat"] = lam;
  j["fitted_rate"] = tc.fitted_rate;
  j["fit_r2"] = tc.fit_r2;
  j["fit_rows"] = tc.fit_rows;
  j["fitted_rate_Z"] = tc.fitted_rate_Z;
  j["fit_r2_Z"] = tc.fit_r2_Z;
  j["fit_rows_Z"] = tc.fit_rows_Z;
  ctx.save("ldp.json", j);
  return {"ldp: fitted rate " + num(tc.fitted_rate) + " (R2 " + num(tc.fit_r2) + ", " + std::to_string(tc.fit_rows) +
          " rows)"};
}

inline StageResult run_spectrum(const StageContext& ctx) {
  const auto& c = ctx.cfg.spectrum;
  UlamGrid grid(c.n_cells);
  CsvWriter w(ctx.hash, {"theta", "lambda_theta", "residual", "iterations", "n_cells"});
  std::string last;
  for (double th : c.theta_list) {
    auto sr = spectral_radius(build_tilted(ctx.model, ctx.cfg.sigma, grid, th));
    w.row({num(th), num(sr.lambda_theta), num(sr.residual), std::to_string(sr.iterations), std::to_string(c.n_cells)});
    last = num(sr.lambda_theta);
  }
  w.save(ctx.file("spectrum.csv"));
  Json j;
  j["n_cells"] = c.n_cells;
  if (!c.taylor_thetas.empty()) {
    double lam = stage_lyapunov_estimate(ctx).lambda_hat;
    auto t = taylor_check(ctx.model, ctx.cfg.sigma, grid, c.taylor_thetas, lam);
    CsvWriter tw(ctx.hash, {"theta", "lambda_theta", "residual"});
    for (const auto& r : t.rows) tw.row({num(r.theta), num(r.lambda_theta), num(r.residual)});
    tw.save(ctx.file("taylor.csv"));
    j["lambda_hat"] = lam;
    j["residual_exponent"] = t.exponent;
    j["residual_coefficient"] = t.coefficient;
    j["fit_r2"] = t.fit_r2;
    j["exponent_ok"] = t.exponent_ok;
  }
  ctx.save("spectrum.json", j);
  return {"spectrum: " + std::to_string(c.theta_list.size()) + " thetas, last lambda_theta = " + last};
}

/// Calibration scale: the hyperbolic radius, kept below the 1/4 cap that
/// expanding maps without critical points would otherwise hit.
inline double calibration_scale(const MapModel& m, const HTParams& p) { return std::min(hyperbolic_radius(m, p), 0.2); }

inline ReferenceCalibration young_calibration(const StageContext& ctx) {
  const auto& y = ctx.cfg.young;
  auto p = y.params();
  CalibrationConfig cfg;
  cfg.replicas = y.calib_replicas;
  cfg.max_balls = y.calib_max_balls;
  return calibrate_reference(ctx.model, ctx.cfg.sigma, calibration_scale(ctx.model, p), cfg, ctx.cfg.seed);
}

inline StageResult run_young(const StageContext& ctx) {
  const auto& y = ctx.cfg.young;
  const auto p = y.params();
  auto cal = young_calibration(ctx);
  ctx.save("calibration.json", calibration_json(cal));
  auto cc = CoveringConfig::from(cal);

  CsvWriter tw(ctx.hash, {"replica", "i", "is_sparse", "is_young", "covering_step", "witness_x"});
  std::vector<TimeRecord> recs(y.orbits);
  std::vector<RandomOrbit> orbs(y.orbits);
  parallel_for(y.orbits, [&](std::size_t r) {
    double x0 = stationary_start(ctx.model, ctx.cfg.sigma, ctx.cfg.seed, r, 1000);
    orbs[r] = orbit(ctx.model, NoiseStream::replica(ctx.cfg.sigma, ctx.cfg.seed, r), x0, y.orbit_length);
    recs[r] = young_times(orbs[r], p, cc);
  });
  double density = 0.0;
  for (std::size_t r = 0; r < y.orbits; ++r) {
    const auto& rec = recs[r];
    std::set<std::size_t> sparse(rec.sparse_times.begin(), rec.sparse_times.end());
    std::size_t q = 0;
    for (std::size_t i : rec.hyperbolic_times) {
      while (q < rec.young_times.size() && rec.young_times[q] < i) ++q;
      bool young = q < rec.young_times.size() && rec.young_times[q] == i;
      tw.row({std::to_string(r), std::to_string(i), sparse.count(i) ? "1" : "0", young ? "1" : "0",
              young ? std::to_string(rec.young_events[q].step) : "", num(orbs[r].states[i])});
    }
    density += static_cast<double>(rec.young_times.size()) / static_cast<double>(y.orbit_length);
  }
  if (y.orbits) density /= static_cast<double>(y.orbits);
  tw.save(ctx.file("young_times.csv"));

  auto ms = m_stats(ctx.model, ctx.cfg.sigma, p, cc, y.ks, y.replicas, ctx.cfg.seed, y.horizon);
  CsvWriter mw(ctx.hash, {"interval_radius", "m_mean", "m_std", "n_min", "replicas", "censored"});
  for (const auto& r : ms.rows)
    mw.row({num(r.radius), num(r.m_mean), num(r.m_std), std::to_string(r.n_min), std::to_string(r.replicas),
            std::to_string(r.censored)});
  mw.save(ctx.file("m_stats.csv"));

  // tail of the Young-time counting function below half the mean density
  const double theta1 = density > 0.0 ? 0.5 * density : 0.05;
  auto yt = young_tail_stats(ctx.model, ctx.cfg.sigma, p, cc, y.tail_n, y.tail_replicas, theta1, ctx.cfg.seed);
  CsvWriter yw(ctx.hash, {"n", "prob", "hits", "replicas", "insufficient"});
  for (const auto& r : yt.rows)
    yw.row({std::to_string(r.m), num(r.prob), std::to_string(r.hits), std::to_string(r.replicas),
            r.insufficient ? "1" : "0"});
  yw.save(ctx.file("young_tail.csv"));

  Json j;
  j["variant"] = variant_name(p.variant);
  j["ht_sigma2"] = p.sigma2;
  j["delta1"] = cc.delta1;
  j["young_density"] = density;
  j["tail_theta1"] = theta1;
  j["tail_rate"] = yt.fit.slope;
  j["tail_fit_r2"] = yt.fit.r2;
  j["tail_fit_rows"] = yt.fit.n;
  j["m_slope"] = ms.fit.slope;
  j["m_intercept"] = ms.fit.intercept;
  j["m_r2"] = ms.fit.r2;
  j["m_slope_se"] = ms.slope_se;
  j["m_slope_ci95"] = Json::array({ms.fit.slope - 1.96 * ms.slope_se, ms.fit.slope + 1.96 * ms.slope_se});
  j["C_hat"] = ms.C_hat;
  ctx.save("young.json", j);
  return {"young: density " + num(density) + ", m slope " + num(ms.fit.slope) + " (R2 " + num(ms.fit.r2) + ")"};
}

/// Horseshoe search over the configured seeds for one open set A.
struct RegionAttempt {
  std::uint64_t seed = 0;
  std::size_t pair_i = 0, pair_j = 0;
  std::size_t common = 0;
  std::size_t blocks = 0;
  bool bonferroni = false;
  bool flags = false;
  std::string error;
};

struct RegionResult {
  Ball A;
  ReferenceCalibration cal;
  double C_hat = 0.0;
  std::size_t M = 0;
  double V_M = 0.0;
  std::vector<RegionAttempt> attempts;
  std::optional<HorseshoeCertificate> cert;
  std::vector<ShadowingProof> proofs;
  bool words_ok = false;
  bool words_distinct = false;
  bool ok = false;
};

inline RegionResult horseshoe_region(const MapModel& m, const ExperimentConfig& cfg, const Ball& A,
                                     const std::string& hash = "") {
  const auto& h = cfg.horseshoe;
  const auto p = cfg.young.params();
  RegionResult res;
  res.A = A;
  CalibrationConfig cc_cfg;
  cc_cfg.region = A;
  cc_cfg.j_radius = h.j_radius;
  cc_cfg.replicas = h.calib_replicas;
  cc_cfg.max_balls = h.calib_max_balls;
  res.cal = calibrate_reference(m, cfg.sigma, calibration_scale(m, p), cc_cfg, cfg.seed);
  const auto cc = CoveringConfig::from(res.cal);
  if (h.M) {
    res.M = h.M;
  } else {
    auto ms = m_stats(m, cfg.sigma, p, cc, h.m_ks, h.m_replicas, cfg.seed, cfg.young.horizon);
    res.C_hat = ms.C_hat;
    auto ch = choose_M(ms.C_hat, res.cal.J.diameter());
    res.M = ch.M;
    res.V_M = ch.V_M;
  }
  const auto balls = split_reference(res.cal.J, res.M);
  for (std::uint64_t seed : h.seeds) {
    RegionAttempt at;
    at.seed = seed;
    try {
      const auto noise = NoiseStream::replica(cfg.sigma, seed, 0);
      auto fams = collect_families(m, noise, balls, p, cc, h.horizon);
      at.bonferroni = bonferroni_check(fams, h.horizon).ok;
      auto pc = find_pair(fams, h.horizon);
      at.pair_i = pc.i;
      at.pair_j = pc.j;
      at.common = pc.times.size();
      PairData pd{pc.i, pc.j, balls[pc.i], balls[pc.j], res.cal.J, pc.times, &fams[pc.i], &fams[pc.j], h.horizon};
      CertificateOptions opt;
      opt.kappa = h.kappa;
      opt.max_blocks = h.max_blocks;
      opt.max_merge = h.max_merge;
      auto cert = build_certificate(m, noise, pd, opt);
      cert.seed = seed;
      cert.config_hash = hash;
      at.blocks = cert.blocks.size();
      at.flags = cert.flags.all();
      res.attempts.push_back(at);
      if (at.flags && at.blocks >= h.min_blocks && at.bonferroni) {
        res.cert = std::move(cert);
        break;
      }
    } catch (const Error& e) {
      at.error = std::string(error_name(e.code())) + ": " + e.what();
      res.attempts.push_back(at);
    }
  }
  if (!res.cert) return res;
  res.words_ok = true;
  std::set<std::string> xs;
  for (const auto& w : binary_words(h.word_length)) {
    try {
      auto sp = symbolic_shadow(m, *res.cert, w);
      res.words_ok = res.words_ok && sp.verified;
      xs.insert(sp.x.str());
      res.proofs.push_back(std::move(sp));
    } catch (const Error&) {
      res.words_ok = false;
    }
  }
  res.words_distinct = xs.size() == res.proofs.size() && res.proofs.size() == (std::size_t{1} << h.word_length);
  res.ok = res.words_ok && res.words_distinct;
  return res;
}

inline StageResult run_horseshoe(const StageContext& ctx) {
  const auto& h = ctx.cfg.horseshoe;
  Json regions = Json::array();
  std::size_t good = 0;
  for (std::size_t q = 0; q < h.A.size(); ++q) {
    auto res = horseshoe_region(ctx.model, ctx.cfg, h.A[q], ctx.hash);
    const std::string tag = "A" + std::to_string(q);
    ctx.save("calibration_" + tag + ".json", calibration_json(res.cal));
    Json r;
    r["A"] = ball_json(res.A);
    r["J"] = ball_json(res.cal.J);
    r["C_hat"] = res.C_hat;
    r["M"] = res.M;
    r["V_M"] = res.V_M;
    Json at = Json::array();
    for (const auto& a : res.attempts)
      at.push_back(Json{{"seed", a.seed},
                        {"pair", Json::array({a.pair_i, a.pair_j})},
                        {"common_times", a.common},
                        {"blocks", a.blocks},
                        {"bonferroni", a.bonferroni},
                        {"flags", a.flags},
                        {"error", a.error}});
    r["attempts"] = at;
    if (res.cert) {
      Json cj = certificate_json(*res.cert, "calibration_" + tag + ".json");
      write_json(ctx.file("certificate_" + tag + ".json").string(), cj);
      Json proofs = Json::array();
      for (const auto& sp : res.proofs) proofs.push_back(shadow_json(sp));
      ctx.save("shadow_" + tag + ".json", Json{{"word_length", h.word_length}, {"proofs", proofs}});
      r["certificate"] = "certificate_" + tag + ".json";
      r["seed"] = res.cert->seed;
      r["blocks"] = res.cert->blocks.size();
      r["flags"] = cj["flags"];
      std::size_t mx = 0, mn = SIZE_MAX;
      for (const auto& b : res.cert->blocks) {
        mx = std::max(mx, b.length());
        mn = std::min(mn, b.length());
      }
      r["min_block_length"] = mn;
      r["max_block_length"] = mx;
    }
    r["words_ok"] = res.words_ok;
    r["words_distinct"] = res.words_distinct;
    r["ok"] = res.ok;
    good += res.ok;
    regions.push_back(r);
  }
  ctx.save("horseshoe.json", Json{{"kappa", h.kappa}, {"horizon", h.horizon}, {"regions", regions}});
  StageResult out{"horseshoe: " + std::to_string(good) + "/" + std::to_string(h.A.size()) + " regions certified"};
  if (good < h.A.size()) out.exit_code = 2;
  return out;
}

/// Re-checks a certificate file from scratch. Names the failing clauses.
inline CertificateReport verify_certificate_file(const std::string& path) {
  auto cert = certificate_from(read_json(path));
  return reverify(make_model(cert.model), cert);
}

inline const std::vector<std::pair<std::string, std::vector<std::string>>>& stage_artifacts() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> t{
      {"simulate", {"histogram.csv"}},
      {"lyapunov", {"lyapunov.csv"}},
      {"ldp", {"tail.csv", "ldp.json"}},
      {"spectrum", {"spectrum.csv", "spectrum.json"}},
      {"young", {"calibration.json", "young_times.csv", "m_stats.csv", "young_tail.csv", "young.json"}},
      {"horseshoe", {"horseshoe.json"}},
  };
  return t;
}

class MissingArtifact : public Error {
 public:
  explicit MissingArtifact(std::vector<std::string> stages)
      : Error(ErrorCode::missing_artifact, "missing stages: " + join(stages)), stages_(std::move(stages)) {}
  const std::vector<std::string>& stages() const { return stages_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
    return s;
  }
  std::vector<std::string> stages_;
};

/// Cross-linked summary of every stage in `dir`. Rows copied from CSVs keep
/// their text so the numbers are reproduced exactly.
inline Json build_report(const fs::path& dir) {
  std::vector<std::string> missing;
  for (const auto& [stage, files] : stage_artifacts())
    for (const auto& f : files)
      if (!fs::exists(dir / f)) {
        missing.push_back(stage);
        break;
      }
  if (!missing.empty()) throw MissingArtifact(missing);

  std::set<std::string> hashes;
  auto csv = [&](const std::string& f) {
    auto t = read_csv(dir / f);
    hashes.insert(t.hash);
    return t;
  };
  auto json = [&](const std::string& f) {
    auto j = read_json((dir / f).string());
    hashes.insert(j.value("config_hash", std::string{}));
    return j;
  };
  Json rep;
  auto ly = csv("lyapunov.csv");
  rep["lyapunov"] = Json{{"model", ly.rows.at(0).at(ly.col("model"))},
                         {"lambda_hat", ly.get(0, "lambda_hat")},
                         {"std_err", ly.get(0, "std_err")}};
  auto sp = csv("spectrum.csv");
  Json rows = Json::array();
  for (std::size_t r = 0; r < sp.rows.size(); ++r)
    rows.push_back(Json{{"theta", sp.rows[r][sp.col("theta")]}, {"lambda_theta", sp.rows[r][sp.col("lambda_theta")]}});
  auto sj = json("spectrum.json");
  rep["spectrum"] = Json{{"rows", rows},
                         {"residual_exponent", sj.value("residual_exponent", 0.0)},
                         {"residual_fit_r2", sj.value("fit_r2", 0.0)},
                         {"exponent_ok", sj.value("exponent_ok", false)}};
  auto tail = csv("tail.csv");
  auto lj = json("ldp.json");
  // e^{-rate} against min over theta of e^{-(lambda + eps) theta} lambda_theta
  const double lam = ly.get(0, "lambda_hat"), eps = lj.at("epsilon").get<double>();
  double bound = kInf;
  for (std::size_t r = 0; r < sp.rows.size(); ++r) {
    double th = sp.get(r, "theta");
    if (th > 0.0) bound = std::min(bound, ldp_rate_bound(th, eps, lam, sp.get(r, "lambda_theta")));
  }
  // no fit (no hits, as for constant-derivative maps) leaves the comparison empty
  const bool fitted = lj.at("fit_rows").get<std::size_t>() >= 2;
  const double mc = std::exp(-lj.at("fitted_rate").get<double>());
  rep["ldp"] = Json{{"epsilon", eps},
                    {"tail_rows", tail.rows.size()},
                    {"fitted_rate", lj.at("fitted_rate")},
                    {"fit_r2", lj.at("fit_r2")},
                    {"fit_rows", lj.at("fit_rows")},
                    {"mc_per_step", fitted ? Json(mc) : Json()},
                    {"spectral_bound", std::isfinite(bound) ? Json(bound) : Json()},
                    {"consistent", fitted && std::isfinite(bound) ? Json(mc <= bound + 0.05) : Json()}};
  csv("young_times.csv");
  csv("young_tail.csv");
  auto ms = csv("m_stats.csv");
  json("calibration.json");
  auto yj = json("young.json");
  rep["young"] = Json{{"density", yj.at("young_density")},
                      {"tail_rate", yj.at("tail_rate")},
                      {"m_rows", ms.rows.size()},
                      {"m_slope", yj.at("m_slope")},
                      {"m_slope_ci95", yj.at("m_slope_ci95")},
                      {"m_r2", yj.at("m_r2")},
                      {"C_hat", yj.at("C_hat")}};
  csv("histogram.csv");
  auto hj = json("horseshoe.json");
  Json regs = Json::array();
  for (const auto& r : hj.at("regions"))
    regs.push_back(Json{{"A", r.at("A")},
                        {"ok", r.at("ok")},
                        {"blocks", r.value("blocks", 0)},
                        {"flags", r.contains("flags") ? r.at("flags") : Json()}});
  rep["horseshoe"] = Json{{"regions", regs}};
  if (hashes.size() != 1) fail(ErrorCode::config, "artifacts carry different config hashes");
  rep["config_hash"] = *hashes.begin();
  return rep;
}

}  // namespace rhlab
