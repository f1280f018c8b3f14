#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "rhlab/covering/calibration.hpp"
#include "rhlab/horseshoe/certificate.hpp"
#include "rhlab/util/error.hpp"

namespace rhlab {

using Json = nlohmann::ordered_json;

inline Json ball_json(const Ball& b) { return Json{{"center", b.center}, {"radius", b.radius}}; }

inline Ball ball_from(const Json& j) {
  try {
    return Ball{j.at("center").get<double>(), j.at("radius").get<double>()};
  } catch (const Json::exception& e) {
    fail(ErrorCode::io, std::string("bad ball: ") + e.what());
  }
}

inline Json calibration_json(const ReferenceCalibration& c) {
  Json j;
  j["model"] = c.model;
  j["sigma"] = c.sigma;
  j["J"] = ball_json(c.J);
  j["N"] = c.N;
  j["iota"] = c.iota;
  j["rho_hat"] = c.rho_hat;
  j["delta1"] = c.delta1;
  j["epsilon_scale"] = c.epsilon_scale;
  j["seed"] = c.seed;
  j["n_cells"] = c.n_cells;
  j["unvisited_cells"] = c.unvisited.size();
  j["min_orbit_dist"] = c.min_orbit_dist;
  return j;
}

/// The fields a covering config needs; diagnostics are not restored.
inline ReferenceCalibration calibration_from(const Json& j) {
  ReferenceCalibration c;
  try {
    c.model = j.at("model").get<std::string>();
    c.sigma = j.at("sigma").get<double>();
    c.J = ball_from(j.at("J"));
    c.N = j.at("N").get<std::size_t>();
    c.iota = j.at("iota").get<double>();
    c.rho_hat = j.at("rho_hat").get<double>();
    c.delta1 = j.at("delta1").get<double>();
    c.epsilon_scale = j.value("epsilon_scale", 0.0);
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    fail(ErrorCode::io, std::string("bad calibration: ") + e.what());
  }
  return c;
}

inline const char* kWitnessKeys[4] = {"00", "01", "10", "11"};

inline Json certificate_json(const HorseshoeCertificate& c, const std::string& calib_ref = "") {
  Json j;
  j["model"] = c.model;
  j["sigma"] = c.sigma;
  j["seed"] = c.seed;
  j["noise_key"] = c.noise_key;
  j["calib_ref"] = calib_ref;
  j["J"] = ball_json(c.J);
  j["pair"] = Json::array({c.pair_i, c.pair_j});
  j["I0"] = ball_json(c.I0);
  j["I1"] = ball_json(c.I1);
  j["kappa"] = c.kappa;
  j["horizon"] = c.horizon;
  j["times"] = c.times;
  Json blocks = Json::array();
  for (const auto& b : c.blocks) {
    Json jb;
    jb["n_k"] = b.n_k;
    jb["n_k1"] = b.n_k1;
    jb["prec"] = b.prec;
    jb["merged"] = b.merged;
    Json ws = Json::object();
    for (int ab = 0; ab < 4; ++ab) {
      const auto& w = b.w[ab];
      Json jw;
      if (w.found) {
        jw["center"] = w.center;
        jw["radius"] = w.radius;
        jw["inv_deriv_bound"] = w.inv_deriv_bound;
      } else {
        jw["missing"] = w.note;
      }
      ws[kWitnessKeys[ab]] = jw;
    }
    jb["witnesses"] = ws;
    jb["flags"] = Json{{"e1", b.e1}, {"idk", b.idk}, {"e2", b.e2}};
    blocks.push_back(jb);
  }
  j["blocks"] = blocks;
  j["increments_mean"] = c.increments_mean;
  j["increments_sd"] = c.increments_sd;
  j["e0_gap"] = c.e0_gap;
  j["flags"] = Json{{"disjoint", c.flags.disjoint}, {"e1", c.flags.e1}, {"idk", c.flags.idk},
                    {"e2", c.flags.e2},             {"e0_proxy", c.flags.e0_proxy}};
  j["config_hash"] = c.config_hash;
  return j;
}

inline HorseshoeCertificate certificate_from(const Json& j) {
  HorseshoeCertificate c;
  try {
    c.model = j.at("model").get<std::string>();
    c.sigma = j.at("sigma").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.noise_key = j.at("noise_key").get<std::uint64_t>();
    c.J = ball_from(j.at("J"));
    c.pair_i = j.at("pair").at(0).get<std::size_t>();
    c.pair_j = j.at("pair").at(1).get<std::size_t>();
    c.I0 = ball_from(j.at("I0"));
    c.I1 = ball_from(j.at("I1"));
    c.kappa = j.at("kappa").get<double>();
    c.horizon = j.at("horizon").get<std::size_t>();
    c.times = j.at("times").get<std::vector<std::size_t>>();
    for (const auto& jb : j.at("blocks")) {
      CertBlock b;
      b.n_k = jb.at("n_k").get<std::size_t>();
      b.n_k1 = jb.at("n_k1").get<std::size_t>();
      b.prec = jb.at("prec").get<long>();
      b.merged = jb.value("merged", std::size_t{0});
      for (int ab = 0; ab < 4; ++ab) {
        const auto& jw = jb.at("witnesses").at(kWitnessKeys[ab]);
        auto& w = b.w[ab];
        w.a = ab / 2;
        w.b = ab % 2;
        w.found = jw.contains("center");
        if (w.found) {
          w.center = jw.at("center").get<std::string>();
          w.radius = jw.at("radius").get<std::string>();
          w.inv_deriv_bound = jw.at("inv_deriv_bound").get<std::string>();
        } else {
          w.note = jw.value("missing", std::string{});
        }
      }
      const auto& f = jb.at("flags");
      b.e1 = f.at("e1").get<bool>();
      b.idk = f.at("idk").get<bool>();
      b.e2 = f.at("e2").get<bool>();
      c.blocks.push_back(std::move(b));
    }
    c.increments_mean = j.at("increments_mean").get<double>();
    c.increments_sd = j.value("increments_sd", 0.0);
    c.e0_gap = j.value("e0_gap", 0.0);
    const auto& f = j.at("flags");
    c.flags.disjoint = f.at("disjoint").get<bool>();
    c.flags.e1 = f.at("e1").get<bool>();
    c.flags.idk = f.at("idk").get<bool>();
    c.flags.e2 = f.at("e2").get<bool>();
    c.flags.e0_proxy = f.at("e0_proxy").get<bool>();
    c.config_hash = j.value("config_hash", std::string{});
  } catch (const Json::exception& e) {
    fail(ErrorCode::io, std::string("bad certificate: ") + e.what());
  }
  return c;
}

inline Json shadow_json(const ShadowingProof& sp) {
  Json j;
  j["word"] = sp.word;
  j["times"] = sp.times;
  j["x"] = sp.x.str();
  j["prec"] = sp.prec;
  j["verified"] = sp.verified;
  Json K = Json::array();
  for (const auto& [lo, hi] : sp.K) K.push_back(Json::array({lo.str(Round::down), hi.str(Round::up)}));
  j["intervals"] = K;
  return j;
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::missing_artifact, "cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io, "cannot write " + path);
  f << text;
  if (!f) fail(ErrorCode::io, "short write to " + path);
}

inline Json read_json(const std::string& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::io, path + ": " + e.what());
  }
}

inline void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace rhlab
