#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <optional>

#include "rhlab/cli/stages.hpp"

using namespace rhlab;

namespace {

std::optional<ErrorCode> code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

ExperimentConfig parse(const std::string& text) { return parse_config(Json::parse(text)); }

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("rhlab_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig tiny_logistic() {
  auto c = parse(R"({"model": "logistic16", "sigma": 0.1})");
  c.horseshoe.A = {Ball{0.3, 0.05}};
  c.horseshoe.max_blocks = 6;
  c.horseshoe.min_blocks = 6;
  c.horseshoe.word_length = 3;
  c.horseshoe.horizon = 800;
  return c;
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  auto c = parse(R"({"model": "ternary", "sigma": 0.2, "ldp": {"epsilon": 0.3}})");
  EXPECT_EQ(c.model, "ternary");
  EXPECT_EQ(c.sigma, 0.2);
  EXPECT_EQ(c.ldp.epsilon, 0.3);
  EXPECT_EQ(c.ldp.replicas, 100000u);
  EXPECT_EQ(c.young.variant, HTVariant::standard_alves);
}

TEST(Config, RejectsUnknownKeysAndBadTypes) {
  EXPECT_EQ(code_of([] { parse(R"({"bogus": 1})"); }), ErrorCode::config);
  EXPECT_EQ(code_of([] { parse(R"({"young": {"sigma2": 0.5}})"); }), ErrorCode::config);
  EXPECT_EQ(code_of([] { parse(R"({"sigma": "big"})"); }), ErrorCode::config);
  EXPECT_EQ(code_of([] { parse(R"({"young": {"ht_sigma": 0.7, "ht_sigma2": 0.5}})"); }), ErrorCode::config);
  EXPECT_EQ(code_of([] { parse(R"({"model": "tent"})"); }), ErrorCode::config);
  EXPECT_EQ(exit_code_for(ErrorCode::config), 3);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* f : {"doubling.json", "logistic16.json"})
    EXPECT_NO_THROW(load_config(std::string(RHLAB_SOURCE_DIR) + "/configs/" + f)) << f;
}

TEST(Config, HashIgnoresOutOnly) {
  auto a = parse(R"({"out": "x"})");
  auto b = parse(R"({"out": "y"})");
  auto c = parse(R"({"sigma": 0.11})");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(c));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Csv, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -std::log(2.0), 1e-300, 12345678.9})
    EXPECT_EQ(std::stod(num(v)), v);
  auto dir = scratch("csv");
  CsvWriter w("abc", {"x", "y"});
  w.row({num(0.1), num(2.0)});
  w.save(dir / "t.csv");
  auto t = read_csv(dir / "t.csv");
  EXPECT_EQ(t.hash, "abc");
  EXPECT_EQ(t.get(0, "x"), 0.1);
  EXPECT_EQ(code_of([&] { t.col("z"); }), ErrorCode::io);
  fs::remove_all(dir);
}

TEST(Report, MissingStagesAreListed) {
  auto dir = scratch("empty");
  try {
    build_report(dir);
    FAIL() << "expected MissingArtifact";
  } catch (const MissingArtifact& e) {
    EXPECT_EQ(e.stages().size(), 6u);
    EXPECT_EQ(exit_code_for(e.code()), 3);
  }
  fs::remove_all(dir);
}

TEST(Report, DoublingRunAndHashMismatch) {
  auto cfg = load_config(std::string(RHLAB_SOURCE_DIR) + "/configs/doubling.json");
  cfg.lyapunov.n = 20000;
  cfg.ldp.replicas = 2000;
  cfg.spectrum.n_cells = 64;
  auto dir = scratch("doubling");
  StageContext ctx(cfg, dir.string());
  for (auto* run : {run_simulate, run_lyapunov, run_ldp, run_spectrum, run_young, run_horseshoe})
    EXPECT_EQ(run(ctx).exit_code, 0);
  auto rep = build_report(dir);
  EXPECT_EQ(rep["lyapunov"]["lambda_hat"].get<double>(), -std::log(2.0));
  EXPECT_TRUE(rep["ldp"]["consistent"].is_null());  // no hits for a constant derivative

  auto other = cfg;
  other.sigma = 0.2;
  StageContext ctx2(other, dir.string());
  run_lyapunov(ctx2);
  EXPECT_EQ(code_of([&] { build_report(dir); }), ErrorCode::config);
  fs::remove_all(dir);
}

TEST(CertificateJson, RoundTripAndTamper) {
  auto cfg = tiny_logistic();
  auto m = make_model(cfg.model);
  auto res = horseshoe_region(m, cfg, cfg.horseshoe.A[0], config_hash(cfg));
  ASSERT_TRUE(res.cert.has_value());
  ASSERT_TRUE(res.ok);
  auto dir = scratch("cert");
  const auto path = (dir / "c.json").string();
  write_json(path, certificate_json(*res.cert));
  auto back = certificate_from(read_json(path));
  EXPECT_EQ(certificate_json(back).dump(), certificate_json(*res.cert).dump());
  EXPECT_TRUE(verify_certificate_file(path).ok);

  auto j = read_json(path);
  j["I1"]["center"] = j["I0"]["center"];
  write_json(path, j);
  auto rep = verify_certificate_file(path);
  EXPECT_FALSE(rep.ok);

  write_text(path, "{ not json");
  EXPECT_EQ(code_of([&] { verify_certificate_file(path); }), ErrorCode::io);
  fs::remove_all(dir);
  EXPECT_EQ(code_of([&] { verify_certificate_file(path); }), ErrorCode::missing_artifact);
}
