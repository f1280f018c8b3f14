// Experiment runner: one subcommand per pipeline stage.
#include <chrono>
#include <ctime>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "rhlab/cli/stages.hpp"

using namespace rhlab;

namespace {

void emit_error(const std::string& name, const std::string& what, int code, const Json& extra = Json::object()) {
  Json j{{"error", name}, {"message", what}, {"exit_code", code}};
  for (const auto& [k, v] : extra.items()) j[k] = v;
  std::cerr << j.dump() << std::endl;
}

std::string utc_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rhlab: random hyperbolic dynamics experiments"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  std::string config_path, out_dir, variant;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--out", out_dir, "output directory (overrides config)");
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides config)");
  app.add_option("--threads", threads, "worker cap")->check(CLI::PositiveNumber);
  app.add_option("--variant", variant, "hyperbolic-time variant")
      ->check(CLI::IsMember({"paper_literal", "standard_alves"}));

  const std::vector<std::pair<const char*, const char*>> stages{
      {"simulate", "stationary histogram of one long orbit"},
      {"lyapunov", "Lyapunov exponent over replicas"},
      {"ldp", "Birkhoff tail probabilities"},
      {"spectrum", "spectral radius of the tilted operator"},
      {"young", "hyperbolic and Young times, ball stopping times"},
      {"horseshoe", "two-symbol horseshoe certificates for each A"},
  };
  for (const auto& [name, help] : stages) app.add_subcommand(name, help);
  auto* all = app.add_subcommand("all", "every stage in order, then report");
  std::string cert_path;
  auto* verify = app.add_subcommand("verify", "re-check a certificate file");
  verify->add_option("certificate", cert_path, "certificate JSON")->required();
  std::string report_dir;
  auto* report = app.add_subcommand("report", "bundle the artifacts of a run");
  report->add_option("dir", report_dir, "run directory (default: --out or the config's out)");

  CLI11_PARSE(app, argc, argv);
  set_thread_count(threads);
  const std::string sub = app.get_subcommands().front()->get_name();

  try {
    if (sub == "verify") {
      auto rep = verify_certificate_file(cert_path);
      Json j{{"certificate", cert_path}, {"ok", rep.ok}, {"failed_clauses", rep.failed_clauses}, {"detail", rep.detail}};
      std::cout << j.dump() << std::endl;
      if (!rep.ok) {
        emit_error("VerificationFailed", "clause " + rep.failed_clauses.front() + " failed: " + rep.detail, 2,
                   Json{{"failed_clauses", rep.failed_clauses}});
        return 2;
      }
      return 0;
    }
    if (sub == "report") {
      std::string dir = report_dir.empty() ? out_dir : report_dir;
      if (dir.empty() && !config_path.empty()) dir = load_config(config_path).out;
      if (dir.empty()) fail(ErrorCode::config, "report needs a directory");
      auto rep = build_report(dir);
      write_json((fs::path(dir) / "report.json").string(), rep);
      std::cout << "report: " << (fs::path(dir) / "report.json").string() << std::endl;
      return 0;
    }

    if (config_path.empty()) fail(ErrorCode::config, "--config is required for " + sub);
    auto cfg = load_config(config_path);
    if (*seed_opt) cfg.seed = seed;
    if (!variant.empty()) cfg.young.variant = parse_variant(variant);
    StageContext ctx(cfg, out_dir);
    Json meta{{"subcommand", sub},  {"config", config_path}, {"config_hash", ctx.hash},
              {"threads", threads}, {"timestamp", utc_now()}};
    write_json(ctx.file("run_meta.json").string(), meta);

    std::vector<std::string> todo;
    if (all->parsed()) {
      for (const auto& [name, help] : stages) todo.push_back(name);
    } else {
      todo.push_back(sub);
    }
    int code = 0;
    for (const auto& s : todo) {
      StageResult r;
      if (s == "simulate") r = run_simulate(ctx);
      else if (s == "lyapunov") r = run_lyapunov(ctx);
      else if (s == "ldp") r = run_ldp(ctx);
      else if (s == "spectrum") r = run_spectrum(ctx);
      else if (s == "young") r = run_young(ctx);
      else if (s == "horseshoe") r = run_horseshoe(ctx);
      std::cout << r.summary << std::endl;
      if (r.exit_code && !code) {
        code = r.exit_code;
        emit_error("VerificationFailed", r.summary, code);
      }
    }
    if (all->parsed()) {
      write_json(ctx.file("report.json").string(), build_report(ctx.out));
      std::cout << "report: " << ctx.file("report.json").string() << std::endl;
    }
    return code;
  } catch (const MissingArtifact& e) {
    int code = exit_code_for(e.code());
    emit_error("MissingArtifact", e.what(), code, Json{{"missing", e.stages()}});
    return code;
  } catch (const Error& e) {
    int code = exit_code_for(e.code());
    emit_error(std::string(error_name(e.code())), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    emit_error("InternalError", e.what(), 1);
    return 1;
  }
}
