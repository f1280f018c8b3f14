#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rhlab {

enum class ErrorCode {
  config,
  critical_hit,
  theta_too_large,
  grid_too_coarse,
  no_convergence,
  branch_explosion,
  horizon_exceeded,
  calibration_failed,
  no_feasible_m,
  empty_intersection,
  verification_failed,
  pullback_empty,
  missing_artifact,
  insufficient_data,
  no_witness,
  io,
};

inline std::string_view error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::config: return "ConfigError";
    case ErrorCode::critical_hit: return "CriticalHit";
    case ErrorCode::theta_too_large: return "ThetaTooLarge";
    case ErrorCode::grid_too_coarse: return "GridTooCoarse";
    case ErrorCode::no_convergence: return "NoConvergence";
    case ErrorCode::branch_explosion: return "BranchExplosion";
    case ErrorCode::horizon_exceeded: return "HorizonExceeded";
    case ErrorCode::calibration_failed: return "CalibrationFailed";
    case ErrorCode::no_feasible_m: return "NoFeasibleM";
    case ErrorCode::empty_intersection: return "EmptyIntersection";
    case ErrorCode::verification_failed: return "VerificationFailed";
    case ErrorCode::pullback_empty: return "PullbackEmpty";
    case ErrorCode::missing_artifact: return "MissingArtifact";
    case ErrorCode::insufficient_data: return "InsufficientData";
    case ErrorCode::no_witness: return "NoWitness";
    case ErrorCode::io: return "IoError";
  }
  return "Error";
}

/// CLI exit status for an error class: 2 verification, 3 config, 4 exhaustion.
inline int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::verification_failed:
    case ErrorCode::pullback_empty: return 2;
    case ErrorCode::config:
    case ErrorCode::theta_too_large:
    case ErrorCode::grid_too_coarse:
    case ErrorCode::missing_artifact: return 3;
    case ErrorCode::no_convergence:
    case ErrorCode::horizon_exceeded:
    case ErrorCode::calibration_failed:
    case ErrorCode::no_feasible_m:
    case ErrorCode::empty_intersection:
    case ErrorCode::branch_explosion:
    case ErrorCode::no_witness: return 4;
    default: return 1;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace rhlab
