#pragma once

// Configuration parsing, command drivers and result files.

#include <iosfwd>
#include <string>
#include <vector>

#include "fsi/coupled_stepper.hpp"
#include "fsi/error.hpp"

namespace fsi {

/// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,     // refuted certificate, failed identity or MMS check, other errors
  kExitDegenerate = 2,  // MapDegenerate, DegenerateCoefficient
  kExitSolver = 3,      // SolverFailure, CouplingResidualExceeded
  kExitInput = 4,       // ParseError, ValidationError
};

int exit_code_for(ErrorCode code);

/// Strict JSON parsing: unknown keys and wrong types raise ParseError with the
/// dotted key and the line where it appears; invariant violations raise
/// ValidationError naming every offending field. `geometry` and `time` are
/// required sections, everything else has defaults.
SimulationConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
SimulationConfig parse_config(const std::string& path);

/// Canonical JSON echo of a config, defaults included (sorted keys, compact).
std::string config_to_json(const SimulationConfig& cfg);
/// Git blob hash (SHA-1 of "blob <size>\0<content>") of the canonical echo.
std::string config_hash(const SimulationConfig& cfg);
std::string git_blob_sha1(const std::string& content);

inline constexpr const char* kCsvHeader = "t,E,D,E1,D1,E2,D2,X,R1,R2,iface_res,det_dev,ellip_min";
/// One CSV row, 17 significant digits.
std::string csv_row(const EnergyRecord& r);

/// Pass/fail of the invariant checks reported in the run summary.
struct InvariantCheck {
  std::string name;
  bool applicable = true;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
};

std::vector<InvariantCheck> evaluate_checks(const SimulationConfig& cfg, const RunResult& result);

/// Decay fit over the last diagnostics.fit_fraction of the run.
DecayFit summary_fit(const SimulationConfig& cfg, const RunResult& result);

int cmd_run(const std::string& config_path, const std::string& out_dir, std::ostream& log);
int cmd_check_escape(const std::string& config_path, std::ostream& out);
int cmd_verify_identities(const std::string& config_path, std::ostream& out);
int cmd_mms(int levels, std::ostream& out);

/// Escape field described by the config (before negation is applied).
VectorFieldH escape_field(const SimulationConfig& cfg);

}  // namespace fsi
