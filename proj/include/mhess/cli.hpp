#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mhess/differentiation.hpp"
#include "mhess/energy.hpp"
#include "mhess/envelope.hpp"
#include "mhess/solver.hpp"

namespace mhess::cli {

enum ExitCode : int { kSuccess = 0, kConfigError = 1, kNotConverged = 2, kVerificationFailed = 3 };

struct VerifySettings {
  std::string suite = "all";
  /// When set, every check is re-decided with this tolerance.
  std::optional<double> tolerance;
  int pairs = 5;
};

/// Parsed and validated run configuration. Problem sections stay as JSON and
/// are turned into fields by the commands (relative file paths are resolved
/// against `base_dir`).
struct RunConfig {
  int n = 2;
  int N = 8;
  int m = 1;
  Backend backend = Backend::spectral;
  SolverConfig solver;
  BetaSchedule beta;
  EnvelopeOptions envelope;
  AscentConfig ascent;
  VerifySettings verify;
  std::uint64_t seed = 1;
  std::filesystem::path output = "out";
  std::filesystem::path base_dir = ".";

  nlohmann::json field;
  nlohmann::json obstacle;
  nlohmann::json density;
  nlohmann::json sets;
  std::vector<double> profile_levels;
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

/// Builds grid functions from the analytic catalogue or field files.
ScalarField build_field(const nlohmann::json& spec, const TorusGrid& g, const Differentiator& d, int m,
                        const std::filesystem::path& base_dir);
DensityField build_density(const nlohmann::json& spec, const TorusGrid& g, const Differentiator& d, int m,
                           const std::filesystem::path& base_dir);
SetMask build_sets(const nlohmann::json& spec, const TorusGrid& g);

int cmd_solve(const RunConfig& cfg, std::ostream& out);
int cmd_envelope(const RunConfig& cfg, std::ostream& out);
int cmd_capacity(const RunConfig& cfg, std::ostream& out);
int cmd_energy(const RunConfig& cfg, std::ostream& out);
int cmd_variational(const RunConfig& cfg, std::ostream& out);
int cmd_verify(const RunConfig& cfg, const std::string& suite, std::ostream& out);

/// Full entry point: argument parsing, dispatch and error-to-exit-code
/// mapping. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mhess::cli
