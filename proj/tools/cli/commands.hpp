#pragma once

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>

#include "targetctl/matops.hpp"

namespace targetctl::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,
  kExitNotTargetControllable = 3,
  kExitExistence = 4,
  kExitNumerical = 5,
};

struct CommonOptions {
  ToleranceConfig tol;
  std::uint64_t seed = 0;
  /// Echoed into the report as given on the command line.
  std::string invocation;
};

struct Report {
  nlohmann::ordered_json doc;
  std::string text;
  int exit_code = kExitOk;
};

struct DesignArgs {
  std::string system_path;
  std::string poles;
  std::optional<std::string> out;
};

struct VerifyArgs {
  std::string system_path;
  std::string design_path;
  std::optional<double> t_final;
  double dt = 1e-3;
};

struct SimulateArgs {
  std::string system_path;
  std::string design_path;
  /// Defaults to all ones.
  std::optional<std::string> x0;
  double t_final = 10.0;
  double dt = 1e-3;
  std::optional<std::string> csv;
};

Report run_check(const std::string& system_path, const CommonOptions& options);
Report run_design(const DesignArgs& args, const CommonOptions& options);
Report run_verify(const VerifyArgs& args, const CommonOptions& options);
Report run_simulate(const SimulateArgs& args, const CommonOptions& options);

}  // namespace targetctl::cli
