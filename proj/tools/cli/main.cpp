#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "commands.hpp"

namespace {

void add_common(CLI::App& cmd, targetctl::cli::CommonOptions& common, bool& as_json) {
  cmd.add_option("--rank-rtol", common.tol.rank_rtol, "relative rank threshold")
      ->capture_default_str();
  cmd.add_option("--eig-atol", common.tol.eig_atol, "eigenvalue matching tolerance")
      ->capture_default_str();
  cmd.add_option("--residual-atol", common.tol.residual_atol, "matrix residual tolerance")
      ->capture_default_str();
  cmd.add_option("--seed", common.seed, "seed for placement and initial states")
      ->capture_default_str();
  cmd.add_flag("--json", as_json, "print the report as JSON");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = targetctl::cli;
  CLI::App app{"Target output controllability analysis and controller design"};
  app.require_subcommand(1);

  cli::CommonOptions common;
  for (int i = 0; i < argc; ++i) common.invocation += (i ? " " : "") + std::string(argv[i]);
  bool as_json = false;

  std::string system_path;
  std::string design_path;

  auto* check = app.add_subcommand("check", "run every controllability and existence test");
  check->add_option("system", system_path, "system file")->required();
  add_common(*check, common, as_json);

  cli::DesignArgs design_args;
  auto* design = app.add_subcommand("design", "synthesize a target output controller");
  design->add_option("system", design_args.system_path, "system file")->required();
  design->add_option("--poles", design_args.poles, "closed-loop poles, e.g. -2,-1+2i,-1-2i")
      ->required()
      ->allow_extra_args(false);
  design->add_option("--out", design_args.out, "write the design file here");
  add_common(*design, common, as_json);

  cli::VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "check a gain against a system");
  verify->add_option("system", verify_args.system_path, "system file")->required();
  verify->add_option("design", verify_args.design_path, "design file")->required();
  verify->add_option("--tfinal", verify_args.t_final,
                     "simulation horizon (default 20/slowest rate)");
  verify->add_option("--dt", verify_args.dt, "RK4 step")->capture_default_str();
  add_common(*verify, common, as_json);

  cli::SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "integrate the closed loop");
  simulate->add_option("system", sim_args.system_path, "system file")->required();
  simulate->add_option("design", sim_args.design_path, "design file")->required();
  simulate->add_option("--x0", sim_args.x0, "initial state, e.g. 1,0,0 (default all ones)");
  simulate->add_option("--tfinal", sim_args.t_final, "final time")->capture_default_str();
  simulate->add_option("--dt", sim_args.dt, "RK4 step")->capture_default_str();
  simulate->add_option("--out", sim_args.csv, "write the trajectory CSV here");
  add_common(*simulate, common, as_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitInput;
  }

  cli::Report report;
  if (*check)
    report = cli::run_check(system_path, common);
  else if (*design)
    report = cli::run_design(design_args, common);
  else if (*verify)
    report = cli::run_verify(verify_args, common);
  else
    report = cli::run_simulate(sim_args, common);

  if (as_json)
    std::cout << report.doc.dump(2) << '\n';
  else if (report.exit_code == cli::kExitInput)
    std::cerr << report.text;
  else
    std::cout << report.text;
  return report.exit_code;
}
