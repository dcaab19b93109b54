#include "commands.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <utility>

#include "system_file.hpp"
#include "targetctl/analysis.hpp"
#include "targetctl/errors.hpp"
#include "targetctl/synthesis.hpp"
#include "targetctl/verify.hpp"

namespace targetctl::cli {

namespace {

using json = nlohmann::ordered_json;

std::string num(double value) {
  std::ostringstream out;
  out << std::setprecision(6) << value;
  return out.str();
}

std::string num(Complex value) {
  if (value.imag() == 0.0) return num(value.real());
  std::ostringstream out;
  out << std::setprecision(6) << value.real() << (value.imag() < 0.0 ? "-" : "+")
      << std::abs(value.imag()) << "i";
  return out.str();
}

std::string num(const ComplexList& values) {
  std::string out = "{";
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? ", " : "") + num(values[i]);
  return out + "}";
}

std::string num(const Vector& values) {
  std::string out = "[";
  for (Index i = 0; i < values.size(); ++i) out += (i ? ", " : "") + num(values(i));
  return out + "]";
}

std::string yes_no(bool value) { return value ? "YES" : "NO"; }
std::string pass_fail(bool value) { return value ? "PASS" : "FAIL"; }

void print_matrix(std::ostream& out, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    out << "   ";
    for (Index j = 0; j < m.cols(); ++j) out << ' ' << std::setw(12) << num(m(i, j));
    out << '\n';
  }
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const ComplexList& values) {
  json out = json::array();
  for (const Complex z : values) out.push_back(json::array({z.real(), z.imag()}));
  return out;
}

json to_json(const RankReport& report) {
  return {{"rank", report.rank},
          {"threshold", report.threshold_used},
          {"singular_values", to_json(report.singular_values)}};
}

json to_json(const DesignResult& d) {
  return {{"mode", to_string(d.mode)},
          {"gain", to_json(d.gain)},
          {"augmentation", d.augmentation ? to_json(*d.augmentation) : json(nullptr)},
          {"target", to_json(d.target)},
          {"requested_poles", to_json(d.requested_poles.poles)},
          {"achieved_subsystem_eigs", to_json(d.achieved_subsystem_eigs)},
          {"closed_loop_eigs", to_json(d.closed_loop_eigs)},
          {"residual_spectrum", to_json(d.residual_spectrum)},
          {"sylvester_residual", d.sylvester_residual}};
}

Report start(const char* command, const CommonOptions& options, json inputs) {
  Report report;
  report.doc["command"] = command;
  report.doc["invocation"] = options.invocation;
  report.doc["inputs"] = std::move(inputs);
  report.doc["tolerances"] = {{"rank_rtol", options.tol.rank_rtol},
                              {"eig_atol", options.tol.eig_atol},
                              {"residual_atol", options.tol.residual_atol}};
  report.doc["seed"] = options.seed;
  return report;
}

void finish(Report& report, int code, const std::string& message) {
  report.exit_code = code;
  report.doc["status"] = {{"exit_code", code}, {"ok", code == kExitOk}, {"message", message}};
}

// Runs `body`, turning library errors into exit codes. `body` fills the
// report and text stream and returns (code, message).
template <typename Body>
Report guarded(Report report, Body&& body) {
  std::ostringstream text;
  std::pair<int, std::string> outcome;
  try {
    outcome = body(report.doc, text);
  } catch (const InputError& e) {
    outcome = {kExitInput, std::string("input error: ") + e.what()};
  } catch (const ExistenceError& e) {
    outcome = {kExitExistence, std::string("existence condition failed: ") + e.what()};
  } catch (const NeedsAugmentationError& e) {
    outcome = {kExitExistence, std::string("needs augmentation: ") + e.what()};
  } catch (const Error& e) {
    outcome = {kExitNumerical, std::string("numerical failure: ") + e.what()};
  } catch (const std::exception& e) {
    outcome = {kExitNumerical, std::string("internal error: ") + e.what()};
  }
  text << outcome.second << '\n';
  report.text = text.str();
  finish(report, outcome.first, outcome.second);
  return report;
}

json describe_system(const SystemFile& file, const LinearSystem& sys) {
  return {{"states", sys.states()},
          {"inputs", sys.inputs()},
          {"outputs", file.c ? json(file.c->rows()) : json(nullptr)},
          {"target_rows", file.target().rows()},
          {"target_source", file.target_is_output() ? "C" : "F"}};
}

void print_system(std::ostream& text, const SystemFile& file, const LinearSystem& sys) {
  text << "system: n = " << sys.states() << ", m = " << sys.inputs();
  if (file.c) text << ", p = " << file.c->rows();
  text << "; target " << (file.target_is_output() ? "F := C (no F given)" : "F") << " with "
       << file.target().rows() << (file.target().rows() == 1 ? " row\n" : " rows\n");
}

int exit_code_for(FailureReason reason) {
  switch (reason) {
    case FailureReason::kNotTargetOutputControllable:
      return kExitNotTargetControllable;
    case FailureReason::kSubsystemUncontrollable:
    case FailureReason::kAugmentedInvarianceFailed:
    case FailureReason::kAugmentedSubsystemUncontrollable:
      return kExitExistence;
    case FailureReason::kInvalidPoles:
      return kExitInput;
    case FailureReason::kPlacementFailed:
    case FailureReason::kNumericalFailure:
      return kExitNumerical;
  }
  return kExitNumerical;
}

void print_design(std::ostream& text, const DesignResult& d) {
  text << "mode: " << to_string(d.mode) << '\n';
  if (d.augmentation) {
    text << "R (" << d.augmentation->rows() << "x" << d.augmentation->cols() << "):\n";
    print_matrix(text, *d.augmentation);
  }
  text << "Z (" << d.gain.rows() << "x" << d.gain.cols() << "):\n";
  print_matrix(text, d.gain);
  text << "requested poles: " << num(d.requested_poles.poles) << '\n'
       << "subsystem eigenvalues: " << num(d.achieved_subsystem_eigs) << '\n'
       << "closed-loop eigenvalues: " << num(d.closed_loop_eigs) << '\n'
       << "residual spectrum: " << num(d.residual_spectrum) << '\n'
       << "Sylvester residual: " << num(d.sylvester_residual) << '\n';
}

Matrix design_target(const SystemFile& file, const DesignFile& design) {
  const std::optional<Matrix>& r = design.r ? design.r : file.r;
  if (!r || r->rows() == 0) return file.target();
  if (r->cols() != file.target().cols()) {
    throw InputError("R has " + std::to_string(r->cols()) + " columns, expected " +
                     std::to_string(file.target().cols()));
  }
  return vstack(file.target(), *r);
}

}  // namespace

Report run_check(const std::string& system_path, const CommonOptions& options) {
  return guarded(
      start("check", options, {{"system", system_path}}),
      [&](json& doc, std::ostream& text) -> std::pair<int, std::string> {
        options.tol.validate();
        const ToleranceConfig& tol = options.tol;
        const SystemFile file = SystemFile::load(system_path);
        const LinearSystem sys = file.system(tol);
        const TargetMap target(file.target(), tol);
        const std::string t = file.target_is_output() ? "C" : "F";
        doc["system"] = describe_system(file, sys);
        print_system(text, file, sys);

        const RankReport ctrb = controllability_rank(sys, tol);
        const bool controllable = ctrb.rank == sys.states();
        const TocVerdict toc = is_target_output_controllable(sys, target, tol);
        const PencilVerdict pencil = check_pencil_condition(sys, target, tol);
        const InvarianceReport invariance = check_invariance_condition(sys, target, tol);
        const SubsystemReport subsystem = check_subsystem_controllability(sys, target, tol);
        const ObservabilityIndices indices = observability_indices(sys.a(), target, tol);

        json failing = nullptr;
        if (pencil.failing_s)
          failing = json::array({pencil.failing_s->real(), pencil.failing_s->imag()});
        doc["checks"] = {
            {"controllable", {{"value", controllable}, {"rank", to_json(ctrb)}}},
            {"target_output_controllable",
             {{"value", toc.is_toc},
              {"rank_target", toc.rank_f},
              {"rank_target_ctrb", toc.rank_fc},
              {"rank", to_json(toc.fc_report)}}},
            {"pencil",
             {{"value", pencil.holds}, {"min_rank", pencil.min_rank}, {"failing_s", failing}}},
            {"invariance",
             {{"value", invariance.holds},
              {"rank_stacked", invariance.rank_stacked},
              {"rank_target", invariance.rank_f},
              {"kernel_residual", invariance.kernel_residual}}},
            {"subsystem_controllable",
             {{"value", subsystem.holds},
              {"equivalent_to_pencil", subsystem.equivalent_to_pencil},
              {"kalman", to_json(subsystem.kalman)}}},
            {"observability_indices", {{"indices", indices.indices}, {"total", indices.total()}}}};

        text << "controllable: " << yes_no(controllable) << " (rank Ctrb = " << ctrb.rank << " of "
             << sys.states() << ")\n";
        text << "target output controllable: " << yes_no(toc.is_toc) << " (rank " << t
             << " Ctrb = " << toc.rank_fc << ", rank " << t << " = " << toc.rank_f
             << "; singular values " << num(toc.fc_report.singular_values) << ")\n";
        text << "pencil rank [s" << t << " - " << t << "A, " << t
             << "B] at eig(A): " << yes_no(pencil.holds) << " (min rank " << pencil.min_rank
             << " of " << target.rows();
        if (pencil.failing_s) text << ", drops at s = " << num(*pencil.failing_s);
        text << ")\n";
        text << "invariance rank[" << t << "A; " << t << "] = rank " << t << ": "
             << yes_no(invariance.holds) << " (rank " << invariance.rank_stacked << ", max|" << t
             << "A(I - " << t << "^+" << t << ")| = " << num(invariance.kernel_residual) << ")\n";
        text << "subsystem (" << t << "A" << t << "^+, " << t
             << "B) controllable: " << yes_no(subsystem.holds) << " (Kalman rank "
             << subsystem.kalman.rank << " of " << target.rows() << ")";
        if (!subsystem.equivalent_to_pencil) text << ", not conclusive without invariance";
        text << "\nobservability indices:";
        for (const Index nu : indices.indices) text << ' ' << nu;
        text << " (total " << indices.total() << ")\n";

        if (!toc.is_toc) return {kExitNotTargetControllable, "not target output controllable"};
        return {kExitOk, "target output controllable"};
      });
}

Report run_design(const DesignArgs& args, const CommonOptions& options) {
  json inputs = {{"system", args.system_path},
                 {"poles", args.poles},
                 {"out", args.out ? json(*args.out) : json(nullptr)}};
  return guarded(
      start("design", options, std::move(inputs)),
      [&](json& doc, std::ostream& text) -> std::pair<int, std::string> {
        options.tol.validate();
        const ToleranceConfig& tol = options.tol;
        const SystemFile file = SystemFile::load(args.system_path);
        const LinearSystem sys = file.system(tol);
        const TargetMap target(file.target(), tol);
        const PoleSet poles{parse_complex_list(args.poles)};
        if (poles.size() == 0) throw InputError("--poles needs at least one value");
        doc["system"] = describe_system(file, sys);
        doc["requested_poles"] = to_json(poles.poles);
        print_system(text, file, sys);

        std::optional<DesignResult> result;
        json algorithm = {{"path", nullptr}, {"steps", json::array()}, {"failure", nullptr}};
        std::pair<int, std::string> failure{kExitOk, ""};
        auto fail = [&](int step, int code, const std::string& reason, const std::string& message) {
          algorithm["failure"] = {{"step", step}, {"reason", reason}, {"message", message}};
          failure = {code, "design failed at step " + std::to_string(step) + ": " + message};
        };
        // Library errors from a direct design call become step failures.
        auto attempt = [&](int step, auto&& design) {
          try {
            result = design();
          } catch (const InputError& e) {
            fail(step, kExitInput, "invalid-poles", e.what());
          } catch (const ExistenceError& e) {
            fail(step, kExitExistence, "existence-condition-failed", e.what());
          } catch (const Error& e) {
            fail(step, kExitNumerical, "numerical-failure", e.what());
          }
        };

        if (file.target_is_output() || (file.r && file.r->rows() > 0)) {
          const bool output = file.target_is_output();
          algorithm["path"] = output ? "static-output" : "supplied-augmentation";
          algorithm["steps"].push_back(1);
          const TocVerdict toc = is_target_output_controllable(sys, target, tol);
          if (!toc.is_toc) {
            fail(1, kExitNotTargetControllable,
                 to_string(FailureReason::kNotTargetOutputControllable), *toc.witness);
          } else if (output) {
            algorithm["steps"].push_back(3);
            attempt(3,
                    [&] { return design_static_output_feedback(sys, poles, tol, options.seed); });
          } else {
            algorithm["steps"].push_back(5);
            attempt(5,
                    [&] { return design_n0_pole(sys, target, *file.r, poles, tol, options.seed); });
          }
        } else {
          algorithm["path"] = "target";
          AlgorithmOptions algo;
          algo.seed = options.seed;
          const DesignOutcome outcome = run_design_algorithm(sys, target, poles, tol, algo);
          algorithm["steps"] = outcome.steps;
          if (outcome.indices) algorithm["observability_indices"] = outcome.indices->indices;
          if (outcome.failure) {
            fail(outcome.failure->step, exit_code_for(outcome.failure->reason),
                 to_string(outcome.failure->reason), outcome.failure->message);
          }
          result = outcome.result;
        }

        text << "path: " << algorithm["path"].get<std::string>() << ", steps";
        for (const auto& step : algorithm["steps"]) text << ' ' << step.get<int>();
        text << '\n';
        doc["algorithm"] = algorithm;
        doc["design"] = result ? to_json(*result) : json(nullptr);
        doc["output"] = nullptr;
        if (failure.first != kExitOk) return failure;

        print_design(text, *result);
        if (args.out) {
          std::ofstream out(*args.out);
          if (!out) throw InputError("cannot write design file " + *args.out);
          DesignFile{*args.out, result->gain, result->augmentation, result->requested_poles.poles}
              .write(out);
          doc["output"] = *args.out;
          text << "design written to " << *args.out << '\n';
        }
        return {kExitOk, std::string("design succeeded (") + to_string(result->mode) + ")"};
      });
}

Report run_verify(const VerifyArgs& args, const CommonOptions& options) {
  json inputs = {{"system", args.system_path},
                 {"design", args.design_path},
                 {"t_final", args.t_final ? json(*args.t_final) : json(nullptr)},
                 {"dt", args.dt}};
  return guarded(
      start("verify", options, std::move(inputs)),
      [&](json& doc, std::ostream& text) -> std::pair<int, std::string> {
        options.tol.validate();
        const ToleranceConfig& tol = options.tol;
        const SystemFile file = SystemFile::load(args.system_path);
        const DesignFile design = DesignFile::load(args.design_path);
        const LinearSystem sys = file.system(tol);
        const Matrix fp = design_target(file, design);
        doc["system"] = describe_system(file, sys);
        print_system(text, file, sys);

        VerifyOptions verify_options;
        verify_options.seed = options.seed;
        verify_options.dt = args.dt;
        verify_options.t_final = args.t_final;
        const VerificationReport r =
            verify_design(sys, fp, design.z, PoleSet{design.poles}, tol, verify_options);

        doc["verification"] = {
            {"passed", r.passed()},
            {"spectrum_subset_ok", r.spectrum_subset_ok},
            {"sylvester_residual", r.sylvester_residual},
            {"sylvester_ok", r.sylvester_ok},
            {"decay_ok", r.decay_ok},
            {"initial_target_norm", r.initial_target_norm},
            {"final_target_norm", r.final_target_norm},
            {"final_state_norm", r.final_state_norm},
            {"decay_threshold", decay_threshold(r.initial_target_norm)},
            {"state_grew", r.state_grew()},
            {"t_final", r.t_final},
            {"divergence_time", r.divergence_time ? json(*r.divergence_time) : json(nullptr)},
            {"subsystem_eigs", to_json(r.subsystem_eigs)},
            {"closed_loop_eigs", to_json(r.closed_loop_eigs)},
            {"residual_spectrum", to_json(r.residual_spectrum)}};

        text << "subsystem eigenvalues: " << num(r.subsystem_eigs) << '\n'
             << "closed-loop eigenvalues: " << num(r.closed_loop_eigs) << '\n'
             << "residual spectrum: " << num(r.residual_spectrum) << '\n'
             << "spectrum check: " << pass_fail(r.spectrum_subset_ok);
        if (!design.poles.empty()) text << " (requested " << num(design.poles) << ")";
        text << "\nSylvester residual: " << num(r.sylvester_residual) << " (limit "
             << num(tol.residual_atol) << "): " << pass_fail(r.sylvester_ok) << '\n'
             << "decay |F'x|: " << num(r.initial_target_norm) << " -> " << num(r.final_target_norm)
             << " at t = " << num(r.t_final) << " (limit "
             << num(decay_threshold(r.initial_target_norm)) << "): " << pass_fail(r.decay_ok)
             << '\n';
        if (r.divergence_time)
          text << "state diverged at t = " << num(*r.divergence_time) << '\n';
        else if (r.state_grew()) {
          text << "note: |x| = " << num(r.final_state_norm)
               << " at the final time; the state grows while F'x decays\n";
        }
        if (!r.passed()) return {kExitNumerical, "verification failed"};
        return {kExitOk, "verification passed"};
      });
}

Report run_simulate(const SimulateArgs& args, const CommonOptions& options) {
  json inputs = {{"system", args.system_path},
                 {"design", args.design_path},
                 {"x0", args.x0 ? json(*args.x0) : json(nullptr)},
                 {"t_final", args.t_final},
                 {"dt", args.dt},
                 {"out", args.csv ? json(*args.csv) : json(nullptr)}};
  return guarded(start("simulate", options, std::move(inputs)),
                 [&](json& doc, std::ostream& text) -> std::pair<int, std::string> {
                   options.tol.validate();
                   const SystemFile file = SystemFile::load(args.system_path);
                   const DesignFile design = DesignFile::load(args.design_path);
                   const LinearSystem sys = file.system(options.tol);
                   const Matrix fp = design_target(file, design);
                   doc["system"] = describe_system(file, sys);
                   print_system(text, file, sys);

                   const Vector x0 =
                       args.x0 ? parse_vector(*args.x0) : Vector(Vector::Ones(sys.states()));
                   const double initial = (fp.cols() == x0.size()) ? (fp * x0).norm() : 0.0;
                   json sim = {{"t_final", args.t_final},
                               {"dt", args.dt},
                               {"samples", 0},
                               {"x0", to_json(x0)},
                               {"initial_target_norm", initial},
                               {"final_target_norm", nullptr},
                               {"final_state_norm", nullptr},
                               {"decay_threshold", decay_threshold(initial)},
                               {"decay_ok", false},
                               {"divergence_time", nullptr},
                               {"csv", nullptr}};
                   try {
                     const Trajectory trajectory =
                         simulate_closed_loop(sys, fp, design.z, x0, args.t_final, args.dt);
                     const double final_target = trajectory.targets.back().norm();
                     sim["samples"] = trajectory.size();
                     sim["final_target_norm"] = final_target;
                     sim["final_state_norm"] = trajectory.states.back().norm();
                     sim["decay_ok"] = final_target < decay_threshold(initial);
                     if (args.csv) {
                       std::ofstream out(*args.csv);
                       if (!out) throw InputError("cannot write trajectory file " + *args.csv);
                       write_trajectory_csv(out, trajectory);
                       sim["csv"] = *args.csv;
                     }
                     doc["simulation"] = sim;
                     text << "|F'x(0)| = " << num(initial) << ", |F'x(" << num(args.t_final)
                          << ")| = " << num(final_target) << ", |x(" << num(args.t_final)
                          << ")| = " << num(trajectory.states.back().norm()) << '\n'
                          << "decay below " << num(decay_threshold(initial)) << ": "
                          << yes_no(sim["decay_ok"].get<bool>()) << '\n';
                     if (args.csv)
                       text << trajectory.size() << " samples written to " << *args.csv << '\n';
                   } catch (const DivergenceError& e) {
                     sim["divergence_time"] = e.time();
                     doc["simulation"] = sim;
                     return {kExitNumerical, std::string("simulation diverged: ") + e.what()};
                   }
                   return {kExitOk, "simulation finished"};
                 });
}

}  // namespace targetctl::cli
