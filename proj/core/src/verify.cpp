#include "targetctl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "targetctl/errors.hpp"

namespace targetctl {

Trajectory simulate_closed_loop(const LinearSystem& sys, const Eigen::Ref<const Matrix>& target,
                                const Eigen::Ref<const Matrix>& gain,
                                const Eigen::Ref<const Vector>& x0, double t_final, double dt) {
  const Index n = sys.states();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("dt must be positive and finite");
  if (!(t_final >= dt) || !std::isfinite(t_final)) throw InputError("t_final must be >= dt");
  if (target.cols() != n) throw InputError("F' must have one column per state");
  if (gain.rows() != sys.inputs() || gain.cols() != target.rows()) {
    throw InputError("Z must be " + std::to_string(sys.inputs()) + "x" +
                     std::to_string(target.rows()));
  }
  if (x0.size() != n) throw InputError("x0 must have " + std::to_string(n) + " entries");
  require_finite(target, "F'");
  require_finite(gain, "Z");
  require_finite(x0, "x0");

  const Matrix closed_loop = sys.a() - sys.b() * gain * target;
  const auto steps = static_cast<long long>(std::ceil(t_final / dt - 1e-9));

  Trajectory out;
  out.times.reserve(static_cast<std::size_t>(steps) + 1);
  out.states.reserve(static_cast<std::size_t>(steps) + 1);
  out.targets.reserve(static_cast<std::size_t>(steps) + 1);

  Vector x = x0;
  double t = 0.0;
  out.times.push_back(t);
  out.states.push_back(x);
  out.targets.push_back(target * x);
  for (long long k = 1; k <= steps; ++k) {
    const double t_next = k == steps ? t_final : static_cast<double>(k) * dt;
    const double h = t_next - t;
    const Vector k1 = closed_loop * x;
    const Vector k2 = closed_loop * (x + 0.5 * h * k1);
    const Vector k3 = closed_loop * (x + 0.5 * h * k2);
    const Vector k4 = closed_loop * (x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = t_next;
    if (!(x.norm() <= kDivergenceNorm)) {
      std::ostringstream msg;
      msg << "closed-loop state diverged (|x| > " << kDivergenceNorm << ") at t = " << t;
      throw DivergenceError(msg.str(), t);
    }
    out.times.push_back(t);
    out.states.push_back(x);
    out.targets.push_back(target * x);
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  const Index n = trajectory.states.empty() ? 0 : trajectory.states.front().size();
  const Index q = trajectory.targets.empty() ? 0 : trajectory.targets.front().size();
  out << "t";
  for (Index i = 1; i <= n; ++i) out << ",x" << i;
  for (Index i = 1; i <= q; ++i) out << ",z" << i;
  out << '\n';

  const auto old_precision = out.precision(17);
  for (std::size_t s = 0; s < trajectory.size(); ++s) {
    out << trajectory.times[s];
    for (Index i = 0; i < n; ++i) out << ',' << trajectory.states[s](i);
    for (Index i = 0; i < q; ++i) out << ',' << trajectory.targets[s](i);
    out << '\n';
  }
  out.precision(old_precision);
}

double decay_threshold(double initial_target_norm) {
  return std::max(1e-9, 1e-3 * initial_target_norm);
}

VerificationReport verify_design(const LinearSystem& sys, const Eigen::Ref<const Matrix>& target,
                                 const Eigen::Ref<const Matrix>& gain,
                                 const PoleSet& requested_poles, const ToleranceConfig& tol,
                                 const VerifyOptions& options) {
  const Index n = sys.states();
  if (target.rows() < 1 || target.cols() != n) {
    throw InputError("F' must be non-empty with " + std::to_string(n) + " columns");
  }
  if (gain.rows() != sys.inputs() || gain.cols() != target.rows()) {
    throw InputError("Z must be " + std::to_string(sys.inputs()) + "x" +
                     std::to_string(target.rows()) + ", got " + std::to_string(gain.rows()) + "x" +
                     std::to_string(gain.cols()));
  }
  const Matrix& a = sys.a();
  const Matrix& b = sys.b();

  VerificationReport report;
  const Matrix reduced = target * a * pinv(target, tol) - target * b * gain;
  const Matrix closed_loop = a - b * gain * target;
  report.subsystem_eigs = eigenvalues(reduced);
  report.closed_loop_eigs = eigenvalues(closed_loop);
  report.spectrum_subset_ok =
      spectrum_contains(report.closed_loop_eigs, report.subsystem_eigs, tol.eig_atol) &&
      (requested_poles.size() == 0 ||
       spectra_match(report.subsystem_eigs, requested_poles.poles, tol.eig_atol));

  report.sylvester_residual = max_abs(reduced * target - target * closed_loop);
  report.sylvester_ok = report.sylvester_residual < tol.residual_atol;

  const Matrix kernel = nullspace_basis(target, tol);
  if (kernel.cols() > 0) {
    const Matrix kernel_t = kernel.transpose();
    report.residual_spectrum = eigenvalues(kernel_t * a * pinv(kernel_t, tol));
  }

  if (options.t_final) {
    report.t_final = *options.t_final;
  } else {
    double slowest = std::numeric_limits<double>::infinity();
    for (const Complex z : report.subsystem_eigs) slowest = std::min(slowest, -z.real());
    report.t_final = slowest > 0.0 && std::isfinite(slowest) ? 20.0 / slowest : 10.0;
  }

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  Vector x0(n);
  for (Index i = 0; i < n; ++i) x0(i) = normal(rng);
  x0.normalize();

  report.initial_target_norm = (target * x0).norm();
  try {
    const Trajectory trajectory =
        simulate_closed_loop(sys, target, gain, x0, report.t_final, options.dt);
    report.final_target_norm = trajectory.targets.back().norm();
    report.final_state_norm = trajectory.states.back().norm();
    report.decay_ok = report.final_target_norm < decay_threshold(report.initial_target_norm);
  } catch (const DivergenceError& e) {
    report.divergence_time = e.time();
    report.final_target_norm = std::numeric_limits<double>::infinity();
    report.final_state_norm = std::numeric_limits<double>::infinity();
    report.decay_ok = false;
  }
  return report;
}

VerificationReport verify_design(const LinearSystem& sys, const DesignResult& result,
                                 const ToleranceConfig& tol, const VerifyOptions& options) {
  return verify_design(sys, result.target, result.gain, result.requested_poles, tol, options);
}

}  // namespace targetctl
