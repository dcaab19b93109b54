#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "targetctl/analysis.hpp"
#include "targetctl/matops.hpp"
#include "targetctl/synthesis.hpp"

namespace targetctl {

/// Samples of x(t) and z(t) = F' x(t) on a strictly increasing time grid
/// starting at t = 0.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> targets;

  std::size_t size() const noexcept { return times.size(); }
};

/// State norm above which integration stops with DivergenceError.
inline constexpr double kDivergenceNorm = 1e12;

/// Integrates x' = (A - B Z F') x from x0 with classical fixed-step RK4,
/// recording every step. The last step is shortened so the grid ends exactly
/// at t_final.
Trajectory simulate_closed_loop(const LinearSystem& sys, const Eigen::Ref<const Matrix>& target,
                                const Eigen::Ref<const Matrix>& gain,
                                const Eigen::Ref<const Vector>& x0, double t_final, double dt);

/// Writes `t,x1..xn,z1..zq` followed by one row per sample with 17
/// significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

struct VerificationReport {
  /// eig(F'AF'^+ - F'BZ) is inside eig(A - BZF') and, when poles were
  /// requested, equals them.
  bool spectrum_subset_ok = false;
  double sylvester_residual = 0.0;
  bool sylvester_ok = false;
  bool decay_ok = false;
  double initial_target_norm = 0.0;
  double final_target_norm = 0.0;
  double final_state_norm = 0.0;
  double t_final = 0.0;
  /// Set when the state norm exceeded kDivergenceNorm; decay_ok is then false.
  std::optional<double> divergence_time;
  ComplexList subsystem_eigs;
  ComplexList closed_loop_eigs;
  ComplexList residual_spectrum;

  bool passed() const noexcept { return spectrum_subset_ok && sylvester_ok && decay_ok; }
  /// x(t) grew while F'x(t) decayed: allowed, reported.
  bool state_grew() const noexcept { return final_state_norm > 1.0; }
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  double dt = 1e-3;
  /// Defaults to 20 / sigma with sigma the slowest decay rate of the
  /// subsystem spectrum, or 10 s when that spectrum is not stable.
  std::optional<double> t_final;
};

/// |F'x(t_final)| must fall below max(1e-9, 1e-3 |F'x(0)|).
double decay_threshold(double initial_target_norm);

/// Recomputes every check from (A, B, F', Z); nothing from a DesignResult is
/// trusted. x0 is a seeded standard-normal draw normalised to unit length.
VerificationReport verify_design(const LinearSystem& sys, const Eigen::Ref<const Matrix>& target,
                                 const Eigen::Ref<const Matrix>& gain,
                                 const PoleSet& requested_poles, const ToleranceConfig& tol = {},
                                 const VerifyOptions& options = {});

VerificationReport verify_design(const LinearSystem& sys, const DesignResult& result,
                                 const ToleranceConfig& tol = {},
                                 const VerifyOptions& options = {});

}  // namespace targetctl
