#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "targetctl/analysis.hpp"
#include "targetctl/matops.hpp"

namespace targetctl {

/// Requested closed-loop eigenvalues; complex entries must come in
/// conjugate pairs.
struct PoleSet {
  ComplexList poles;

  std::size_t size() const noexcept { return poles.size(); }
  bool conjugate_closed(double atol) const;
  /// Coefficients c_0..c_{q-1} of prod(x - p) = x^q + c_{q-1} x^{q-1} + ... + c_0.
  Vector characteristic_coefficients() const;
};

enum class DesignMode { kRPole, kN0Pole, kStaticOutput };

const char* to_string(DesignMode mode);

/// A synthesized feedback u = -Z F' x, where F' = target (F, [F; R] or C).
struct DesignResult {
  Matrix gain;
  std::optional<Matrix> augmentation;
  Matrix target;
  PoleSet requested_poles;
  /// eig(F' A F'^+ - F' B Z)
  ComplexList achieved_subsystem_eigs;
  /// eig(A - B Z F')
  ComplexList closed_loop_eigs;
  /// eig(N^T A (N^T)^+) with N an orthonormal basis of ker F'; the part of
  /// the closed-loop spectrum the feedback does not move.
  ComplexList residual_spectrum;
  /// max |(F'AF'^+ - F'BZ) F' - F'(A - BZF')|
  double sylvester_residual = 0.0;
  DesignMode mode = DesignMode::kRPole;
};

/// Returns a real m x q gain K with eig(M - G K) equal to `poles`.
///
/// Single-input pairs use Ackermann's formula. Multi-input pairs are reduced
/// to a single input through random combinations u = K0 x + g v (up to 8
/// draws from `seed`); if none yields a controllable single-input pair a
/// Sylvester-equation placement M X - X L = G G0, K = G0 X^-1 is tried, which
/// rejects repeated poles. Every candidate is checked against the spectrum
/// contract before it is returned.
///
/// Throws ExistenceError for an uncontrollable pair, InputError for a pole
/// set of the wrong size or not closed under conjugation, and NumericalError
/// when no candidate meets the contract.
Matrix place_poles(const Eigen::Ref<const Matrix>& m, const Eigen::Ref<const Matrix>& g,
                   const PoleSet& poles, const ToleranceConfig& tol = {}, std::uint64_t seed = 0);

/// Places r = rows(F) poles of the reduced subsystem F x' = FAF^+ (Fx) + FB u.
/// Throws NeedsAugmentationError when rank[FA; F] > rank F and
/// ExistenceError when (FAF^+, FB) is uncontrollable.
DesignResult design_r_pole(const LinearSystem& sys, const TargetMap& target, const PoleSet& poles,
                           const ToleranceConfig& tol = {}, std::uint64_t seed = 0);

/// Extra target rows F_i A, ..., F_i A^(nu_i - 1) for each row F_i, where nu_i
/// are the observability indices of (A, F). Empty when every nu_i = 1.
Matrix build_augmentation(const LinearSystem& sys, const TargetMap& target,
                          const ToleranceConfig& tol = {});

/// Places n0 = rows(F) + rows(R) poles using the augmented map [F; R].
DesignResult design_n0_pole(const LinearSystem& sys, const TargetMap& target,
                            const Eigen::Ref<const Matrix>& augmentation, const PoleSet& poles,
                            const ToleranceConfig& tol = {}, std::uint64_t seed = 0);

/// u = -Z y with F := C. Requires C; throws ExistenceError when either
/// rank[CA; C] > rank C or (CAC^+, CB) is uncontrollable.
DesignResult design_static_output_feedback(const LinearSystem& sys, const PoleSet& poles,
                                           const ToleranceConfig& tol = {}, std::uint64_t seed = 0);

enum class FailureReason {
  kNotTargetOutputControllable,
  kSubsystemUncontrollable,
  kAugmentedInvarianceFailed,
  kAugmentedSubsystemUncontrollable,
  kInvalidPoles,
  kPlacementFailed,
  kNumericalFailure,
};

const char* to_string(FailureReason reason);

struct DesignFailure {
  int step = 0;
  FailureReason reason = FailureReason::kNotTargetOutputControllable;
  std::string message;
};

/// Supplies `count` extra poles when the augmented design needs more than
/// the caller asked for.
using PoleExtender = std::function<ComplexList(const ComplexList& given, std::size_t count)>;

/// Real poles at leftmost - 1, leftmost - 2, ... where leftmost is the
/// smallest real part among `given` (0 when `given` is empty).
ComplexList extend_poles_leftward(const ComplexList& given, std::size_t count);

struct AlgorithmOptions {
  PoleExtender extend_poles = extend_poles_leftward;
  std::uint64_t seed = 0;
};

/// Exactly one of `result` and `failure` is set.
struct DesignOutcome {
  std::optional<DesignResult> result;
  std::optional<DesignFailure> failure;
  /// Algorithm steps executed, in order.
  std::vector<int> steps;
  std::optional<TocVerdict> toc;
  std::optional<ObservabilityIndices> indices;

  bool ok() const noexcept { return result.has_value(); }
};

/// The five-step design procedure:
///   1. stop unless (A, B, F) is target output controllable;
///   2. test rank[FA; F] = rank F, go to 4 if it fails;
///   3. if (FAF^+, FB) is controllable place r poles, otherwise stop;
///   4. build R from the observability indices of (A, F);
///   5. if ([F;R] A [F;R]^+, [F;R] B) is controllable place n0 poles,
///      otherwise stop.
/// `poles` must hold exactly r poles for step 3. For step 5 it may hold up
/// to n0; missing poles come from `options.extend_poles`. Every exit is
/// reported through `failure`; only malformed inputs (InputError from the
/// analysis routines) propagate as exceptions.
DesignOutcome run_design_algorithm(const LinearSystem& sys, const TargetMap& target,
                                   const PoleSet& poles, const ToleranceConfig& tol = {},
                                   const AlgorithmOptions& options = {});

}  // namespace targetctl
