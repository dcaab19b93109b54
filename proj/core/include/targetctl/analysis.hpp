#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "targetctl/matops.hpp"

namespace targetctl {

/// The plant x' = Ax + Bu, y = Cx. Construction validates dimensions,
/// finiteness and (when present) full row rank of C.
class LinearSystem {
 public:
  LinearSystem(Matrix a, Matrix b, std::optional<Matrix> c = std::nullopt,
               const ToleranceConfig& tol = {});

  const Matrix& a() const noexcept { return a_; }
  const Matrix& b() const noexcept { return b_; }
  const std::optional<Matrix>& c() const noexcept { return c_; }

  Index states() const noexcept { return a_.rows(); }
  Index inputs() const noexcept { return b_.cols(); }

 private:
  Matrix a_;
  Matrix b_;
  std::optional<Matrix> c_;
};

/// Full-row-rank F whose rows are the functionals z = Fx to be steered.
class TargetMap {
 public:
  explicit TargetMap(Matrix f, const ToleranceConfig& tol = {});

  const Matrix& f() const noexcept { return f_; }
  Index rows() const noexcept { return f_.rows(); }
  Index cols() const noexcept { return f_.cols(); }

 private:
  Matrix f_;
};

struct TocVerdict {
  bool is_toc = false;
  Index rank_f = 0;
  Index rank_fc = 0;
  /// Rank report of F Q, Q an orthonormal basis of the range of
  /// [B, AB, ..., A^(n-1)B]; rank F Q = rank F [B, AB, ...].
  RankReport fc_report;
  std::optional<std::string> witness;
};

struct PencilVerdict {
  bool holds = true;
  std::optional<Complex> failing_s;
  /// Smallest rank of [sF - FA, FB] over the eigenvalues of A that were
  /// evaluated.
  Index min_rank = 0;
};

/// rank[FA; F] = rank F, decided by SVD rank and by the kernel residual
/// FA(I - F^+ F); both routes are stored.
struct InvarianceReport {
  bool holds = false;
  Index rank_stacked = 0;
  Index rank_f = 0;
  double kernel_residual = 0.0;
};

/// Kalman test on the reduced pair (F A F^+, F B).
struct SubsystemReport {
  bool holds = false;
  /// True when the invariance condition also holds, so the Kalman test is
  /// equivalent to the rank condition on [sF - FA, FB] for every s.
  bool equivalent_to_pencil = false;
  RankReport kalman;
  Matrix reduced_a;
  Matrix reduced_b;
};

struct ObservabilityIndices {
  /// indices[i] is the number of rows F_i A^k kept for chain i.
  std::vector<Index> indices;
  /// (chain, power) of every kept row, in selection order.
  std::vector<std::pair<Index, Index>> selected_rows;

  Index total() const;
};

RankReport controllability_rank(const LinearSystem& sys, const ToleranceConfig& tol = {});

bool is_controllable(const LinearSystem& sys, const ToleranceConfig& tol = {});

/// rank F = rank F[B, AB, ..., A^(n-1)B].
TocVerdict is_target_output_controllable(const LinearSystem& sys, const TargetMap& target,
                                         const ToleranceConfig& tol = {});

/// Rank of [FB, F(A - sI)B, ..., F(A - sI)^(n-1) B] at one shift s, computed
/// as rank F Q(s) with Q(s) an orthonormal basis built by iterating A - sI.
RankReport shifted_controllability_rank(const LinearSystem& sys, const TargetMap& target, Complex s,
                                        const ToleranceConfig& tol = {});

/// Necessary condition for target output controllability:
/// rank[sF - FA, FB] = r for all complex s. Since sF - FA = F(sI - A) has
/// rank r away from the spectrum of A, only s in eig(A) are evaluated.
PencilVerdict check_pencil_condition(const LinearSystem& sys, const TargetMap& target,
                                     const ToleranceConfig& tol = {});

/// Throws ConsistencyError if the two routes disagree.
InvarianceReport check_invariance_condition(const LinearSystem& sys, const TargetMap& target,
                                            const ToleranceConfig& tol = {});

SubsystemReport check_subsystem_controllability(const LinearSystem& sys, const TargetMap& target,
                                                const ToleranceConfig& tol = {});

/// Power-major row selection over F, FA, FA^2, ...: a row F_i A^k is kept iff
/// it is independent of every row kept before it. A chain stops at its first
/// dependent row; the scan stops after a sweep that keeps nothing.
ObservabilityIndices observability_indices(const Eigen::Ref<const Matrix>& a,
                                           const TargetMap& target,
                                           const ToleranceConfig& tol = {});

}  // namespace targetctl
