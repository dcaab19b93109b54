#pragma once

#include <Eigen/Core>
#include <complex>
#include <optional>
#include <string_view>
#include <vector>

namespace targetctl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;
using ComplexList = std::vector<Complex>;
using Index = Eigen::Index;

/// Numerical thresholds shared by every rank, spectrum and residual test.
struct ToleranceConfig {
  /// Relative singular-value cutoff, scaled by max(rows, cols) * sigma_max.
  double rank_rtol = 1e-9;
  /// Absolute distance under which two eigenvalues are considered equal.
  double eig_atol = 1e-6;
  /// Absolute bound on the max-abs entry of residual matrices.
  double residual_atol = 1e-8;

  /// Throws InputError unless every field lies in (0, 1e-2].
  void validate() const;
};

struct RankReport {
  Index rank = 0;
  /// Nonincreasing.
  Vector singular_values;
  double threshold_used = 0.0;
};

/// Throws InputError naming `what` if `m` has a NaN or infinite entry.
void require_finite(const Eigen::Ref<const Matrix>& m, std::string_view what);

/// Rank from singular values only. The threshold is
/// rank_rtol * max(rows, cols) * max(sigma_max, scale), and 0 for an all-zero
/// matrix with scale 0.
///
/// Pass `scale` when `m` is a computed product such as F * Ctrb: with
/// scale = |F|_2 |Ctrb|_2 a product that cancels down to rounding noise ranks
/// as zero instead of full.
RankReport rank(const Eigen::Ref<const Matrix>& m, const ToleranceConfig& tol = {},
                double scale = 0.0);

/// Complex rank computed in real arithmetic through the embedding
/// [[Re, -Im], [Im, Re]]. The embedding's singular values are those of `m`
/// with doubled multiplicity; the report lists each one once and applies the
/// threshold rule with the dimensions of `m`.
RankReport rank(const Eigen::Ref<const ComplexMatrix>& m, const ToleranceConfig& tol = {},
                double scale = 0.0);

/// Largest singular value; 0 for an empty matrix.
double spectral_norm(const Eigen::Ref<const Matrix>& m);
double spectral_norm(const Eigen::Ref<const ComplexMatrix>& m);

/// Moore-Penrose pseudoinverse through the SVD, dropping singular values at
/// or below the rank threshold.
Matrix pinv(const Eigen::Ref<const Matrix>& m, const ToleranceConfig& tol = {});

/// Orthonormal basis of ker(m), one column per null direction
/// (cols - rank columns, possibly zero).
Matrix nullspace_basis(const Eigen::Ref<const Matrix>& m, const ToleranceConfig& tol = {});

/// [B, AB, ..., A^(n-1) B].
Matrix controllability_matrix(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b);

/// [B, AB, ..., A^k B] for an arbitrary number of blocks k + 1 >= 1.
Matrix krylov_blocks(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                     Index blocks);

/// Orthonormal basis of span{B, AB, A^2 B, ...} by block Arnoldi with two
/// passes of Gram-Schmidt. A direction is kept when its component outside
/// the current basis exceeds rank_rtol * n * |B|_2 (first block) or
/// rank_rtol * n * |A|_2 (later blocks). Unlike the literal [B, AB, ...]
/// this stays well conditioned when the columns A^k B align.
Matrix krylov_basis(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                    const ToleranceConfig& tol = {});
ComplexMatrix krylov_basis(const Eigen::Ref<const ComplexMatrix>& a,
                           const Eigen::Ref<const ComplexMatrix>& b,
                           const ToleranceConfig& tol = {});

/// All eigenvalues with multiplicity. Complex values come in exact
/// conjugate pairs.
ComplexList eigenvalues(const Eigen::Ref<const Matrix>& m);

double max_abs(const Eigen::Ref<const Matrix>& m);

/// True iff `a` and `b` have equal size and admit a one-to-one pairing with
/// every paired distance below `atol`.
bool spectra_match(const ComplexList& a, const ComplexList& b, double atol);

/// True iff `subset` pairs one-to-one into distinct members of `superset`
/// within `atol` (multiset inclusion).
bool spectrum_contains(const ComplexList& superset, const ComplexList& subset, double atol);

/// Removes one matched copy of each element of `subset` from `superset` and
/// returns what is left; nullopt when `subset` is not contained.
std::optional<ComplexList> spectrum_difference(const ComplexList& superset,
                                               const ComplexList& subset, double atol);

/// Vertically stacks `top` over `bottom` (either may have zero rows).
Matrix vstack(const Eigen::Ref<const Matrix>& top, const Eigen::Ref<const Matrix>& bottom);

}  // namespace targetctl
