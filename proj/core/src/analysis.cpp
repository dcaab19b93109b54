#include "targetctl/analysis.hpp"

#include <numeric>
#include <sstream>

#include "targetctl/errors.hpp"

namespace targetctl {

namespace {

void require_compatible(const LinearSystem& sys, const TargetMap& target) {
  if (target.cols() != sys.states()) {
    std::ostringstream msg;
    msg << "F has " << target.cols() << " columns but the system has " << sys.states() << " states";
    throw InputError(msg.str());
  }
}

}  // namespace

LinearSystem::LinearSystem(Matrix a, Matrix b, std::optional<Matrix> c, const ToleranceConfig& tol)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {
  if (a_.rows() < 1 || a_.rows() != a_.cols()) {
    throw InputError("A must be a non-empty square matrix, got " + std::to_string(a_.rows()) + "x" +
                     std::to_string(a_.cols()));
  }
  if (b_.rows() != a_.rows() || b_.cols() < 1) {
    throw InputError("B must have " + std::to_string(a_.rows()) +
                     " rows and at least one column, got " + std::to_string(b_.rows()) + "x" +
                     std::to_string(b_.cols()));
  }
  require_finite(a_, "A");
  require_finite(b_, "B");
  if (c_) {
    if (c_->rows() < 1 || c_->cols() != a_.cols()) {
      throw InputError("C must have " + std::to_string(a_.cols()) + " columns, got " +
                       std::to_string(c_->rows()) + "x" + std::to_string(c_->cols()));
    }
    require_finite(*c_, "C");
    if (rank(*c_, tol).rank != c_->rows()) throw InputError("C is not full row rank");
  }
}

TargetMap::TargetMap(Matrix f, const ToleranceConfig& tol) : f_(std::move(f)) {
  if (f_.rows() < 1 || f_.cols() < 1) throw InputError("F must be non-empty");
  require_finite(f_, "F");
  const RankReport report = rank(f_, tol);
  if (report.rank != f_.rows()) {
    throw InputError("F is not full row rank (rank " + std::to_string(report.rank) + " < " +
                     std::to_string(f_.rows()) + " rows)");
  }
}

Index ObservabilityIndices::total() const {
  return std::accumulate(indices.begin(), indices.end(), Index{0});
}

RankReport controllability_rank(const LinearSystem& sys, const ToleranceConfig& tol) {
  return rank(controllability_matrix(sys.a(), sys.b()), tol);
}

bool is_controllable(const LinearSystem& sys, const ToleranceConfig& tol) {
  return controllability_rank(sys, tol).rank == sys.states();
}

TocVerdict is_target_output_controllable(const LinearSystem& sys, const TargetMap& target,
                                         const ToleranceConfig& tol) {
  require_compatible(sys, target);
  TocVerdict verdict;
  verdict.rank_f = target.rows();
  const Matrix basis = krylov_basis(sys.a(), sys.b(), tol);
  verdict.fc_report = rank(target.f() * basis, tol, spectral_norm(target.f()));
  verdict.rank_fc = verdict.fc_report.rank;
  verdict.is_toc = verdict.rank_fc == verdict.rank_f;
  if (!verdict.is_toc) {
    verdict.witness = "rank(F*Ctrb) = " + std::to_string(verdict.rank_fc) +
                      " < rank(F) = " + std::to_string(verdict.rank_f);
  }
  return verdict;
}

RankReport shifted_controllability_rank(const LinearSystem& sys, const TargetMap& target, Complex s,
                                        const ToleranceConfig& tol) {
  require_compatible(sys, target);
  const Index n = sys.states();
  const double f_norm = spectral_norm(target.f());
  if (s.imag() == 0.0) {
    const Matrix shifted = sys.a() - s.real() * Matrix::Identity(n, n);
    return rank(target.f() * krylov_basis(shifted, sys.b(), tol), tol, f_norm);
  }
  const ComplexMatrix shifted = sys.a().cast<Complex>() - s * ComplexMatrix::Identity(n, n);
  const ComplexMatrix basis = krylov_basis(shifted, ComplexMatrix(sys.b().cast<Complex>()), tol);
  return rank(ComplexMatrix(target.f().cast<Complex>() * basis), tol, f_norm);
}

PencilVerdict check_pencil_condition(const LinearSystem& sys, const TargetMap& target,
                                     const ToleranceConfig& tol) {
  require_compatible(sys, target);
  const Index r = target.rows();
  const Matrix fa = target.f() * sys.a();
  const Matrix fb = target.f() * sys.b();

  PencilVerdict verdict;
  verdict.min_rank = r;
  for (const Complex s : eigenvalues(sys.a())) {
    // rank at conj(s) equals rank at s.
    if (s.imag() < 0.0) continue;
    ComplexMatrix pencil(r, fa.cols() + fb.cols());
    pencil.leftCols(fa.cols()) = s * target.f().cast<Complex>() - fa.cast<Complex>();
    pencil.rightCols(fb.cols()) = fb.cast<Complex>();
    const Index pencil_rank = rank(pencil, tol).rank;
    if (pencil_rank < verdict.min_rank) verdict.min_rank = pencil_rank;
    if (pencil_rank < r && verdict.holds) {
      verdict.holds = false;
      verdict.failing_s = s;
    }
  }
  return verdict;
}

InvarianceReport check_invariance_condition(const LinearSystem& sys, const TargetMap& target,
                                            const ToleranceConfig& tol) {
  require_compatible(sys, target);
  const Matrix& f = target.f();
  const Matrix fa = f * sys.a();
  const Index n = sys.states();

  InvarianceReport report;
  report.rank_f = target.rows();
  report.rank_stacked = rank(vstack(fa, f), tol).rank;
  report.kernel_residual = max_abs(fa * (Matrix::Identity(n, n) - pinv(f, tol) * f));

  const bool by_rank = report.rank_stacked == report.rank_f;
  const bool by_residual = report.kernel_residual < tol.residual_atol;
  if (by_rank != by_residual) {
    std::ostringstream msg;
    msg << "invariance test disagrees: rank[FA; F] = " << report.rank_stacked
        << " vs rank F = " << report.rank_f
        << ", but max|FA(I - F^+ F)| = " << report.kernel_residual << " (residual_atol "
        << tol.residual_atol << ")";
    throw ConsistencyError(msg.str());
  }
  report.holds = by_rank;
  return report;
}

SubsystemReport check_subsystem_controllability(const LinearSystem& sys, const TargetMap& target,
                                                const ToleranceConfig& tol) {
  require_compatible(sys, target);
  SubsystemReport report;
  report.reduced_a = target.f() * sys.a() * pinv(target.f(), tol);
  report.reduced_b = target.f() * sys.b();
  // FB and its images are products; scale by |F| |[B, AB, ..]| as for F * Ctrb.
  const double scale =
      spectral_norm(target.f()) * spectral_norm(krylov_blocks(sys.a(), sys.b(), target.rows()));
  report.kalman = rank(controllability_matrix(report.reduced_a, report.reduced_b), tol, scale);
  report.holds = report.kalman.rank == target.rows();
  report.equivalent_to_pencil = check_invariance_condition(sys, target, tol).holds;
  return report;
}

ObservabilityIndices observability_indices(const Eigen::Ref<const Matrix>& a,
                                           const TargetMap& target, const ToleranceConfig& tol) {
  if (a.rows() != a.cols() || a.cols() != target.cols()) {
    throw InputError("A and F dimensions are incompatible");
  }
  const Index n = a.rows();
  const Index r = target.rows();

  ObservabilityIndices out;
  out.indices.assign(static_cast<std::size_t>(r), 0);
  std::vector<bool> alive(static_cast<std::size_t>(r), true);
  Matrix current = target.f();
  // Rows of `kept` are unit-norm.
  Matrix kept(0, n);
  const double a_norm = spectral_norm(a);
  double power_norm = 1.0;

  for (Index power = 0; power < n; ++power) {
    bool added = false;
    for (Index i = 0; i < r; ++i) {
      if (!alive[static_cast<std::size_t>(i)]) continue;
      const double norm = current.row(i).norm();
      // F_i A^k that cancels to rounding noise counts as zero.
      const double floor =
          tol.rank_rtol * static_cast<double>(n) * target.f().row(i).norm() * power_norm;
      if (norm <= floor) {
        alive[static_cast<std::size_t>(i)] = false;
        continue;
      }
      Matrix candidate = vstack(kept, current.row(i) / norm);
      if (rank(candidate, tol).rank == kept.rows() + 1) {
        kept = std::move(candidate);
        ++out.indices[static_cast<std::size_t>(i)];
        out.selected_rows.emplace_back(i, power);
        added = true;
      } else {
        alive[static_cast<std::size_t>(i)] = false;
      }
    }
    if (!added) break;
    current = current * a;
    power_norm *= a_norm;
  }
  return out;
}

}  // namespace targetctl
