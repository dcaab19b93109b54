#include "targetctl/matops.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "targetctl/errors.hpp"

namespace targetctl {

namespace {

double rank_threshold(const ToleranceConfig& tol, Index rows, Index cols, double sigma_max) {
  if (sigma_max <= 0.0) return 0.0;
  return tol.rank_rtol * static_cast<double>(std::max(rows, cols)) * sigma_max;
}

Index count_above(const Vector& values, double threshold) {
  Index count = 0;
  for (Index i = 0; i < values.size(); ++i) {
    if (values(i) > threshold) ++count;
  }
  return count;
}

// Kuhn's augmenting-path matching on the bipartite graph whose edges join
// elements closer than atol. Returns match_of_right[j] = i or -1.
std::vector<int> match_within(const ComplexList& left, const ComplexList& right, double atol) {
  const auto n_left = left.size();
  const auto n_right = right.size();
  std::vector<std::vector<int>> adjacent(n_left);
  for (std::size_t i = 0; i < n_left; ++i) {
    for (std::size_t j = 0; j < n_right; ++j) {
      if (std::abs(left[i] - right[j]) < atol) adjacent[i].push_back(static_cast<int>(j));
    }
  }
  std::vector<int> match_of_right(n_right, -1);
  std::vector<char> visited;
  auto augment = [&](auto&& self, int i) -> bool {
    for (int j : adjacent[static_cast<std::size_t>(i)]) {
      if (visited[static_cast<std::size_t>(j)]) continue;
      visited[static_cast<std::size_t>(j)] = 1;
      int& owner = match_of_right[static_cast<std::size_t>(j)];
      if (owner < 0 || self(self, owner)) {
        owner = i;
        return true;
      }
    }
    return false;
  };
  for (std::size_t i = 0; i < n_left; ++i) {
    visited.assign(n_right, 0);
    augment(augment, static_cast<int>(i));
  }
  return match_of_right;
}

std::size_t matched_count(const std::vector<int>& match_of_right) {
  return static_cast<std::size_t>(
      std::count_if(match_of_right.begin(), match_of_right.end(), [](int i) { return i >= 0; }));
}

template <typename M>
M krylov_basis_impl(const M& a, const M& b, const ToleranceConfig& tol) {
  if (a.rows() != a.cols()) throw InputError("A must be square");
  if (b.rows() != a.rows()) {
    throw InputError("B must have as many rows as A (" + std::to_string(a.rows()) + "), got " +
                     std::to_string(b.rows()));
  }
  if (!a.allFinite() || !b.allFinite())
    throw InputError("Krylov arguments have non-finite entries");
  const Index n = a.rows();
  M basis(n, 0);
  if (n == 0 || b.cols() == 0) return basis;

  // Appends the part of `w` outside the basis and returns the new columns.
  auto extend = [&](M w, double scale) -> M {
    for (int pass = 0; pass < 2 && basis.cols() > 0; ++pass) {
      w -= basis * (basis.adjoint() * w);
    }
    Eigen::JacobiSVD<M> svd(w, Eigen::ComputeThinU);
    const double cut = tol.rank_rtol * static_cast<double>(n) * scale;
    const Index keep = std::min(count_above(svd.singularValues(), cut), n - basis.cols());
    M fresh = svd.matrixU().leftCols(keep);
    M grown(n, basis.cols() + keep);
    grown << basis, fresh;
    basis = std::move(grown);
    return fresh;
  };

  const double a_norm = Eigen::JacobiSVD<M>(a).singularValues()(0);
  M block = extend(b, Eigen::JacobiSVD<M>(b).singularValues()(0));
  while (block.cols() > 0 && basis.cols() < n) block = extend(a * block, a_norm);
  return basis;
}

}  // namespace

void ToleranceConfig::validate() const {
  auto check = [](double value, const char* name) {
    if (!(value > 0.0 && value <= 1e-2)) {
      std::ostringstream msg;
      msg << "tolerance " << name << " = " << value << " must lie in (0, 1e-2]";
      throw InputError(msg.str());
    }
  };
  check(rank_rtol, "rank_rtol");
  check(eig_atol, "eig_atol");
  check(residual_atol, "residual_atol");
}

void require_finite(const Eigen::Ref<const Matrix>& m, std::string_view what) {
  if (!m.allFinite()) {
    throw InputError("matrix " + std::string(what) + " has non-finite entries");
  }
}

RankReport rank(const Eigen::Ref<const Matrix>& m, const ToleranceConfig& tol, double scale) {
  require_finite(m, "rank argument");
  RankReport report;
  if (m.size() == 0) {
    report.singular_values = Vector(0);
    return report;
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  report.singular_values = svd.singularValues();
  report.threshold_used =
      rank_threshold(tol, m.rows(), m.cols(), std::max(report.singular_values(0), scale));
  report.rank = count_above(report.singular_values, report.threshold_used);
  return report;
}

RankReport rank(const Eigen::Ref<const ComplexMatrix>& m, const ToleranceConfig& tol,
                double scale) {
  if (!m.allFinite()) throw InputError("matrix rank argument has non-finite entries");
  RankReport report;
  if (m.size() == 0) {
    report.singular_values = Vector(0);
    return report;
  }
  const Index rows = m.rows();
  const Index cols = m.cols();
  Matrix embedded(2 * rows, 2 * cols);
  embedded.topLeftCorner(rows, cols) = m.real();
  embedded.topRightCorner(rows, cols) = -m.imag();
  embedded.bottomLeftCorner(rows, cols) = m.imag();
  embedded.bottomRightCorner(rows, cols) = m.real();

  Eigen::JacobiSVD<Matrix> svd(embedded);
  const Vector& doubled = svd.singularValues();
  const Index count = std::min(rows, cols);
  report.singular_values.resize(count);
  for (Index i = 0; i < count; ++i) report.singular_values(i) = doubled(2 * i);
  report.threshold_used =
      rank_threshold(tol, rows, cols, std::max(report.singular_values(0), scale));
  report.rank = count_above(report.singular_values, report.threshold_used);
  return report;
}

double spectral_norm(const Eigen::Ref<const Matrix>& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

double spectral_norm(const Eigen::Ref<const ComplexMatrix>& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<ComplexMatrix>(m).singularValues()(0);
}

Matrix pinv(const Eigen::Ref<const Matrix>& m, const ToleranceConfig& tol) {
  require_finite(m, "pinv argument");
  if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  const double threshold = rank_threshold(tol, m.rows(), m.cols(), sigma(0));
  Vector inverted = Vector::Zero(sigma.size());
  for (Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > threshold) inverted(i) = 1.0 / sigma(i);
  }
  return svd.matrixV() * inverted.asDiagonal() * svd.matrixU().transpose();
}

Matrix nullspace_basis(const Eigen::Ref<const Matrix>& m, const ToleranceConfig& tol) {
  require_finite(m, "nullspace argument");
  if (m.rows() == 0) return Matrix::Identity(m.cols(), m.cols());
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Vector& sigma = svd.singularValues();
  const double threshold = rank_threshold(tol, m.rows(), m.cols(), sigma(0));
  const Index r = count_above(sigma, threshold);
  return svd.matrixV().rightCols(m.cols() - r);
}

Matrix krylov_blocks(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                     Index blocks) {
  if (a.rows() != a.cols()) throw InputError("A must be square");
  if (b.rows() != a.rows()) {
    throw InputError("B must have as many rows as A (" + std::to_string(a.rows()) + "), got " +
                     std::to_string(b.rows()));
  }
  if (blocks < 1) throw InputError("need at least one Krylov block");
  const Index m = b.cols();
  Matrix out(a.rows(), m * blocks);
  out.leftCols(m) = b;
  for (Index k = 1; k < blocks; ++k) {
    out.middleCols(k * m, m) = a * out.middleCols((k - 1) * m, m);
  }
  return out;
}

Matrix krylov_basis(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                    const ToleranceConfig& tol) {
  return krylov_basis_impl<Matrix>(a, b, tol);
}

ComplexMatrix krylov_basis(const Eigen::Ref<const ComplexMatrix>& a,
                           const Eigen::Ref<const ComplexMatrix>& b, const ToleranceConfig& tol) {
  return krylov_basis_impl<ComplexMatrix>(a, b, tol);
}

Matrix controllability_matrix(const Eigen::Ref<const Matrix>& a,
                              const Eigen::Ref<const Matrix>& b) {
  return krylov_blocks(a, b, a.rows());
}

ComplexList eigenvalues(const Eigen::Ref<const Matrix>& m) {
  if (m.rows() != m.cols()) throw InputError("eigenvalues need a square matrix");
  require_finite(m, "eigenvalue argument");
  if (m.size() == 0) return {};
  Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigenvalue iteration did not converge");
  }
  const auto& values = solver.eigenvalues();
  return ComplexList(values.data(), values.data() + values.size());
}

double max_abs(const Eigen::Ref<const Matrix>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

bool spectra_match(const ComplexList& a, const ComplexList& b, double atol) {
  if (a.size() != b.size()) return false;
  return matched_count(match_within(a, b, atol)) == a.size();
}

bool spectrum_contains(const ComplexList& superset, const ComplexList& subset, double atol) {
  if (subset.size() > superset.size()) return false;
  return matched_count(match_within(subset, superset, atol)) == subset.size();
}

std::optional<ComplexList> spectrum_difference(const ComplexList& superset,
                                               const ComplexList& subset, double atol) {
  if (subset.size() > superset.size()) return std::nullopt;
  const auto match_of_super = match_within(subset, superset, atol);
  if (matched_count(match_of_super) != subset.size()) return std::nullopt;
  ComplexList rest;
  for (std::size_t j = 0; j < superset.size(); ++j) {
    if (match_of_super[j] < 0) rest.push_back(superset[j]);
  }
  return rest;
}

Matrix vstack(const Eigen::Ref<const Matrix>& top, const Eigen::Ref<const Matrix>& bottom) {
  if (top.rows() > 0 && bottom.rows() > 0 && top.cols() != bottom.cols()) {
    throw InputError("cannot stack matrices with " + std::to_string(top.cols()) + " and " +
                     std::to_string(bottom.cols()) + " columns");
  }
  const Index cols = top.rows() > 0 ? top.cols() : bottom.cols();
  Matrix out(top.rows() + bottom.rows(), cols);
  if (top.rows() > 0) out.topRows(top.rows()) = top;
  if (bottom.rows() > 0) out.bottomRows(bottom.rows()) = bottom;
  return out;
}

}  // namespace targetctl
