#pragma once

// Random sweep over the three plant families. Every implication is checked
// against quantities recomputed here with plain Eigen calls, not with the
// library's own reports.

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "random_systems.hpp"
#include "targetctl/analysis.hpp"
#include "targetctl/errors.hpp"
#include "targetctl/synthesis.hpp"

namespace targetctl::testing {

struct PropertyTally {
  int checked = 0;
  int violations = 0;
  std::vector<std::string> examples;

  void record(bool ok, const std::string& what) {
    ++checked;
    if (!ok) {
      ++violations;
      if (examples.size() < 5) examples.push_back(what);
    }
  }
};

struct SweepResult {
  PropertyTally controllable_implies_toc;
  PropertyTally invariance_implies_toc;
  PropertyTally toc_implies_pencil;
  PropertyTally shift_invariance;
  PropertyTally sylvester_residual;
  PropertyTally spectrum_subset;
  PropertyTally spectrum_union;
  int designs_attempted = 0;
  int designs_succeeded = 0;
  int designs_numerical_failures = 0;
};

namespace oracle {

inline Eigen::VectorXcd eigs(const Matrix& m) {
  return Eigen::EigenSolver<Matrix>(m, false).eigenvalues();
}

inline Matrix pseudo_inverse(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cut = 1e-12 * static_cast<double>(std::max(m.rows(), m.cols())) * s(0);
  Matrix sinv = Matrix::Zero(m.cols(), m.rows());
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > cut) sinv(i, i) = 1.0 / s(i);
  return svd.matrixV() * sinv * svd.matrixU().transpose();
}

// Orthonormal basis of {x : m x = 0} from the trailing right singular vectors.
inline Matrix kernel(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cut = 1e-9 * static_cast<double>(std::max(m.rows(), m.cols())) * s(0);
  Index r = 0;
  while (r < s.size() && s(r) > cut) ++r;
  return svd.matrixV().rightCols(m.cols() - r);
}

// Multiset inclusion within atol by augmenting paths.
inline bool contains(std::vector<Complex> big, const std::vector<Complex>& small, double atol) {
  std::vector<int> owner(big.size(), -1);
  std::function<bool(std::size_t, std::vector<char>&)> place = [&](std::size_t i,
                                                                   std::vector<char>& seen) {
    for (std::size_t j = 0; j < big.size(); ++j) {
      if (seen[j] || std::abs(big[j] - small[i]) > atol) continue;
      seen[j] = 1;
      if (owner[j] < 0 || place(static_cast<std::size_t>(owner[j]), seen)) {
        owner[j] = static_cast<int>(i);
        return true;
      }
    }
    return false;
  };
  for (std::size_t i = 0; i < small.size(); ++i) {
    std::vector<char> seen(big.size(), 0);
    if (!place(i, seen)) return false;
  }
  return true;
}

inline std::vector<Complex> to_list(const Eigen::VectorXcd& v) {
  return {v.data(), v.data() + v.size()};
}

}  // namespace oracle

inline SweepResult run_property_sweep(std::uint64_t seed, int trials, Index max_states = 8) {
  SweepResult out;
  CaseGenerator gen(seed, max_states);
  const ToleranceConfig tol;

  for (int trial = 0; trial < trials; ++trial) {
    const RandomCase c = gen.next();
    std::ostringstream tag;
    tag << "trial " << trial << " (" << to_string(c.family) << ", n=" << c.a.rows()
        << ", m=" << c.b.cols() << ", r=" << c.f.rows() << ")";
    const LinearSystem sys(c.a, c.b);
    const TargetMap target(c.f);

    const bool controllable = is_controllable(sys, tol);
    const TocVerdict toc = is_target_output_controllable(sys, target, tol);
    if (controllable) out.controllable_implies_toc.record(toc.is_toc, tag.str());

    const InvarianceReport inv = check_invariance_condition(sys, target, tol);
    if (inv.holds && check_subsystem_controllability(sys, target, tol).holds) {
      out.invariance_implies_toc.record(toc.is_toc, tag.str());
    }

    if (toc.is_toc) {
      out.toc_implies_pencil.record(check_pencil_condition(sys, target, tol).holds, tag.str());
    }

    for (int k = 0; k < 10; ++k) {
      const Complex s = k < 5 ? Complex(gen.uniform_real(-2.0, 2.0), 0.0)
                              : Complex(gen.uniform_real(-2.0, 2.0), gen.uniform_real(0.1, 2.0));
      const Index shifted = shifted_controllability_rank(sys, target, s, tol).rank;
      std::ostringstream what;
      what << tag.str() << " s=" << s << " rank " << shifted << " vs " << toc.rank_fc;
      out.shift_invariance.record(shifted == toc.rank_fc, what.str());
    }

    if (!toc.is_toc) continue;
    ++out.designs_attempted;
    AlgorithmOptions options;
    options.seed = static_cast<std::uint64_t>(trial);
    const DesignOutcome design =
        run_design_algorithm(sys, target, gen.stable_poles(c.f.rows()), tol, options);
    if (!design.ok()) {
      if (design.failure->reason == FailureReason::kNumericalFailure) {
        ++out.designs_numerical_failures;
      }
      continue;
    }
    ++out.designs_succeeded;

    const Matrix& fp = design.result->target;
    const Matrix& z = design.result->gain;
    const Matrix closed = c.a - c.b * z * fp;
    const Matrix reduced = fp * c.a * oracle::pseudo_inverse(fp) - fp * c.b * z;
    const double residual = (reduced * fp - fp * closed).cwiseAbs().maxCoeff();
    out.sylvester_residual.record(residual < 1e-8,
                                  tag.str() + " residual " + std::to_string(residual));

    const auto closed_eigs = oracle::to_list(oracle::eigs(closed));
    const auto reduced_eigs = oracle::to_list(oracle::eigs(reduced));
    out.spectrum_subset.record(
        oracle::contains(closed_eigs, reduced_eigs, 1e-6) &&
            oracle::contains(reduced_eigs, design.result->requested_poles.poles, 1e-6),
        tag.str());

    std::vector<Complex> both = reduced_eigs;
    const Matrix kernel_t = oracle::kernel(fp).transpose();
    if (kernel_t.rows() > 0) {
      const auto rest =
          oracle::to_list(oracle::eigs(kernel_t * c.a * oracle::pseudo_inverse(kernel_t)));
      both.insert(both.end(), rest.begin(), rest.end());
    }
    out.spectrum_union.record(
        both.size() == closed_eigs.size() && oracle::contains(both, closed_eigs, 1e-6), tag.str());
  }
  return out;
}

}  // namespace targetctl::testing
