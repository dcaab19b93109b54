#include "targetctl/synthesis.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "targetctl/errors.hpp"

namespace targetctl {

namespace {

constexpr int kMaxDraws = 8;

ComplexList conjugates(const ComplexList& values) {
  ComplexList out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [](Complex z) { return std::conj(z); });
  return out;
}

bool has_repeated(const ComplexList& values, double atol) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      if (std::abs(values[i] - values[j]) < atol) return true;
    }
  }
  return false;
}

bool meets_contract(const Matrix& m, const Matrix& g, const Matrix& k, const PoleSet& poles,
                    const ToleranceConfig& tol) {
  if (!k.allFinite()) return false;
  return spectra_match(eigenvalues(m - g * k), poles.poles, tol.eig_atol);
}

// K with eig(M - g K) = roots of x^q + c_{q-1} x^{q-1} + ... + c_0, for a
// controllable single-input pair. Empty on a numerically singular
// controllability matrix.
std::optional<Matrix> ackermann(const Matrix& m, const Vector& g, const Vector& coeffs) {
  const Index q = m.rows();
  const Matrix ctrb = controllability_matrix(m, g);
  Eigen::FullPivLU<Matrix> lu(ctrb.transpose());
  if (!lu.isInvertible()) return std::nullopt;
  Vector last_unit = Vector::Zero(q);
  last_unit(q - 1) = 1.0;
  const Vector y = lu.solve(last_unit);

  Matrix poly = Matrix::Identity(q, q);
  for (Index k = q - 1; k >= 0; --k) {
    poly = poly * m;
    poly.diagonal().array() += coeffs(k);
  }
  return Matrix(y.transpose() * poly);
}

// Real block-diagonal matrix with the requested spectrum: 1x1 blocks for real
// poles, [[a, b], [-b, a]] for each pair a +- bi.
Matrix real_spectrum_matrix(const ComplexList& poles, double atol) {
  const auto q = static_cast<Index>(poles.size());
  Matrix out = Matrix::Zero(q, q);
  std::vector<bool> used(poles.size(), false);
  Index at = 0;
  for (std::size_t i = 0; i < poles.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    const Complex p = poles[i];
    if (std::abs(p.imag()) < atol) {
      out(at, at) = p.real();
      ++at;
      continue;
    }
    for (std::size_t j = i + 1; j < poles.size(); ++j) {
      if (!used[j] && std::abs(poles[j] - std::conj(p)) < atol) {
        used[j] = true;
        break;
      }
    }
    const double re = p.real();
    const double im = std::abs(p.imag());
    out(at, at) = re;
    out(at, at + 1) = im;
    out(at + 1, at) = -im;
    out(at + 1, at + 1) = re;
    at += 2;
  }
  return out;
}

// Solves M X - X L = rhs through the Kronecker form
// (I (x) M - L^T (x) I) vec X = vec rhs.
std::optional<Matrix> solve_sylvester(const Matrix& m, const Matrix& l, const Matrix& rhs) {
  const Index q = m.rows();
  const Index p = l.rows();
  Matrix system = Matrix::Zero(q * p, q * p);
  for (Index j = 0; j < p; ++j) {
    system.block(j * q, j * q, q, q) += m;
    for (Index i = 0; i < p; ++i) {
      system.block(j * q, i * q, q, q).diagonal().array() -= l(i, j);
    }
  }
  Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible()) return std::nullopt;
  const Vector vec_rhs = Eigen::Map<const Vector>(rhs.data(), rhs.size());
  const Vector vec_x = lu.solve(vec_rhs);
  return Matrix(Eigen::Map<const Matrix>(vec_x.data(), q, p));
}

Matrix random_normal(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal;
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  }
  return out;
}

void validate_poles(const PoleSet& poles, Index expected, const ToleranceConfig& tol) {
  if (static_cast<Index>(poles.size()) != expected) {
    throw InputError("expected " + std::to_string(expected) + " poles, got " +
                     std::to_string(poles.size()));
  }
  for (const Complex p : poles.poles) {
    if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) {
      throw InputError("pole set has a non-finite entry");
    }
  }
  if (!poles.conjugate_closed(tol.eig_atol)) {
    throw InputError("pole set is not closed under complex conjugation");
  }
}

ComplexList residual_spectrum_of(const Matrix& a, const Matrix& target,
                                 const ToleranceConfig& tol) {
  const Matrix kernel = nullspace_basis(target, tol);
  if (kernel.cols() == 0) return {};
  const Matrix kernel_t = kernel.transpose();
  return eigenvalues(kernel_t * a * pinv(kernel_t, tol));
}

DesignResult finish_design(const LinearSystem& sys, const Matrix& target, Matrix gain,
                           const PoleSet& poles, DesignMode mode,
                           std::optional<Matrix> augmentation, const ToleranceConfig& tol) {
  const Matrix& a = sys.a();
  const Matrix& b = sys.b();
  DesignResult result;
  const Matrix reduced = target * a * pinv(target, tol) - target * b * gain;
  const Matrix closed_loop = a - b * gain * target;
  result.achieved_subsystem_eigs = eigenvalues(reduced);
  result.closed_loop_eigs = eigenvalues(closed_loop);
  result.residual_spectrum = residual_spectrum_of(a, target, tol);
  result.sylvester_residual = max_abs(reduced * target - target * closed_loop);
  result.gain = std::move(gain);
  result.target = target;
  result.augmentation = std::move(augmentation);
  result.requested_poles = poles;
  result.mode = mode;

  if (!spectra_match(result.achieved_subsystem_eigs, poles.poles, tol.eig_atol)) {
    throw NumericalError("subsystem spectrum does not match the requested poles");
  }
  if (!(result.sylvester_residual < tol.residual_atol)) {
    std::ostringstream msg;
    msg << "Sylvester residual " << result.sylvester_residual << " exceeds " << tol.residual_atol;
    throw NumericalError(msg.str());
  }
  if (!spectrum_contains(result.closed_loop_eigs, result.achieved_subsystem_eigs, tol.eig_atol)) {
    throw NumericalError("subsystem spectrum is not contained in the closed-loop spectrum");
  }
  return result;
}

}  // namespace

bool PoleSet::conjugate_closed(double atol) const {
  return spectra_match(poles, conjugates(poles), atol);
}

Vector PoleSet::characteristic_coefficients() const {
  // Monic product, lowest degree first.
  std::vector<Complex> poly{Complex(1.0)};
  for (const Complex p : poles) {
    std::vector<Complex> next(poly.size() + 1, Complex(0.0));
    for (std::size_t k = 0; k < poly.size(); ++k) {
      next[k + 1] += poly[k];
      next[k] -= p * poly[k];
    }
    poly = std::move(next);
  }
  Vector coeffs(static_cast<Index>(poles.size()));
  for (Index k = 0; k < coeffs.size(); ++k) coeffs(k) = poly[static_cast<std::size_t>(k)].real();
  return coeffs;
}

const char* to_string(DesignMode mode) {
  switch (mode) {
    case DesignMode::kRPole:
      return "r-pole";
    case DesignMode::kN0Pole:
      return "n0-pole";
    case DesignMode::kStaticOutput:
      return "static-output";
  }
  return "unknown";
}

const char* to_string(FailureReason reason) {
  switch (reason) {
    case FailureReason::kNotTargetOutputControllable:
      return "not-target-output-controllable";
    case FailureReason::kSubsystemUncontrollable:
      return "subsystem-uncontrollable";
    case FailureReason::kAugmentedInvarianceFailed:
      return "augmented-invariance-failed";
    case FailureReason::kAugmentedSubsystemUncontrollable:
      return "augmented-subsystem-uncontrollable";
    case FailureReason::kInvalidPoles:
      return "invalid-poles";
    case FailureReason::kPlacementFailed:
      return "placement-failed";
    case FailureReason::kNumericalFailure:
      return "numerical-failure";
  }
  return "unknown";
}

Matrix place_poles(const Eigen::Ref<const Matrix>& m_in, const Eigen::Ref<const Matrix>& g_in,
                   const PoleSet& poles, const ToleranceConfig& tol, std::uint64_t seed) {
  const Matrix m = m_in;
  const Matrix g = g_in;
  if (m.rows() < 1 || m.rows() != m.cols()) throw InputError("placement needs a square M");
  if (g.rows() != m.rows() || g.cols() < 1) throw InputError("G must have as many rows as M");
  require_finite(m, "M");
  require_finite(g, "G");
  const Index q = m.rows();
  const Index inputs = g.cols();
  validate_poles(poles, q, tol);

  const RankReport kalman = rank(controllability_matrix(m, g), tol);
  if (kalman.rank != q) {
    throw ExistenceError("pair is not controllable (Kalman rank " + std::to_string(kalman.rank) +
                         " < " + std::to_string(q) + ")");
  }

  const Vector coeffs = poles.characteristic_coefficients();
  std::mt19937_64 rng(seed);

  if (inputs == 1) {
    if (auto k = ackermann(m, g.col(0), coeffs); k && meets_contract(m, g, *k, poles, tol)) {
      return *k;
    }
  } else {
    const double scale = (max_abs(m) + 1.0) / std::max(max_abs(g), 1e-300);
    for (int draw = 0; draw < kMaxDraws; ++draw) {
      Vector combo = random_normal(rng, inputs, 1).col(0);
      combo.normalize();
      // The first draw keeps the open-loop M; later draws add a random
      // feedback so that a non-cyclic M becomes cyclic.
      const Matrix pre =
          draw == 0 ? Matrix::Zero(inputs, q) : Matrix(scale * random_normal(rng, inputs, q));
      const Matrix shifted = m - g * pre;
      const Vector column = g * combo;
      if (rank(controllability_matrix(shifted, column), tol).rank != q) continue;
      const auto k1 = ackermann(shifted, column, coeffs);
      if (!k1) continue;
      const Matrix k = pre + combo * *k1;
      if (meets_contract(m, g, k, poles, tol)) return k;
    }
  }

  if (has_repeated(poles.poles, tol.eig_atol)) {
    throw NumericalError(
        "pole placement failed; the Sylvester fallback does not support repeated poles");
  }
  const Matrix target_spectrum = real_spectrum_matrix(poles.poles, tol.eig_atol);
  for (int draw = 0; draw < kMaxDraws; ++draw) {
    const Matrix g0 = random_normal(rng, inputs, q);
    const auto x = solve_sylvester(m, target_spectrum, g * g0);
    if (!x) continue;
    Eigen::FullPivLU<Matrix> lu(*x);
    if (!lu.isInvertible()) continue;
    const Matrix k = g0 * lu.inverse();
    if (meets_contract(m, g, k, poles, tol)) return k;
  }
  throw NumericalError("pole placement failed to reach the requested spectrum within eig_atol");
}

DesignResult design_r_pole(const LinearSystem& sys, const TargetMap& target, const PoleSet& poles,
                           const ToleranceConfig& tol, std::uint64_t seed) {
  validate_poles(poles, target.rows(), tol);
  const InvarianceReport invariance = check_invariance_condition(sys, target, tol);
  if (!invariance.holds) {
    throw NeedsAugmentationError("rank[FA; F] = " + std::to_string(invariance.rank_stacked) +
                                 " > rank F = " + std::to_string(invariance.rank_f) +
                                 "; no r-pole design exists, augment F (n0-pole design)");
  }
  const SubsystemReport subsystem = check_subsystem_controllability(sys, target, tol);
  if (!subsystem.holds) {
    throw ExistenceError("(FAF^+, FB) is not controllable (Kalman rank " +
                         std::to_string(subsystem.kalman.rank) + " < " +
                         std::to_string(target.rows()) + ")");
  }
  Matrix gain = place_poles(subsystem.reduced_a, subsystem.reduced_b, poles, tol, seed);
  return finish_design(sys, target.f(), std::move(gain), poles, DesignMode::kRPole, std::nullopt,
                       tol);
}

Matrix build_augmentation(const LinearSystem& sys, const TargetMap& target,
                          const ToleranceConfig& tol) {
  const ObservabilityIndices indices = observability_indices(sys.a(), target, tol);
  const Index n = sys.states();
  const Index extra = indices.total() - target.rows();
  if (extra < 0) throw NumericalError("observability indices sum below rank F");

  Matrix out(extra, n);
  Index at = 0;
  for (Index i = 0; i < target.rows(); ++i) {
    const Index nu = indices.indices[static_cast<std::size_t>(i)];
    if (nu < 1) throw NumericalError("row " + std::to_string(i) + " of F has index 0");
    Eigen::RowVectorXd row = target.f().row(i);
    for (Index k = 1; k < nu; ++k) {
      row = row * sys.a();
      out.row(at++) = row;
    }
  }
  if (at != extra) throw NumericalError("observability index bookkeeping mismatch");

  const Matrix stacked = vstack(target.f(), out);
  if (rank(stacked, tol).rank != indices.total()) {
    throw NumericalError("[F; R] is not full row rank");
  }
  return out;
}

DesignResult design_n0_pole(const LinearSystem& sys, const TargetMap& target,
                            const Eigen::Ref<const Matrix>& augmentation, const PoleSet& poles,
                            const ToleranceConfig& tol, std::uint64_t seed) {
  if (augmentation.rows() > 0 && augmentation.cols() != target.cols()) {
    throw InputError("R must have " + std::to_string(target.cols()) + " columns");
  }
  const TargetMap augmented(vstack(target.f(), augmentation), tol);
  validate_poles(poles, augmented.rows(), tol);

  const InvarianceReport invariance = check_invariance_condition(sys, augmented, tol);
  if (!invariance.holds) {
    throw ExistenceError("rank[F'A; F'] = " + std::to_string(invariance.rank_stacked) +
                         " > rank F' = " + std::to_string(invariance.rank_f) + " for F' = [F; R]");
  }
  const SubsystemReport subsystem = check_subsystem_controllability(sys, augmented, tol);
  if (!subsystem.holds) {
    throw ExistenceError("(F'AF'^+, F'B) is not controllable for F' = [F; R] (Kalman rank " +
                         std::to_string(subsystem.kalman.rank) + " < " +
                         std::to_string(augmented.rows()) + ")");
  }
  Matrix gain = place_poles(subsystem.reduced_a, subsystem.reduced_b, poles, tol, seed);
  std::optional<Matrix> r;
  if (augmentation.rows() > 0) r = Matrix(augmentation);
  return finish_design(sys, augmented.f(), std::move(gain), poles, DesignMode::kN0Pole,
                       std::move(r), tol);
}

DesignResult design_static_output_feedback(const LinearSystem& sys, const PoleSet& poles,
                                           const ToleranceConfig& tol, std::uint64_t seed) {
  if (!sys.c()) throw InputError("static output feedback needs an output matrix C");
  const TargetMap output(*sys.c(), tol);
  validate_poles(poles, output.rows(), tol);

  const InvarianceReport invariance = check_invariance_condition(sys, output, tol);
  if (!invariance.holds) {
    throw ExistenceError("rank[CA; C] = " + std::to_string(invariance.rank_stacked) +
                         " > rank C = " + std::to_string(invariance.rank_f) +
                         "; static output feedback cannot place p poles");
  }
  const SubsystemReport subsystem = check_subsystem_controllability(sys, output, tol);
  if (!subsystem.holds) {
    throw ExistenceError("(CAC^+, CB) is not controllable (Kalman rank " +
                         std::to_string(subsystem.kalman.rank) + " < " +
                         std::to_string(output.rows()) + ")");
  }
  Matrix gain = place_poles(subsystem.reduced_a, subsystem.reduced_b, poles, tol, seed);
  return finish_design(sys, output.f(), std::move(gain), poles, DesignMode::kStaticOutput,
                       std::nullopt, tol);
}

ComplexList extend_poles_leftward(const ComplexList& given, std::size_t count) {
  double leftmost = 0.0;
  for (const Complex p : given) leftmost = std::min(leftmost, p.real());
  ComplexList extra;
  extra.reserve(count);
  for (std::size_t k = 1; k <= count; ++k) {
    extra.emplace_back(leftmost - static_cast<double>(k), 0.0);
  }
  return extra;
}

namespace {

DesignOutcome run_steps(const LinearSystem& sys, const TargetMap& target, const PoleSet& poles,
                        const ToleranceConfig& tol, const AlgorithmOptions& options,
                        DesignOutcome& outcome) {
  auto fail = [&](int step, FailureReason reason, std::string message) {
    outcome.failure = DesignFailure{step, reason, std::move(message)};
    return outcome;
  };
  // Runs a design, mapping library errors onto algorithm exits at `step`.
  auto attempt = [&](int step, FailureReason existence_reason, auto&& design) {
    try {
      outcome.result = design();
    } catch (const InputError& e) {
      return fail(step, FailureReason::kInvalidPoles, e.what());
    } catch (const ExistenceError& e) {
      return fail(step, existence_reason, e.what());
    } catch (const Error& e) {
      return fail(step, FailureReason::kPlacementFailed, e.what());
    }
    return outcome;
  };

  outcome.steps.push_back(1);
  outcome.toc = is_target_output_controllable(sys, target, tol);
  if (!outcome.toc->is_toc) {
    return fail(1, FailureReason::kNotTargetOutputControllable,
                "(A, B, F) is not target output controllable: " + *outcome.toc->witness);
  }

  outcome.steps.push_back(2);
  const InvarianceReport invariance = check_invariance_condition(sys, target, tol);

  if (invariance.holds) {
    outcome.steps.push_back(3);
    const SubsystemReport subsystem = check_subsystem_controllability(sys, target, tol);
    if (!subsystem.holds) {
      return fail(3, FailureReason::kSubsystemUncontrollable,
                  "(FAF^+, FB) is not controllable; no r-pole controller exists");
    }
    if (static_cast<Index>(poles.size()) != target.rows()) {
      return fail(3, FailureReason::kInvalidPoles,
                  "r-pole design needs exactly " + std::to_string(target.rows()) + " poles, got " +
                      std::to_string(poles.size()));
    }
    return attempt(3, FailureReason::kSubsystemUncontrollable,
                   [&] { return design_r_pole(sys, target, poles, tol, options.seed); });
  }

  outcome.steps.push_back(4);
  outcome.indices = observability_indices(sys.a(), target, tol);
  const Matrix augmentation = build_augmentation(sys, target, tol);

  outcome.steps.push_back(5);
  const TargetMap augmented(vstack(target.f(), augmentation), tol);
  const auto n0 = static_cast<std::size_t>(augmented.rows());
  if (!check_invariance_condition(sys, augmented, tol).holds) {
    return fail(5, FailureReason::kAugmentedInvarianceFailed,
                "rank[F'A; F'] > rank F' for F' = [F; R]");
  }
  if (!check_subsystem_controllability(sys, augmented, tol).holds) {
    return fail(5, FailureReason::kAugmentedSubsystemUncontrollable,
                "(F'AF'^+, F'B) is not controllable for F' = [F; R]; no n0-pole controller "
                "exists");
  }
  if (poles.size() > n0) {
    return fail(5, FailureReason::kInvalidPoles,
                "n0-pole design needs at most " + std::to_string(n0) + " poles, got " +
                    std::to_string(poles.size()));
  }
  PoleSet full = poles;
  if (full.size() < n0) {
    const ComplexList extra = options.extend_poles(poles.poles, n0 - full.size());
    full.poles.insert(full.poles.end(), extra.begin(), extra.end());
  }
  return attempt(5, FailureReason::kAugmentedSubsystemUncontrollable, [&] {
    return design_n0_pole(sys, target, augmentation, full, tol, options.seed);
  });
}

}  // namespace

DesignOutcome run_design_algorithm(const LinearSystem& sys, const TargetMap& target,
                                   const PoleSet& poles, const ToleranceConfig& tol,
                                   const AlgorithmOptions& options) {
  DesignOutcome outcome;
  try {
    return run_steps(sys, target, poles, tol, options, outcome);
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    outcome.result.reset();
    outcome.failure = DesignFailure{outcome.steps.empty() ? 1 : outcome.steps.back(),
                                    FailureReason::kNumericalFailure, e.what()};
    return outcome;
  }
}

}  // namespace targetctl
