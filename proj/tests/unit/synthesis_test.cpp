#include "targetctl/synthesis.hpp"

#include <gtest/gtest.h>

#include "random_systems.hpp"
#include "reference_systems.hpp"
#include "targetctl/errors.hpp"

namespace targetctl {
namespace {

using testing::reals;
using testing::rows;

constexpr double kEigTol = 1e-6;

ComplexList closed_loop(const Matrix& a, const Matrix& b, const Matrix& gain, const Matrix& f) {
  return eigenvalues(a - b * gain * f);
}

ComplexList reduced_loop(const Matrix& a, const Matrix& b, const Matrix& gain, const Matrix& f) {
  return eigenvalues(f * a * pinv(f) - f * b * gain);
}

TEST(PlacePoles, ScalarPairGivesExactGain) {
  const Matrix k = place_poles(rows({{1}}), rows({{1}}), PoleSet{reals({-3})});
  EXPECT_NEAR(k(0, 0), 4.0, 1e-12);
}

TEST(PlacePoles, AlreadyPlacedSpectrum) {
  const Matrix m = rows({{-1, 0}, {0, -2}});
  const Matrix g = Matrix::Identity(2, 2);
  const Matrix k = place_poles(m, g, PoleSet{reals({-1, -2})});
  EXPECT_TRUE(spectra_match(eigenvalues(m - g * k), reals({-1, -2}), kEigTol));
}

TEST(PlacePoles, ReducedPairOfSecondExample) {
  const testing::InvariantTarget ex;
  const Matrix m = ex.f * ex.a * pinv(ex.f);
  const Matrix g = ex.f * ex.b;
  // The reference gain is one valid answer.
  EXPECT_TRUE(spectra_match(eigenvalues(m - g * ex.reference_gain), reals({-2}), kEigTol));
  for (std::uint64_t seed : {0u, 1u, 42u}) {
    const Matrix k = place_poles(m, g, PoleSet{reals({-2})}, {}, seed);
    EXPECT_TRUE(spectra_match(eigenvalues(m - g * k), reals({-2}), kEigTol)) << "seed " << seed;
  }
}

TEST(PlacePoles, ComplexAndRepeatedPoles) {
  const Matrix m = rows({{0, 1, 0}, {0, 0, 1}, {1, -2, 0.5}});
  const Matrix g = rows({{0}, {0}, {1}});
  const PoleSet complex_set{{Complex(-1, 2), Complex(-1, -2), Complex(-3, 0)}};
  EXPECT_TRUE(spectra_match(eigenvalues(m - g * place_poles(m, g, complex_set)), complex_set.poles,
                            kEigTol));

  const PoleSet repeated{reals({-1, -1, -2})};
  EXPECT_TRUE(
      spectra_match(eigenvalues(m - g * place_poles(m, g, repeated)), repeated.poles, kEigTol));
}

TEST(PlacePoles, NonCyclicMultiInputPair) {
  // M = I is not cyclic, so no single input combination alone controls it.
  const Matrix m = Matrix::Identity(2, 2);
  const Matrix g = Matrix::Identity(2, 2);
  for (const auto& poles : {reals({-1, -2}), reals({-1, -1})}) {
    const Matrix k = place_poles(m, g, PoleSet{poles});
    EXPECT_TRUE(spectra_match(eigenvalues(m - g * k), poles, kEigTol));
  }
}

TEST(PlacePoles, Errors) {
  const Matrix m = rows({{1, 0}, {0, 2}});
  EXPECT_THROW(place_poles(m, rows({{1}, {0}}), PoleSet{reals({-1, -2})}), ExistenceError);
  EXPECT_THROW(place_poles(m, rows({{1}, {1}}), PoleSet{{Complex(-1, 1), Complex(-2, 0)}}),
               InputError);
  EXPECT_THROW(place_poles(m, rows({{1}, {1}}), PoleSet{reals({-1})}), InputError);
}

TEST(PlacePoles, RandomRoundTrip) {
  testing::CaseGenerator gen(2024);
  int placed = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const Index q = gen.uniform(1, 6);
    const Index m = gen.uniform(1, 3);
    const Matrix mm = gen.normal(q, q, 1.0 / std::sqrt(static_cast<double>(q)));
    const Matrix g = gen.normal(q, m);
    const PoleSet poles = gen.stable_poles(q);
    const Matrix k = place_poles(mm, g, poles, {}, static_cast<std::uint64_t>(trial));
    EXPECT_TRUE(spectra_match(eigenvalues(mm - g * k), poles.poles, kEigTol)) << "trial " << trial;
    ++placed;
  }
  EXPECT_EQ(placed, 150);
}

TEST(PoleSet, CharacteristicCoefficients) {
  // (x + 1)(x + 2) = x^2 + 3x + 2; (x - (1+2i))(x - (1-2i)) = x^2 - 2x + 5.
  const Vector c1 = PoleSet{reals({-1, -2})}.characteristic_coefficients();
  EXPECT_NEAR(c1(0), 2.0, 1e-15);
  EXPECT_NEAR(c1(1), 3.0, 1e-15);
  const Vector c2 = PoleSet{{Complex(1, 2), Complex(1, -2)}}.characteristic_coefficients();
  EXPECT_NEAR(c2(0), 5.0, 1e-15);
  EXPECT_NEAR(c2(1), -2.0, 1e-15);
}

TEST(DesignRPole, SecondExample) {
  const testing::InvariantTarget ex;
  const LinearSystem sys(ex.a, ex.b, ex.c);
  const DesignResult d = design_r_pole(sys, TargetMap(ex.f), PoleSet{reals({-2})});
  EXPECT_EQ(d.mode, DesignMode::kRPole);
  EXPECT_EQ(d.gain.rows(), 2);
  EXPECT_EQ(d.gain.cols(), 1);
  EXPECT_TRUE(spectra_match(d.achieved_subsystem_eigs, reals({-2}), kEigTol));
  EXPECT_TRUE(spectrum_contains(d.closed_loop_eigs, reals({-2}), kEigTol));
  EXPECT_LT(d.sylvester_residual, 1e-8);
  // Residual spectrum is the rest of eig(A): {-1, 0.2, 0.5, 0.5}.
  EXPECT_TRUE(spectra_match(d.residual_spectrum, reals({-1, 0.2, 0.5, 0.5}), kEigTol));
}

TEST(DesignRPole, ThirdExampleNeedsAugmentation) {
  const testing::AugmentedTarget ex;
  EXPECT_THROW(design_r_pole(LinearSystem(ex.a, ex.b), TargetMap(ex.f), PoleSet{reals({-2})}),
               NeedsAugmentationError);
}

TEST(DesignRPole, SubsystemUncontrollable) {
  const Matrix a = rows({{-1, 0}, {0, -2}});
  const Matrix b = rows({{0}, {1}});
  EXPECT_THROW(design_r_pole(LinearSystem(a, b), TargetMap(rows({{1, 0}})), PoleSet{reals({-3})}),
               ExistenceError);
}

TEST(DesignRPole, IdentityTargetIsFullStateFeedback) {
  const Matrix a = rows({{0, 1, 0}, {0, 0, 1}, {2, -1, 0.5}});
  const Matrix b = rows({{0, 1}, {0, 0}, {1, 0}});
  const auto poles = reals({-1, -2, -4});
  const DesignResult d =
      design_r_pole(LinearSystem(a, b), TargetMap(Matrix::Identity(3, 3)), PoleSet{poles});
  EXPECT_TRUE(spectra_match(d.closed_loop_eigs, poles, kEigTol));
  EXPECT_TRUE(d.residual_spectrum.empty());
}

TEST(BuildAugmentation, ThirdExampleIsFA) {
  const testing::AugmentedTarget ex;
  const Matrix r = build_augmentation(LinearSystem(ex.a, ex.b), TargetMap(ex.f));
  ASSERT_EQ(r.rows(), 1);
  EXPECT_LT(max_abs(r - ex.reference_r), 1e-12);
}

TEST(BuildAugmentation, EmptyWhenIndicesAreOne) {
  const testing::InvariantTarget ex;
  EXPECT_EQ(build_augmentation(LinearSystem(ex.a, ex.b), TargetMap(ex.f)).rows(), 0);
}

TEST(BuildAugmentation, ObservableChainStacksToIdentity) {
  const Index n = 4;
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i + 1 < n; ++i) a(i, i + 1) = 1.0;
  Matrix f = Matrix::Zero(1, n);
  f(0, 0) = 1.0;
  const Matrix r = build_augmentation(LinearSystem(a, Matrix::Ones(n, 1)), TargetMap(f));
  ASSERT_EQ(r.rows(), n - 1);
  EXPECT_EQ(vstack(f, r), Matrix(Matrix::Identity(n, n)));
}

TEST(DesignN0Pole, ThirdExample) {
  const testing::AugmentedTarget ex;
  const LinearSystem sys(ex.a, ex.b);
  const auto poles = reals({-2, -3});
  const DesignResult d = design_n0_pole(sys, TargetMap(ex.f), ex.reference_r, PoleSet{poles});
  EXPECT_EQ(d.mode, DesignMode::kN0Pole);
  ASSERT_TRUE(d.augmentation.has_value());
  EXPECT_TRUE(spectra_match(d.achieved_subsystem_eigs, poles, kEigTol));
  EXPECT_TRUE(spectrum_contains(d.closed_loop_eigs, poles, kEigTol));

  const Matrix fp = vstack(ex.f, ex.reference_r);
  EXPECT_TRUE(spectra_match(reduced_loop(ex.a, ex.b, ex.reference_gain, fp), poles, kEigTol));
  EXPECT_TRUE(spectrum_contains(closed_loop(ex.a, ex.b, ex.reference_gain, fp), poles, kEigTol));
}

TEST(DesignN0Pole, EmptyAugmentationMatchesRPole) {
  const testing::InvariantTarget ex;
  const LinearSystem sys(ex.a, ex.b);
  const DesignResult r_pole = design_r_pole(sys, TargetMap(ex.f), PoleSet{reals({-2})}, {}, 3);
  const DesignResult n0_pole =
      design_n0_pole(sys, TargetMap(ex.f), Matrix(0, 5), PoleSet{reals({-2})}, {}, 3);
  EXPECT_EQ(r_pole.gain, n0_pole.gain);
  EXPECT_FALSE(n0_pole.augmentation.has_value());
}

TEST(DesignN0Pole, SquareAugmentationPlacesEveryPole) {
  // [F; R] = I_3 on a controllable chain: all three closed-loop poles move.
  const Matrix a = rows({{0, 1, 0}, {0, 0, 1}, {0.5, -1, 0.2}});
  const Matrix b = rows({{0}, {0}, {1}});
  const Matrix f = rows({{1, 0, 0}});
  const LinearSystem sys(a, b);
  const Matrix r = build_augmentation(sys, TargetMap(f));
  ASSERT_EQ(r.rows(), 2);
  const auto poles = reals({-1, -2, -3});
  const DesignResult d = design_n0_pole(sys, TargetMap(f), r, PoleSet{poles});
  EXPECT_TRUE(spectra_match(d.closed_loop_eigs, poles, kEigTol));
}

TEST(DesignN0Pole, Errors) {
  const testing::AugmentedTarget ex;
  const LinearSystem sys(ex.a, ex.b);
  // [F; F] is rank deficient.
  EXPECT_THROW(design_n0_pole(sys, TargetMap(ex.f), ex.f, PoleSet{reals({-2, -3})}), InputError);
  EXPECT_THROW(design_n0_pole(sys, TargetMap(ex.f), ex.reference_r, PoleSet{reals({-2})}),
               InputError);
  // An arbitrary extra row breaks invariance.
  EXPECT_THROW(
      design_n0_pole(sys, TargetMap(ex.f), rows({{1, 0, 0, 0, 0}}), PoleSet{reals({-2, -3})}),
      ExistenceError);
}

TEST(StaticOutputFeedback, FourthExample) {
  const testing::OutputFeedback ex;
  const LinearSystem sys(ex.a, ex.b, ex.c);
  const auto poles = reals({-2, -3});
  const DesignResult d = design_static_output_feedback(sys, PoleSet{poles});
  EXPECT_EQ(d.mode, DesignMode::kStaticOutput);
  EXPECT_TRUE(spectrum_contains(d.closed_loop_eigs, poles, kEigTol));
  EXPECT_TRUE(spectra_match(d.residual_spectrum, reals({-0.5, -0.5, -1}), kEigTol));

  EXPECT_TRUE(spectra_match(reduced_loop(ex.a, ex.b, ex.reference_gain, ex.c), poles, kEigTol));
  const auto rest =
      spectrum_difference(closed_loop(ex.a, ex.b, ex.reference_gain, ex.c), poles, kEigTol);
  ASSERT_TRUE(rest.has_value());
  EXPECT_TRUE(spectra_match(*rest, reals({-0.5, -0.5, -1}), kEigTol));
}

TEST(StaticOutputFeedback, ScalarOutput) {
  const testing::ScalarOutput ex;
  const DesignResult d =
      design_static_output_feedback(LinearSystem(ex.a, ex.b, ex.c), PoleSet{reals({-3})});
  EXPECT_NEAR(d.gain(0, 0), 4.0, 1e-12);
  EXPECT_TRUE(spectrum_contains(d.closed_loop_eigs, reals({-3}), kEigTol));
  EXPECT_TRUE(spectra_match(d.residual_spectrum, reals({-1, 2}), kEigTol));
}

TEST(StaticOutputFeedback, IdentityOutputIsFullStateFeedback) {
  const Matrix a = rows({{0, 1}, {3, -1}});
  const Matrix b = rows({{0}, {1}});
  const DesignResult d = design_static_output_feedback(
      LinearSystem(a, b, Matrix(Matrix::Identity(2, 2))), PoleSet{reals({-1, -5})});
  EXPECT_TRUE(spectra_match(d.closed_loop_eigs, reals({-1, -5}), kEigTol));
}

TEST(StaticOutputFeedback, Errors) {
  const testing::OutputFeedback ex;
  EXPECT_THROW(design_static_output_feedback(LinearSystem(ex.a, ex.b), PoleSet{reals({-2, -3})}),
               InputError);
  // With C of the shared plant the invariance condition fails.
  EXPECT_THROW(design_static_output_feedback(
                   LinearSystem(testing::shared_a(), testing::shared_b(), testing::shared_c()),
                   PoleSet{reals({-2, -3})}),
               ExistenceError);
}

TEST(DesignAlgorithm, SecondExampleStopsAtStepThree) {
  const testing::InvariantTarget ex;
  const DesignOutcome out =
      run_design_algorithm(LinearSystem(ex.a, ex.b), TargetMap(ex.f), PoleSet{reals({-2})});
  ASSERT_TRUE(out.ok()) << out.failure->message;
  EXPECT_FALSE(out.failure.has_value());
  EXPECT_EQ(out.steps, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(out.result->mode, DesignMode::kRPole);
}

TEST(DesignAlgorithm, ThirdExampleAugments) {
  const testing::AugmentedTarget ex;
  const DesignOutcome out =
      run_design_algorithm(LinearSystem(ex.a, ex.b), TargetMap(ex.f), PoleSet{reals({-2, -3})});
  ASSERT_TRUE(out.ok()) << out.failure->message;
  EXPECT_EQ(out.steps, (std::vector<int>{1, 2, 4, 5}));
  ASSERT_TRUE(out.result->augmentation.has_value());
  EXPECT_LT(max_abs(*out.result->augmentation - ex.reference_r), 1e-12);
  ASSERT_TRUE(out.indices.has_value());
  EXPECT_EQ(out.indices->indices[0], 2);
  EXPECT_TRUE(spectrum_contains(out.result->closed_loop_eigs, reals({-2, -3}), kEigTol));
}

TEST(DesignAlgorithm, ExtendsPoleSetForAugmentedDesign) {
  const testing::AugmentedTarget ex;
  const LinearSystem sys(ex.a, ex.b);
  const DesignOutcome out = run_design_algorithm(sys, TargetMap(ex.f), PoleSet{reals({-2})});
  ASSERT_TRUE(out.ok());
  EXPECT_TRUE(spectra_match(out.result->requested_poles.poles, reals({-2, -3}), 1e-15));

  AlgorithmOptions options;
  options.extend_poles = [](const ComplexList&, std::size_t count) {
    return ComplexList(count, Complex(-7.0, 0.0));
  };
  const DesignOutcome custom =
      run_design_algorithm(sys, TargetMap(ex.f), PoleSet{reals({-2})}, {}, options);
  ASSERT_TRUE(custom.ok());
  EXPECT_TRUE(spectrum_contains(custom.result->closed_loop_eigs, reals({-2, -7}), kEigTol));
}

TEST(DesignAlgorithm, FirstExampleStopsAtStepOne) {
  const testing::TripleIntegrator ex;
  const DesignOutcome out =
      run_design_algorithm(LinearSystem(ex.a, ex.b), TargetMap(ex.f), PoleSet{reals({-1})});
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.failure->step, 1);
  EXPECT_EQ(out.failure->reason, FailureReason::kNotTargetOutputControllable);
  EXPECT_EQ(out.steps, (std::vector<int>{1}));
}

TEST(DesignAlgorithm, StructuredExits) {
  const testing::InvariantTarget ex2;
  const DesignOutcome wrong_count =
      run_design_algorithm(LinearSystem(ex2.a, ex2.b), TargetMap(ex2.f), PoleSet{reals({-2, -3})});
  ASSERT_FALSE(wrong_count.ok());
  EXPECT_EQ(wrong_count.failure->step, 3);
  EXPECT_EQ(wrong_count.failure->reason, FailureReason::kInvalidPoles);

  // FA^k B = 0 for every k.
  const Matrix a = rows({{-1, 0}, {0, -2}});
  const Matrix b = rows({{0}, {1}});
  const DesignOutcome not_toc =
      run_design_algorithm(LinearSystem(a, b), TargetMap(rows({{1, 0}})), PoleSet{reals({-3})});
  ASSERT_FALSE(not_toc.ok());
  EXPECT_EQ(not_toc.failure->reason, FailureReason::kNotTargetOutputControllable);

  const testing::AugmentedTarget ex3;
  const DesignOutcome too_many = run_design_algorithm(LinearSystem(ex3.a, ex3.b), TargetMap(ex3.f),
                                                      PoleSet{reals({-2, -3, -4})});
  ASSERT_FALSE(too_many.ok());
  EXPECT_EQ(too_many.failure->step, 5);
  EXPECT_EQ(too_many.failure->reason, FailureReason::kInvalidPoles);
}

TEST(DesignAlgorithm, AugmentedSubsystemUncontrollable) {
  // F = e1 on a chain x1' = x2, x2' = 0 with input entering x1 only:
  // (A, B, F) is target output controllable, rank[FA; F] = 2, R = e2, and
  // the augmented pair cannot move x2.
  const Matrix a = rows({{0, 1}, {0, 0}});
  const Matrix b = rows({{1}, {0}});
  const DesignOutcome out =
      run_design_algorithm(LinearSystem(a, b), TargetMap(rows({{1, 0}})), PoleSet{reals({-1})});
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.failure->step, 5);
  EXPECT_EQ(out.failure->reason, FailureReason::kAugmentedSubsystemUncontrollable);
}

TEST(ExtendPoles, LeftwardDefault) {
  EXPECT_TRUE(spectra_match(extend_poles_leftward(reals({-2}), 2), reals({-3, -4}), 1e-15));
  EXPECT_TRUE(spectra_match(extend_poles_leftward({}, 1), reals({-1}), 1e-15));
  EXPECT_TRUE(spectra_match(extend_poles_leftward({Complex(-1, 2), Complex(-1, -2)}, 1),
                            reals({-2}), 1e-15));
}

}  // namespace
}  // namespace targetctl
