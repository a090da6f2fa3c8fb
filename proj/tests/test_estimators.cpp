#include "rdpca/estimators.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace rdpca {
namespace {

using testing::heavy_matrix;
using testing::random_matrix;
using testing::rel_diff;

Matrix naive_sample_cov(const Matrix& x) {
  return x.transpose() * x / static_cast<double>(x.rows());
}

EstimatorSpec spec_of(EstimatorKind kind) {
  EstimatorSpec s;
  s.kind = kind;
  return s;
}

TEST(Names, RoundTrip) {
  for (auto k : {EstimatorKind::Sample, EstimatorKind::Shrinkage, EstimatorKind::Truncation,
                 EstimatorKind::ElementwiseTruncation}) {
    EXPECT_EQ(parse_estimator_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_estimator_kind("median"), InvalidInput);
}

TEST(Spec, ValidateRejectsOutOfDomain) {
  EstimatorSpec s;
  s.alpha = 1.0;
  EXPECT_THROW(s.validate(), InvalidInput);
  s.alpha = 2.5;
  EXPECT_THROW(s.validate(), InvalidInput);
  s = EstimatorSpec{};
  s.tau = -1.0;
  EXPECT_THROW(s.validate(), InvalidInput);
  s = EstimatorSpec{};
  s.theta = 0.0;
  EXPECT_THROW(s.validate(), InvalidInput);
  s = EstimatorSpec{};
  s.delta = 1.0;
  EXPECT_THROW(s.validate(), InvalidInput);
  s = EstimatorSpec{};
  s.theta_scale = 0.0;
  EXPECT_THROW(s.validate(), InvalidInput);
}

TEST(CAlpha, KnownValues) {
  EXPECT_DOUBLE_EQ(c_alpha(2.0), 0.5);
  // alpha = 1.5: max(1/3, sqrt(1/3)).
  EXPECT_NEAR(c_alpha(1.5), std::sqrt(1.0 / 3.0), 1e-15);
  // Branches meet where (a-1)^2 = a(2-a), i.e. a = 1 + 1/sqrt(2).
  const double a = 1.0 + 1.0 / std::sqrt(2.0);
  EXPECT_NEAR((a - 1.0) / a, std::sqrt((2.0 - a) / a), 1e-12);
  EXPECT_NEAR(c_alpha(a), (a - 1.0) / a, 1e-12);
}

TEST(PsiAlpha, ClosedFormOddAndMonotone) {
  EXPECT_EQ(psi_alpha(0.0, 2.0), 0.0);
  EXPECT_NEAR(psi_alpha(2.0, 2.0), std::log(1.0 + 2.0 + 0.5 * 4.0), 1e-15);
  EXPECT_NEAR(psi_alpha(-2.0, 2.0), -std::log(1.0 + 2.0 + 0.5 * 4.0), 1e-15);
  for (double alpha : {1.2, 1.5, 2.0}) {
    double prev = -std::numeric_limits<double>::infinity();
    for (double x = -50.0; x <= 50.0; x += 0.37) {
      const double v = psi_alpha(x, alpha);
      EXPECT_GE(v, prev);
      EXPECT_DOUBLE_EQ(psi_alpha(-x, alpha), -v);
      // Influence-function bounds: -log(1 - x + c|x|^a) <= psi(x) <= log(1 + x + c|x|^a).
      const double c = c_alpha(alpha);
      const double ax = std::pow(std::abs(x), alpha);
      EXPECT_LE(v, std::log(1.0 + x + c * ax) + 1e-12);
      EXPECT_GE(v, -std::log(1.0 - x + c * ax) - 1e-12);
      prev = v;
    }
  }
  // Near zero psi(x) ~ x.
  EXPECT_NEAR(psi_alpha(1e-9, 2.0) / 1e-9, 1.0, 1e-8);
}

TEST(PsiTau, Clamp) {
  EXPECT_EQ(psi_tau(3.0, 2.0), 2.0);
  EXPECT_EQ(psi_tau(-3.0, 2.0), -2.0);
  EXPECT_EQ(psi_tau(1.5, 2.0), 1.5);
  EXPECT_EQ(psi_tau(1e300, std::numeric_limits<double>::infinity()), 1e300);
}

TEST(SampleCov, MatchesNaive) {
  const Matrix x = random_matrix(40, 6, 1);
  EXPECT_LT(rel_diff(sample_cov(x).matrix(), naive_sample_cov(x)), 1e-14);
  EXPECT_THROW(sample_cov(Matrix(0, 3)), InvalidInput);
}

TEST(TruncationCov, LargeTauEqualsSampleCov) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Matrix x = heavy_matrix(60, 5, seed);
    EstimatorSpec s = spec_of(EstimatorKind::Truncation);
    s.tau = x.rowwise().squaredNorm().maxCoeff();
    EXPECT_LT(rel_diff(truncation_cov(x, s).matrix(), sample_cov(x).matrix()), 1e-12);
    s.tau = 1e300;
    EXPECT_LT(rel_diff(truncation_cov(x, s).matrix(), sample_cov(x).matrix()), 1e-12);
  }
}

TEST(TruncationCov, TwoSampleHandOracle) {
  // x1 = (3, 4) (|x|^2 = 25), x2 = (1, 0) (|x|^2 = 1), tau = 5:
  // (1/2) [5 * x1 x1^T / 25 + x2 x2^T].
  Matrix x(2, 2);
  x << 3.0, 4.0, 1.0, 0.0;
  EstimatorSpec s = spec_of(EstimatorKind::Truncation);
  s.tau = 5.0;
  Matrix expect(2, 2);
  expect << 0.5 * (9.0 / 5.0 + 1.0), 0.5 * 12.0 / 5.0, 0.5 * 12.0 / 5.0, 0.5 * 16.0 / 5.0;
  EXPECT_LT(rel_diff(truncation_cov(x, s).matrix(), expect), 1e-15);
  EXPECT_THROW(truncation_cov(x, spec_of(EstimatorKind::Truncation)), InvalidInput);
}

TEST(TruncationCov, ZeroRowsContributeNothing) {
  Matrix x = random_matrix(10, 3, 4);
  Matrix padded(12, 3);
  padded << x, Matrix::Zero(2, 3);
  EstimatorSpec s = spec_of(EstimatorKind::Truncation);
  s.tau = 2.0;
  EXPECT_LT(rel_diff(truncation_cov(padded, s).matrix() * 12.0, truncation_cov(x, s).matrix() * 10.0),
            1e-14);
}

TEST(ShrinkageCov, TinyThetaApproachesSampleCov) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Matrix x = heavy_matrix(80, 6, seed);
    EstimatorSpec s = spec_of(EstimatorKind::Shrinkage);
    s.theta = 1e-12;
    EXPECT_LT(rel_diff(shrinkage_cov(x, s).matrix(), sample_cov(x).matrix()), 1e-6);
  }
}

TEST(ShrinkageCov, HandOracle) {
  // Single sample x = (1, 2), |x|^2 = 5, theta = 0.2: psi(1) / 1 * x x^T with
  // psi(1) = log(1 + 1 + 0.5).
  Matrix x(1, 2);
  x << 1.0, 2.0;
  EstimatorSpec s = spec_of(EstimatorKind::Shrinkage);
  s.theta = 0.2;
  const double w = std::log(2.5);
  Matrix expect(2, 2);
  expect << w, 2.0 * w, 2.0 * w, 4.0 * w;
  EXPECT_LT(rel_diff(shrinkage_cov(x, s).matrix(), expect), 1e-15);
}

TEST(ShrinkageCov, DampsOutlierMoreThanSample) {
  // theta tuned on the clean rows; the contaminated row then sits far out on psi.
  Matrix x = random_matrix(100, 4, 8);
  EstimatorSpec s = spec_of(EstimatorKind::Shrinkage);
  s.theta = tune_theta(x);
  x.row(0) *= 1e3;
  EXPECT_LT(spectral_norm(shrinkage_cov(x, s)), 0.1 * spectral_norm(sample_cov(x)));
}

TEST(MomentStats, HandOracle) {
  // Two samples (1, 0) and (0, 2): (1/2) sum |x|^2 x x^T = diag(1/2, 8), so
  // v_hat = sqrt(8) at alpha = 2.
  Matrix x(2, 2);
  x << 1.0, 0.0, 0.0, 2.0;
  EXPECT_NEAR(moment_stats(x).v_hat, std::sqrt(8.0), 1e-14);
  EXPECT_DOUBLE_EQ(moment_stats(x).c_alpha, 0.5);
  // Unsquared: (1/2) sum |x| x x^T = diag(1/2, 4).
  EXPECT_NEAR(moment_stats(x, 2.0, true).v_hat, 2.0, 1e-14);
  // alpha = 1.5: (1/2) sum |x|^1 x x^T = diag(1/2, 4), v = 4^(2/3).
  EXPECT_NEAR(moment_stats(x, 1.5).v_hat, std::pow(4.0, 1.0 / 1.5), 1e-13);
  EXPECT_NEAR(tune_theta(x, 2.0, 3.0), 3.0 / (std::sqrt(8.0) * std::sqrt(2.0)), 1e-14);
}

TEST(TuneTheta, DegenerateData) {
  EXPECT_THROW(tune_theta(Matrix::Zero(5, 3)), DegenerateMoment);
  EXPECT_THROW(tune_theta(random_matrix(5, 3, 1), 2.0, -1.0), InvalidInput);
}

TEST(Elementwise, ThresholdFormula) {
  const Matrix x = heavy_matrix(50, 4, 3);
  const double delta = 0.1, alpha = 1.5;
  const Matrix tau = elementwise_thresholds(x, delta, alpha);
  for (Index k = 0; k < 4; ++k) {
    for (Index s = 0; s < 4; ++s) {
      double m = 0.0;
      for (Index i = 0; i < 50; ++i) m += std::pow(std::abs(x(i, k) * x(i, s)), alpha);
      m /= 50.0;
      const double expect = std::pow(50.0 * m / (2.0 * std::log(4.0) - std::log(delta)), 1.0 / alpha);
      EXPECT_NEAR(tau(k, s), expect, 1e-12 * expect);
    }
  }
}

TEST(Elementwise, MatchesDirectClampSum) {
  const Matrix x = heavy_matrix(70, 5, 6);
  const Matrix tau = elementwise_thresholds(x, 0.05, 2.0);
  const SymMatrix est = elementwise_trunc_cov(x, 0.05, 2.0);
  for (Index k = 0; k < 5; ++k) {
    for (Index s = 0; s < 5; ++s) {
      double acc = 0.0;
      for (Index i = 0; i < 70; ++i) acc += psi_tau(x(i, k) * x(i, s), tau(k, s));
      EXPECT_NEAR(est(k, s), acc / 70.0, 1e-13);
    }
  }
}

TEST(Elementwise, NoClampingGivesSampleCov) {
  // With n large relative to log(d^2/delta) every product stays below its
  // threshold when the entries are bounded: use +-1 data.
  Matrix x(64, 3);
  for (Index i = 0; i < 64; ++i) {
    for (Index j = 0; j < 3; ++j) x(i, j) = ((i >> j) & 1) ? 1.0 : -1.0;
  }
  EXPECT_LT(rel_diff(elementwise_trunc_cov(x, 0.1, 2.0).matrix(), naive_sample_cov(x)), 1e-15);
}

TEST(Elementwise, RejectsBadParameters) {
  const Matrix x = random_matrix(10, 3, 1);
  EXPECT_THROW(elementwise_trunc_cov(x, 0.0, 2.0), InvalidInput);
  EXPECT_THROW(elementwise_trunc_cov(x, 0.1, 3.0), InvalidInput);
  EXPECT_THROW(elementwise_trunc_cov(x.topRows(1), 0.1, 2.0), InvalidInput);
}

TEST(Estimate, ResolvesParameters) {
  const Matrix x = heavy_matrix(200, 5, 12);
  const Estimate sh = estimate(x, spec_of(EstimatorKind::Shrinkage));
  ASSERT_TRUE(sh.resolved.theta.has_value());
  EXPECT_NEAR(*sh.resolved.theta, tune_theta(x), 1e-15);
  EXPECT_FALSE(sh.tau_fit.has_value());

  const Estimate tr = estimate(x, spec_of(EstimatorKind::Truncation));
  ASSERT_TRUE(tr.tau_fit.has_value());
  ASSERT_TRUE(tr.resolved.tau.has_value());
  EXPECT_EQ(*tr.resolved.tau, tr.tau_fit->tau);
  EstimatorSpec fixed = spec_of(EstimatorKind::Truncation);
  fixed.tau = tr.tau_fit->tau;
  EXPECT_LT(rel_diff(tr.cov.matrix(), truncation_cov(x, fixed).matrix()), 1e-15);

  const Estimate sa = estimate(x, spec_of(EstimatorKind::Sample));
  EXPECT_LT(rel_diff(sa.cov.matrix(), naive_sample_cov(x)), 1e-14);
  EXPECT_NO_THROW(estimate(x, spec_of(EstimatorKind::ElementwiseTruncation)));
}

TEST(Estimate, RejectsNonFinite) {
  Matrix x = random_matrix(10, 3, 2);
  x(3, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(estimate(x, spec_of(EstimatorKind::Sample)), InvalidInput);
  EXPECT_THROW(estimate(x, spec_of(EstimatorKind::Truncation)), InvalidInput);
}

TEST(Estimate, PermutationOfRowsChangesLittle) {
  const Matrix x = heavy_matrix(300, 6, 14);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(300);
  perm.setIdentity();
  std::reverse(perm.indices().data(), perm.indices().data() + 300);
  const Matrix y = perm * x;
  for (auto k : {EstimatorKind::Sample, EstimatorKind::Shrinkage, EstimatorKind::Truncation,
                 EstimatorKind::ElementwiseTruncation}) {
    EXPECT_LT(rel_diff(estimate(y, spec_of(k)).cov.matrix(), estimate(x, spec_of(k)).cov.matrix()), 1e-12)
        << to_string(k);
  }
}

}  // namespace
}  // namespace rdpca
