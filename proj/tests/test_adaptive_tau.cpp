#include "rdpca/estimators.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace rdpca {
namespace {

using testing::adaptive_lhs_oracle;
using testing::heavy_matrix;

double rhs_of(const Matrix& x) {
  return std::log(2.0 * static_cast<double>(x.cols())) + std::log(static_cast<double>(x.rows()));
}

TEST(AdaptiveTau, RootSatisfiesEquation) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Matrix x = heavy_matrix(300, 10, seed);
    const TauFit fit = tune_tau_adaptive(x);
    ASSERT_TRUE(fit.root_found) << seed;
    const double rhs = rhs_of(x);
    EXPECT_DOUBLE_EQ(fit.rhs, rhs);
    EXPECT_LE(std::abs(adaptive_lhs_oracle(x, fit.tau) - rhs), 1e-6 * rhs) << seed;
    EXPECT_LE(fit.residual, 1e-6);
    EXPECT_LE(fit.iterations, 200);
  }
}

TEST(AdaptiveTau, LhsNonincreasingOnGrid) {
  const Matrix x = heavy_matrix(120, 6, 3);
  const double smax = x.rowwise().squaredNorm().maxCoeff();
  double prev = std::numeric_limits<double>::infinity();
  for (double tau = smax * 1e-4; tau < smax * 10.0; tau *= 1.15) {
    const double v = adaptive_lhs_oracle(x, tau);
    EXPECT_LE(v, prev * (1.0 + 1e-12));
    prev = v;
  }
}

TEST(AdaptiveTau, NoRootWhenFlatRegionIsBelowRhs) {
  // n = 2 unit directions: LHS <= 2 everywhere while rhs = log(20) + log(2).
  Matrix x = Matrix::Zero(2, 10);
  x(0, 0) = 3.0;
  x(1, 1) = 0.5;
  const TauFit fit = tune_tau_adaptive(x);
  EXPECT_FALSE(fit.root_found);
  EXPECT_GT(fit.residual, 0.0);
  EXPECT_NEAR(fit.tau, 0.25 * 1e-6, 1e-18);
}

TEST(AdaptiveTau, ClosedFormAboveLargestNorm) {
  // Rows +-e1, +-e2 with unit norms: for tau >= 1 the LHS is 100 / tau^2.
  Matrix x = Matrix::Zero(200, 2);
  for (Index i = 0; i < 200; ++i) x(i, i % 2) = (i % 4 < 2) ? 1.0 : -1.0;
  const TauFit fit = tune_tau_adaptive(x);
  const double rhs = std::log(4.0) + std::log(200.0);
  ASSERT_TRUE(fit.root_found);
  EXPECT_NEAR(fit.tau, std::sqrt(100.0 / rhs), 1e-12);
}

TEST(AdaptiveTau, RootInsideTiedStatistics) {
  // Many equal norms plus a few large ones.
  Matrix x = heavy_matrix(80, 4, 9);
  for (Index i = 0; i < 40; ++i) x.row(i) = x.row(i).normalized() * 2.0;
  const TauFit fit = tune_tau_adaptive(x);
  ASSERT_TRUE(fit.root_found);
  EXPECT_LE(std::abs(adaptive_lhs_oracle(x, fit.tau) - rhs_of(x)), 1e-6 * rhs_of(x));
}

TEST(AdaptiveTau, RandomDatasets) {
  std::mt19937_64 eng(2024);
  std::uniform_int_distribution<int> dd(1, 50), nn(2, 500);
  for (int trial = 0; trial < 40; ++trial) {
    const Index d = dd(eng);
    const Index n = nn(eng);
    const Matrix x = heavy_matrix(n, d, 1000 + static_cast<std::uint64_t>(trial));
    const TauFit fit = tune_tau_adaptive(x);
    if (!fit.root_found) {
      // Only legitimate when even fully clamped samples cannot reach the rhs.
      const double smin = x.rowwise().squaredNorm().minCoeff();
      EXPECT_LT(adaptive_lhs_oracle(x, smin), rhs_of(x)) << "trial " << trial;
      continue;
    }
    EXPECT_LE(std::abs(adaptive_lhs_oracle(x, fit.tau) - rhs_of(x)), 1e-6 * rhs_of(x))
        << "trial " << trial << " n=" << n << " d=" << d;
  }
}

TEST(AdaptiveTau, ScaleEquivariant) {
  const Matrix x = heavy_matrix(150, 5, 21);
  const TauFit a = tune_tau_adaptive(x);
  const TauFit b = tune_tau_adaptive(3.0 * x);
  EXPECT_NEAR(b.tau / a.tau, 9.0, 1e-5);
}

TEST(AdaptiveTau, Errors) {
  EXPECT_THROW(tune_tau_adaptive(Matrix::Zero(5, 3)), DegenerateMoment);
  EXPECT_THROW(tune_tau_adaptive(heavy_matrix(1, 3, 1)), InvalidInput);
  EXPECT_THROW(detail::solve_adaptive_tau(heavy_matrix(4, 2, 1), Vector::Ones(3), 1.0), InvalidInput);
  EXPECT_THROW(detail::solve_adaptive_tau(heavy_matrix(4, 2, 1), Vector::Ones(4), 0.0), InvalidInput);
}

TEST(AdaptiveTau, ZeroRowsIgnored) {
  Matrix x = heavy_matrix(100, 4, 30);
  Matrix padded(103, 4);
  padded << x, Matrix::Zero(3, 4);
  const TauFit fit = tune_tau_adaptive(padded);
  ASSERT_TRUE(fit.root_found);
  EXPECT_LE(std::abs(adaptive_lhs_oracle(padded, fit.tau) - rhs_of(padded)), 1e-6 * rhs_of(padded));
}

}  // namespace
}  // namespace rdpca
