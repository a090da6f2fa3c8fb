#include "rdpca/stein.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

namespace rdpca {
namespace {

// (1/n) sum psi_tau(y_i (x_i x_i^T - I)) through a full eigendecomposition of
// every term.
Matrix generic_stein(const SteinData& data, double tau) {
  const Index d = data.x.cols();
  Matrix acc = Matrix::Zero(d, d);
  for (Index i = 0; i < data.x.rows(); ++i) {
    const Vector xi = data.x.row(i).transpose();
    const SymMatrix a(data.y[i] * (xi * xi.transpose() - Matrix::Identity(d, d)));
    acc += matrix_fn(a, [tau](double v) { return psi_tau(v, tau); }).matrix();
  }
  return acc / static_cast<double>(data.x.rows());
}

SteinData random_stein(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::student_t_distribution<double> t(2.5);
  SteinData data{Vector(n), testing::random_matrix(n, d, seed + 1)};
  for (Index i = 0; i < n; ++i) data.y[i] = t(eng) * 3.0;
  return data;
}

TEST(Stein, ClosedFormMatchesGenericPath) {
  std::mt19937_64 eng(77);
  std::uniform_int_distribution<int> dd(1, 8), nn(1, 12);
  std::uniform_real_distribution<double> tt(0.05, 20.0);
  for (int trial = 0; trial < 100; ++trial) {
    const SteinData data = random_stein(nn(eng), dd(eng), 500 + static_cast<std::uint64_t>(trial));
    const double tau = tt(eng);
    const SteinEstimate est = stein_trunc_estimator(data, tau);
    const Matrix expect = generic_stein(data, tau);
    EXPECT_LT((est.sigma.matrix() - expect).cwiseAbs().maxCoeff(), 1e-10) << "trial " << trial;
    EXPECT_EQ(est.tau, tau);
    EXPECT_FALSE(est.tau_fit.has_value());
  }
}

TEST(Stein, InfiniteTauIsPlainAverage) {
  const SteinData data = random_stein(50, 4, 3);
  const SteinEstimate est = stein_trunc_estimator(data, std::numeric_limits<double>::infinity());
  Matrix expect = Matrix::Zero(4, 4);
  for (Index i = 0; i < 50; ++i) {
    const Vector xi = data.x.row(i).transpose();
    expect += data.y[i] * (xi * xi.transpose() - Matrix::Identity(4, 4));
  }
  expect /= 50.0;
  EXPECT_LT((est.sigma.matrix() - expect).norm(), 1e-12 * expect.norm());
}

TEST(Stein, ZeroCovariateRow) {
  SteinData data = random_stein(5, 3, 4);
  data.x.row(2).setZero();
  EXPECT_LT((stein_trunc_estimator(data, 1.5).sigma.matrix() - generic_stein(data, 1.5)).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(Stein, AutoTauSolvesItsEquation) {
  const SteinData data = random_stein(300, 6, 9);
  const SteinEstimate est = stein_trunc_estimator(data, std::nullopt);
  ASSERT_TRUE(est.tau_fit.has_value());
  ASSERT_TRUE(est.tau_fit->root_found);
  EXPECT_EQ(est.tau, est.tau_fit->tau);
  // LHS: (1/tau^2) sum min(|A_i|_2, tau)^2 with |A_i|_2 the largest |eigenvalue| of A_i.
  const double tau = est.tau;
  double lhs = 0.0;
  for (Index i = 0; i < 300; ++i) {
    const Vector xi = data.x.row(i).transpose();
    const Matrix a = data.y[i] * (xi * xi.transpose() - Matrix::Identity(6, 6));
    const double norm = Eigen::SelfAdjointEigenSolver<Matrix>(a).eigenvalues().cwiseAbs().maxCoeff();
    lhs += std::pow(std::min(norm, tau) / tau, 2);
  }
  const double rhs = std::log(12.0) + std::log(300.0);
  EXPECT_LE(std::abs(lhs - rhs), 1e-6 * rhs);
}

TEST(Stein, AutoTauClosedFormCases) {
  // Four samples with |A_i|_2 = |y_i| (x = 0 rows): rhs = log 2 + log 4 ~ 2.08, so
  // two clamped samples leave 0.08 for (1 + 4) / tau^2.
  SteinData data{Vector(4), Matrix::Zero(4, 1)};
  data.y << 1.0, -2.0, 30.0, 40.0;
  const TauFit fit = tune_tau_stein(data);
  ASSERT_TRUE(fit.root_found);
  const double rhs = std::log(2.0) + std::log(4.0);
  EXPECT_NEAR(fit.tau, std::sqrt(5.0 / (rhs - 2.0)), 1e-12);
  // n = 2, d = 1: rhs = log 4 < 2.
  SteinData few{Vector(2), Matrix::Zero(2, 1)};
  few.y << 3.0, 4.0;
  const TauFit two = tune_tau_stein(few);
  ASSERT_TRUE(two.root_found);
  EXPECT_NEAR(std::pow(std::min(3.0, two.tau) / two.tau, 2) + std::pow(std::min(4.0, two.tau) / two.tau, 2),
              std::log(4.0), 1e-12);
  // d = 40, n = 2: rhs = log 80 + log 2 > 2 = p, no root.
  SteinData wide{Vector::Ones(2), testing::random_matrix(2, 40, 3)};
  EXPECT_FALSE(tune_tau_stein(wide).root_found);
}

TEST(Stein, RecoversDirectionOnCleanData) {
  // y = <beta, x>^2: E[y (x x^T - I)] = 2 beta beta^T.
  const Index d = 5, n = 20000;
  const Matrix x = testing::random_matrix(n, d, 42);
  Vector beta = Vector::Ones(d).normalized();
  SteinData data{Vector(n), x};
  for (Index i = 0; i < n; ++i) {
    const double z = x.row(i).dot(beta);
    data.y[i] = z * z;
  }
  const Vector b = beta_from_stein(stein_trunc_estimator(data, std::numeric_limits<double>::infinity()).sigma);
  EXPECT_LT(beta_error(b, beta), 0.1);
}

TEST(Stein, BetaFromSteinPicksLargestMagnitude) {
  Vector d(3);
  d << 1.0, 0.5, -4.0;
  const Vector b = beta_from_stein(SymMatrix::diagonal(d));
  EXPECT_NEAR(std::abs(b[2]), 1.0, 1e-15);
  d << 4.0, 0.5, -1.0;
  EXPECT_NEAR(std::abs(beta_from_stein(SymMatrix::diagonal(d))[0]), 1.0, 1e-15);
}

TEST(Stein, BetaErrorSignInvariant) {
  Vector a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 1.0;
  EXPECT_NEAR(beta_error(a, a), 0.0, 1e-15);
  EXPECT_NEAR(beta_error(-3.0 * a, a), 0.0, 1e-15);
  EXPECT_NEAR(beta_error(b, a), std::sqrt(2.0), 1e-15);
  EXPECT_THROW(beta_error(Vector::Zero(2), a), InvalidInput);
  EXPECT_THROW(beta_error(Vector::Ones(3), a), InvalidInput);
}

TEST(Stein, InputValidation) {
  SteinData bad{Vector::Ones(3), Matrix::Ones(4, 2)};
  EXPECT_THROW(stein_trunc_estimator(bad, 1.0), InvalidInput);
  SteinData ok{Vector::Ones(4), Matrix::Ones(4, 2)};
  EXPECT_THROW(stein_trunc_estimator(ok, 0.0), InvalidInput);
  SteinData zeros{Vector::Zero(4), Matrix::Ones(4, 2)};
  EXPECT_THROW(tune_tau_stein(zeros), DegenerateMoment);
}

}  // namespace
}  // namespace rdpca
