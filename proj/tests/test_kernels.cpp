#include "rdpca/kernels.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace rdpca {
namespace {

using kernels::Isa;
using kernels::KernelTable;

// Naive loops written independently of both kernel sets.
std::vector<double> oracle_gram(const Matrix& x, const std::vector<double>* w) {
  const Index n = x.rows(), d = x.cols();
  std::vector<double> out(static_cast<std::size_t>(d * d), 0.0);
  for (Index a = 0; a < d; ++a) {
    for (Index b = 0; b < d; ++b) {
      long double acc = 0.0L;
      for (Index k = 0; k < n; ++k) {
        const double wk = w ? (*w)[static_cast<std::size_t>(k)] : 1.0;
        acc += static_cast<long double>(wk) * x(k, a) * x(k, b);
      }
      out[static_cast<std::size_t>(a + b * d)] = static_cast<double>(acc);
    }
  }
  return out;
}

std::vector<const KernelTable*> tables() {
  std::vector<const KernelTable*> t = {&kernels::scalar_table()};
  if (kernels::avx2_table() != nullptr) t.push_back(kernels::avx2_table());
  return t;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double scale = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scale = std::max(scale, std::abs(b[i]));
    diff = std::max(diff, std::abs(a[i] - b[i]));
  }
  return scale > 0 ? diff / scale : diff;
}

TEST(Kernels, TablesReportTheirIsa) {
  EXPECT_EQ(kernels::scalar_table().isa, Isa::Scalar);
  EXPECT_TRUE(kernels::isa_supported(Isa::Scalar));
  if (kernels::avx2_table() != nullptr) EXPECT_EQ(kernels::avx2_table()->isa, Isa::Avx2);
  EXPECT_EQ(kernels::isa_name(Isa::Scalar), "scalar");
}

TEST(Kernels, SetActiveIsaRoundTrips) {
  const Isa before = kernels::active_isa();
  kernels::set_active_isa(Isa::Scalar);
  EXPECT_EQ(kernels::active().isa, Isa::Scalar);
  if (kernels::isa_supported(Isa::Avx2)) {
    kernels::set_active_isa(Isa::Avx2);
    EXPECT_EQ(kernels::active().isa, Isa::Avx2);
  } else {
    EXPECT_THROW(kernels::set_active_isa(Isa::Avx2), std::invalid_argument);
  }
  kernels::set_active_isa(before);
}

TEST(Kernels, RowSqNormsMatchOracle) {
  for (const KernelTable* t : tables()) {
    for (Index n : {1, 3, 4, 5, 17, 64}) {
      for (Index d : {1, 2, 7, 8, 33}) {
        const Matrix x = testing::random_matrix(n + 3, d, static_cast<std::uint64_t>(n * 100 + d));
        std::vector<double> out(static_cast<std::size_t>(n));
        // Leading dimension larger than n: only the first n rows are read.
        t->row_sq_norms(x.data(), static_cast<std::size_t>(n), static_cast<std::size_t>(d),
                        static_cast<std::size_t>(x.rows()), out.data());
        for (Index k = 0; k < n; ++k) {
          EXPECT_NEAR(out[static_cast<std::size_t>(k)], x.row(k).squaredNorm(),
                      1e-13 * x.row(k).squaredNorm())
              << kernels::isa_name(t->isa);
        }
      }
    }
  }
}

TEST(Kernels, WeightedGramMatchesOracle) {
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> unif(-1.0, 2.0);
  for (const KernelTable* t : tables()) {
    for (Index n : {1, 2, 5, 31}) {
      for (Index d : {1, 3, 4, 5, 9, 16, 37}) {
        const Matrix x = testing::random_matrix(n + 1, d, static_cast<std::uint64_t>(7 * n + d));
        std::vector<double> w(static_cast<std::size_t>(n));
        for (auto& v : w) v = unif(eng);
        std::vector<double> out(static_cast<std::size_t>(d * d));
        const auto sn = static_cast<std::size_t>(n);
        const auto sd = static_cast<std::size_t>(d);
        const auto ld = static_cast<std::size_t>(x.rows());
        t->weighted_gram(x.data(), sn, sd, ld, w.data(), out.data());
        EXPECT_LT(max_rel(out, oracle_gram(x.topRows(n), &w)), 1e-13) << kernels::isa_name(t->isa);
        t->weighted_gram(x.data(), sn, sd, ld, nullptr, out.data());
        EXPECT_LT(max_rel(out, oracle_gram(x.topRows(n), nullptr)), 1e-13);
        for (Index a = 0; a < d; ++a) {
          for (Index b = 0; b < d; ++b) EXPECT_EQ(out[a + b * d], out[b + a * d]);
        }
      }
    }
  }
}

TEST(Kernels, TruncationWeights) {
  const std::vector<double> s = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 1e-300, 3.0, 100.0};
  for (const KernelTable* t : tables()) {
    std::vector<double> out(s.size());
    t->truncation_weights(s.data(), s.size(), 2.0, out.data());
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double expect = s[k] == 0.0 ? 0.0 : std::min(s[k], 2.0) / s[k];
      EXPECT_DOUBLE_EQ(out[k], expect) << k;
    }
    t->truncation_weights(s.data(), s.size(), INFINITY, out.data());
    EXPECT_EQ(out[0], 0.0);
    for (std::size_t k = 1; k < s.size(); ++k) EXPECT_EQ(out[k], 1.0);
  }
}

TEST(Kernels, ClampedProductSum) {
  const Matrix ab = testing::random_matrix(23, 2, 9, 3.0);
  for (const KernelTable* t : tables()) {
    for (double tau : {0.1, 1.0, 5.0, std::numeric_limits<double>::infinity()}) {
      long double expect = 0.0L;
      for (Index k = 0; k < 23; ++k) expect += std::clamp(ab(k, 0) * ab(k, 1), -tau, tau);
      EXPECT_NEAR(t->clamped_product_sum(ab.col(0).data(), ab.col(1).data(), 23, tau),
                  static_cast<double>(expect), 1e-12);
    }
    EXPECT_EQ(t->clamped_product_sum(ab.col(0).data(), ab.col(1).data(), 0, 1.0), 0.0);
  }
}

TEST(Kernels, Avx2AgreesWithScalarOnLargeInputs) {
  if (kernels::avx2_table() == nullptr) GTEST_SKIP() << "AVX2 not available";
  const KernelTable& s = kernels::scalar_table();
  const KernelTable& v = *kernels::avx2_table();
  const Matrix x = testing::heavy_matrix(517, 61, 13);
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  std::vector<double> q1(n), q2(n);
  s.row_sq_norms(x.data(), n, d, n, q1.data());
  v.row_sq_norms(x.data(), n, d, n, q2.data());
  EXPECT_LT(max_rel(q2, q1), 1e-14);
  std::vector<double> w1(n), w2(n);
  s.truncation_weights(q1.data(), n, 40.0, w1.data());
  v.truncation_weights(q1.data(), n, 40.0, w2.data());
  EXPECT_EQ(w1, w2);
  std::vector<double> g1(d * d), g2(d * d);
  s.weighted_gram(x.data(), n, d, n, w1.data(), g1.data());
  v.weighted_gram(x.data(), n, d, n, w1.data(), g2.data());
  EXPECT_LT(max_rel(g2, g1), 1e-13);
}

}  // namespace
}  // namespace rdpca
