// Compiled with -mavx2 -mfma. Only reached after a CPUID check in dispatch.cpp.

#include "rdpca/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <vector>

namespace rdpca::kernels {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void row_sq_norms(const double* x, std::size_t n, std::size_t d, std::size_t ld, double* out) {
  std::fill(out, out + n, 0.0);
  const std::size_t nv = n - n % 4;
  for (std::size_t j = 0; j < d; ++j) {
    const double* col = x + j * ld;
    std::size_t k = 0;
    for (; k < nv; k += 4) {
      const __m256d c = _mm256_loadu_pd(col + k);
      _mm256_storeu_pd(out + k, _mm256_fmadd_pd(c, c, _mm256_loadu_pd(out + k)));
    }
    for (; k < n; ++k) out[k] += col[k] * col[k];
  }
}

// Dot products of one weighted column against four plain columns at once.
inline void dot_1x4(const double* a, const double* b0, const double* b1, const double* b2,
                    const double* b3, std::size_t n, double* res) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  const std::size_t nv = n - n % 4;
  std::size_t k = 0;
  for (; k < nv; k += 4) {
    const __m256d av = _mm256_loadu_pd(a + k);
    acc0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b0 + k), acc0);
    acc1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b1 + k), acc1);
    acc2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b2 + k), acc2);
    acc3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b3 + k), acc3);
  }
  double r0 = hsum(acc0), r1 = hsum(acc1), r2 = hsum(acc2), r3 = hsum(acc3);
  for (; k < n; ++k) {
    r0 += a[k] * b0[k];
    r1 += a[k] * b1[k];
    r2 += a[k] * b2[k];
    r3 += a[k] * b3[k];
  }
  res[0] = r0;
  res[1] = r1;
  res[2] = r2;
  res[3] = r3;
}

inline double dot_1x1(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t nv = n - n % 4;
  std::size_t k = 0;
  for (; k < nv; k += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc);
  }
  double r = hsum(acc);
  for (; k < n; ++k) r += a[k] * b[k];
  return r;
}

void weighted_gram(const double* x, std::size_t n, std::size_t d, std::size_t ld,
                   const double* w, double* out) {
  std::vector<double> scaled;
  const double* wx = x;
  std::size_t wld = ld;
  if (w != nullptr) {
    scaled.resize(n * d);
    const std::size_t nv = n - n % 4;
    for (std::size_t j = 0; j < d; ++j) {
      const double* col = x + j * ld;
      double* dst = scaled.data() + j * n;
      std::size_t k = 0;
      for (; k < nv; k += 4) {
        _mm256_storeu_pd(dst + k, _mm256_mul_pd(_mm256_loadu_pd(w + k), _mm256_loadu_pd(col + k)));
      }
      for (; k < n; ++k) dst[k] = w[k] * col[k];
    }
    wx = scaled.data();
    wld = n;
  }
  // Column j of the output: entries i <= j, computed as <x_j, w * x_i> in
  // blocks of four i's sharing the loads of x_j.
  for (std::size_t j = 0; j < d; ++j) {
    const double* xj_w = wx + j * wld;
    std::size_t i = 0;
    double res[4];
    for (; i + 4 <= j + 1; i += 4) {
      dot_1x4(xj_w, x + i * ld, x + (i + 1) * ld, x + (i + 2) * ld, x + (i + 3) * ld, n, res);
      for (std::size_t t = 0; t < 4; ++t) {
        out[(i + t) + j * d] = res[t];
        out[j + (i + t) * d] = res[t];
      }
    }
    for (; i <= j; ++i) {
      const double r = dot_1x1(xj_w, x + i * ld, n);
      out[i + j * d] = r;
      out[j + i * d] = r;
    }
  }
}

void truncation_weights(const double* s, std::size_t n, double tau, double* out) {
  const __m256d tv = _mm256_set1_pd(tau);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const std::size_t nv = n - n % 4;
  std::size_t k = 0;
  for (; k < nv; k += 4) {
    const __m256d sv = _mm256_loadu_pd(s + k);
    const __m256d pos = _mm256_cmp_pd(sv, zero, _CMP_GT_OQ);
    // Divide by 1 in the masked-off lanes, then zero them.
    const __m256d denom = _mm256_blendv_pd(one, sv, pos);
    const __m256d q = _mm256_div_pd(_mm256_min_pd(sv, tv), denom);
    _mm256_storeu_pd(out + k, _mm256_and_pd(q, pos));
  }
  for (; k < n; ++k) out[k] = s[k] > 0.0 ? std::min(s[k], tau) / s[k] : 0.0;
}

double clamped_product_sum(const double* a, const double* b, std::size_t n, double tau) {
  const __m256d hi = _mm256_set1_pd(tau);
  const __m256d lo = _mm256_set1_pd(-tau);
  __m256d acc = _mm256_setzero_pd();
  const std::size_t nv = n - n % 4;
  std::size_t k = 0;
  for (; k < nv; k += 4) {
    const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
    acc = _mm256_add_pd(acc, _mm256_max_pd(lo, _mm256_min_pd(p, hi)));
  }
  double r = hsum(acc);
  for (; k < n; ++k) r += std::clamp(a[k] * b[k], -tau, tau);
  return r;
}

}  // namespace

const KernelTable& avx2_table_impl() {
  static const KernelTable t{Isa::Avx2, row_sq_norms, weighted_gram, truncation_weights,
                             clamped_product_sum};
  return t;
}

}  // namespace rdpca::kernels
