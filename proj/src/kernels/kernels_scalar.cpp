#include "rdpca/kernels.hpp"

#include <algorithm>

namespace rdpca::kernels {

namespace {

void row_sq_norms(const double* x, std::size_t n, std::size_t d, std::size_t ld, double* out) {
  std::fill(out, out + n, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    const double* col = x + j * ld;
    for (std::size_t k = 0; k < n; ++k) out[k] += col[k] * col[k];
  }
}

void weighted_gram(const double* x, std::size_t n, std::size_t d, std::size_t ld,
                   const double* w, double* out) {
  for (std::size_t j = 0; j < d; ++j) {
    const double* xj = x + j * ld;
    for (std::size_t i = 0; i <= j; ++i) {
      const double* xi = x + i * ld;
      double acc = 0.0;
      if (w != nullptr) {
        for (std::size_t k = 0; k < n; ++k) acc += w[k] * xi[k] * xj[k];
      } else {
        for (std::size_t k = 0; k < n; ++k) acc += xi[k] * xj[k];
      }
      out[i + j * d] = acc;
      out[j + i * d] = acc;
    }
  }
}

void truncation_weights(const double* s, std::size_t n, double tau, double* out) {
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = s[k] > 0.0 ? std::min(s[k], tau) / s[k] : 0.0;
  }
}

double clamped_product_sum(const double* a, const double* b, std::size_t n, double tau) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += std::clamp(a[k] * b[k], -tau, tau);
  return acc;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{Isa::Scalar, row_sq_norms, weighted_gram, truncation_weights,
                             clamped_product_sum};
  return t;
}

}  // namespace rdpca::kernels
