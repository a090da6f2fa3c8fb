#pragma once

// Data-parallel inner loops behind the covariance estimators. Every kernel has
// a portable scalar reference implementation and, on x86-64, an AVX2/FMA
// variant. The variant is chosen once at startup from CPUID; the environment
// variable RDPCA_ISA=scalar forces the reference path.
//
// Matrices are column-major with leading dimension `ld` (rows are samples,
// columns are coordinates), matching Eigen's default layout.

#include <cstddef>
#include <string_view>

namespace rdpca::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;

  /// out[k] = sum_j x(k, j)^2 for k < n.
  void (*row_sq_norms)(const double* x, std::size_t n, std::size_t d, std::size_t ld,
                       double* out);

  /// out (d x d, column-major, fully populated) = sum_k w[k] x_k x_k^T, where
  /// x_k is row k. A null `w` means unit weights.
  void (*weighted_gram)(const double* x, std::size_t n, std::size_t d, std::size_t ld,
                        const double* w, double* out);

  /// out[k] = min(s[k], tau) / s[k], or 0 where s[k] == 0.
  void (*truncation_weights)(const double* s, std::size_t n, double tau, double* out);

  /// sum_k clamp(a[k] * b[k], -tau, tau).
  double (*clamped_product_sum)(const double* a, const double* b, std::size_t n, double tau);
};

const KernelTable& scalar_table();
/// Null when the build or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

bool isa_supported(Isa isa);
const KernelTable& table(Isa isa);

/// Table used by the estimators.
const KernelTable& active();
Isa active_isa();
/// Overrides the startup choice; throws std::invalid_argument if unsupported.
void set_active_isa(Isa isa);

std::string_view isa_name(Isa isa);

}  // namespace rdpca::kernels
