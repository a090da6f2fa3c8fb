#include "rdpca/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace rdpca::kernels {

#if defined(RDPCA_HAVE_AVX2)
const KernelTable& avx2_table_impl();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(RDPCA_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa startup_isa() {
  if (const char* env = std::getenv("RDPCA_ISA")) {
    if (std::string(env) == "scalar") return Isa::Scalar;
  }
  return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{startup_isa()};
  return isa;
}

}  // namespace

const KernelTable* avx2_table() {
#if defined(RDPCA_HAVE_AVX2)
  if (cpu_has_avx2()) return &avx2_table_impl();
#endif
  return nullptr;
}

bool isa_supported(Isa isa) { return isa == Isa::Scalar || avx2_table() != nullptr; }

const KernelTable& table(Isa isa) {
  if (isa == Isa::Avx2) {
    if (const KernelTable* t = avx2_table()) return *t;
    throw std::invalid_argument("AVX2 kernels are not available on this machine");
  }
  return scalar_table();
}

const KernelTable& active() { return table(current().load(std::memory_order_relaxed)); }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("requested ISA is not supported: " + std::string(isa_name(isa)));
  }
  current().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

}  // namespace rdpca::kernels
