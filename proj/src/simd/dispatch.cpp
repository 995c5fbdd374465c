#include <atomic>
#include <cassert>
#include <stdexcept>
#include <string>

#include "spde/simd.hpp"

namespace spde::simd {
namespace {

bool cpu_has(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(SPDE_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(SPDE_BUILD_NEON)
      return true;  // mandatory on aarch64
#else
      return false;
#endif
  }
  return false;
}

Isa best_isa() {
  if (cpu_has(Isa::avx2)) return Isa::avx2;
  if (cpu_has(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

struct Active {
  std::atomic<const KernelTable*> table;
  std::atomic<Isa> isa;
};

Active& active() {
  static Active a{kernel_table(best_isa()), best_isa()};
  return a;
}

inline const KernelTable& table() { return *active().table.load(std::memory_order_relaxed); }

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

const KernelTable* kernel_table(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return &detail::scalar_table;
    case Isa::avx2:
#if defined(SPDE_BUILD_AVX2)
      return &detail::avx2_table;
#else
      return nullptr;
#endif
    case Isa::neon:
#if defined(SPDE_BUILD_NEON)
      return &detail::neon_table;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

bool isa_supported(Isa isa) { return kernel_table(isa) != nullptr && cpu_has(isa); }

Isa active_isa() { return active().isa.load(std::memory_order_relaxed); }

void select_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("ISA not supported on this machine: " + std::string(isa_name(isa)));
  }
  active().table.store(kernel_table(isa), std::memory_order_relaxed);
  active().isa.store(isa, std::memory_order_relaxed);
}

void reset_isa() { select_isa(best_isa()); }

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return table().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  table().axpy(alpha, x.data(), y.data(), x.size());
}

double gather_dot(std::span<const double> values, std::span<const std::int32_t> index,
                  const double* x) {
  assert(values.size() == index.size());
  return table().gather_dot(values.data(), index.data(), x, values.size());
}

void scatter_axpy(double alpha, std::span<const double> values,
                  std::span<const std::int32_t> index, double* y) {
  assert(values.size() == index.size());
  table().scatter_axpy(alpha, values.data(), index.data(), y, values.size());
}

}  // namespace spde::simd
