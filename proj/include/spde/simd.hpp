#pragma once

// Vector kernels behind the sparse solves and matrix-vector products.
//
// Every kernel has a scalar reference implementation. Wider variants (AVX2+FMA
// on x86-64, NEON on aarch64) are compiled into separate translation units and
// chosen once at startup from what the CPU reports. Results of the wide
// variants differ from the scalar ones only by summation order; for a fixed
// selected ISA every kernel is bitwise deterministic.

#include <cstdint>
#include <span>
#include <string_view>

namespace spde::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

/// True when the variant was compiled in and the running CPU supports it.
bool isa_supported(Isa isa);

/// The ISA whose kernels the free functions below dispatch to.
Isa active_isa();

/// Overrides the runtime choice. Throws std::invalid_argument when the
/// variant is not supported on this machine.
void select_isa(Isa isa);

/// Restores the automatic (widest supported) choice.
void reset_isa();

double dot(std::span<const double> a, std::span<const double> b);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// sum_k values[k] * x[index[k]]
double gather_dot(std::span<const double> values, std::span<const std::int32_t> index,
                  const double* x);

// y[index[k]] += alpha * values[k]; indices must be distinct.
void scatter_axpy(double alpha, std::span<const double> values,
                  std::span<const std::int32_t> index, double* y);

/// Function table for one ISA. Exposed so the equivalence tests can call a
/// specific variant directly.
struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*gather_dot)(const double* values, const std::int32_t* index, const double* x,
                       std::size_t n);
  void (*scatter_axpy)(double alpha, const double* values, const std::int32_t* index,
                       double* y, std::size_t n);
};

/// Returns nullptr when the variant was not compiled in.
const KernelTable* kernel_table(Isa isa);

namespace detail {
extern const KernelTable scalar_table;
#if defined(SPDE_BUILD_AVX2)
extern const KernelTable avx2_table;
#endif
#if defined(SPDE_BUILD_NEON)
extern const KernelTable neon_table;
#endif
}  // namespace detail

}  // namespace spde::simd
