#include "spde/simd.hpp"

namespace spde::simd::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double gather_dot_scalar(const double* values, const std::int32_t* index, const double* x,
                         std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += values[i] * x[index[i]];
  return s;
}

void scatter_axpy_scalar(double alpha, const double* values, const std::int32_t* index,
                         double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[index[i]] += alpha * values[i];
}

}  // namespace

const KernelTable scalar_table{dot_scalar, axpy_scalar, gather_dot_scalar, scatter_axpy_scalar};

}  // namespace spde::simd::detail
