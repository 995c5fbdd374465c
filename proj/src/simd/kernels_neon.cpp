#include <arm_neon.h>

#include "spde/simd.hpp"

namespace spde::simd::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double gather_dot_neon(const double* values, const std::int32_t* index, const double* x,
                       std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const double g[2] = {x[index[i]], x[index[i + 1]]};
    acc = vfmaq_f64(acc, vld1q_f64(values + i), vld1q_f64(g));
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += values[i] * x[index[i]];
  return s;
}

void scatter_axpy_neon(double alpha, const double* values, const std::int32_t* index, double* y,
                       std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const double g[2] = {y[index[i]], y[index[i + 1]]};
    double out[2];
    vst1q_f64(out, vfmaq_f64(vld1q_f64(g), va, vld1q_f64(values + i)));
    y[index[i]] = out[0];
    y[index[i + 1]] = out[1];
  }
  for (; i < n; ++i) y[index[i]] += alpha * values[i];
}

}  // namespace

const KernelTable neon_table{dot_neon, axpy_neon, gather_dot_neon, scatter_axpy_neon};

}  // namespace spde::simd::detail
