#include <immintrin.h>

#include "spde/simd.hpp"

namespace spde::simd::detail {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double gather_dot_avx2(const double* values, const std::int32_t* index, const double* x,
                       std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(index + i));
    const __m256d xv = _mm256_i32gather_pd(x, idx, 8);
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(values + i), xv, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += values[i] * x[index[i]];
  return s;
}

void scatter_axpy_avx2(double alpha, const double* values, const std::int32_t* index, double* y,
                       std::size_t n) {
  // AVX2 has gathers but no scatters: gather, fuse, then store lane by lane.
  const __m256d va = _mm256_set1_pd(alpha);
  alignas(32) double out[4];
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(index + i));
    const __m256d yv = _mm256_i32gather_pd(y, idx, 8);
    _mm256_store_pd(out, _mm256_fmadd_pd(va, _mm256_loadu_pd(values + i), yv));
    y[index[i]] = out[0];
    y[index[i + 1]] = out[1];
    y[index[i + 2]] = out[2];
    y[index[i + 3]] = out[3];
  }
  for (; i < n; ++i) y[index[i]] += alpha * values[i];
}

}  // namespace

const KernelTable avx2_table{dot_avx2, axpy_avx2, gather_dot_avx2, scatter_axpy_avx2};

}  // namespace spde::simd::detail
