#include <algorithm>
#include <random>
#include <stdexcept>
#include <thread>

#include "spde/cholesky.hpp"
#include "spde/matern.hpp"

namespace spde::matern {
namespace {

constexpr int kBatch = 64;

}  // namespace

FieldSamples simulate_field(const SparseSymMatrix& q, const SparseMatrix& a, int n_samples,
                            std::uint64_t seed, int threads) {
  if (n_samples < 0) throw std::invalid_argument("sample count must be >= 0");
  if (a.cols() != q.dim()) throw std::invalid_argument("projection and precision sizes differ");
  const sparse::CholFactor factor = sparse::cholesky(q);
  const Eigen::Index m = q.dim();
  FieldSamples out;
  out.coefficients.resize(n_samples, m);
  out.values.resize(n_samples, a.rows());

  const int n_batches = (n_samples + kBatch - 1) / kBatch;
  const auto run_batch = [&](int b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(b)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    std::vector<double> z(static_cast<std::size_t>(m));
    const int end = std::min(n_samples, (b + 1) * kBatch);
    for (int s = b * kBatch; s < end; ++s) {
      for (auto& v : z) v = normal(rng);
      const auto x = factor.whiten_sample(z);
      const auto y = a.multiply(x);
      for (Eigen::Index j = 0; j < m; ++j) out.coefficients(s, j) = x[j];
      for (Eigen::Index j = 0; j < a.rows(); ++j) out.values(s, j) = y[j];
    }
  };

  const int workers = std::clamp(threads, 1, std::max(1, n_batches));
  if (workers == 1) {
    for (int b = 0; b < n_batches; ++b) run_batch(b);
    return out;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int b = w; b < n_batches; b += workers) run_batch(b);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace spde::matern
