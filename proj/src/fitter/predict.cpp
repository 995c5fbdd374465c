#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "spde/fitter.hpp"

namespace spde::fitter {
namespace {

constexpr int kBatch = 64;

std::vector<double> dense_row(const SparseMatrix& rows, Index i) {
  std::vector<double> a(static_cast<std::size_t>(rows.cols()), 0.0);
  const auto c = rows.row_cols(i);
  const auto v = rows.row_values(i);
  for (std::size_t k = 0; k < c.size(); ++k) a[c[k]] = v[k];
  return a;
}

void check_fit(const Model& model, const FitResult& fit) {
  if (fit.beta.size() != static_cast<std::size_t>(model.n_coef()) || !fit.factor) {
    throw FitError("fit does not match the model");
  }
}

}  // namespace

Prediction predict(const Model& model, const FitResult& fit, std::span<const Point2> locations,
                   const Eigen::MatrixXd& covariates) {
  check_fit(model, fit);
  Prediction out;
  const SparseMatrix rows = model.design_rows(locations, covariates, &out.outside);
  out.mean = rows.multiply(fit.beta);
  out.se.resize(out.mean.size());
  out.response_mean.resize(out.mean.size());
  for (Index i = 0; i < rows.rows(); ++i) {
    // a^T H^{-1} a = |L^{-1} P a|^2.
    const auto w = fit.factor->half_solve(dense_row(rows, i));
    double s = 0.0;
    for (double v : w) s += v * v;
    out.se[i] = std::sqrt(s);
    out.response_mean[i] = fit.family == Family::gaussian
                               ? out.mean[i]
                               : std::exp(std::clamp(out.mean[i], -kEtaClamp, kEtaClamp));
  }
  return out;
}

Eigen::MatrixXd posterior_samples(const Model& model, const FitResult& fit,
                                  std::span<const Point2> locations,
                                  const Eigen::MatrixXd& covariates, int n, std::uint64_t seed,
                                  int threads) {
  check_fit(model, fit);
  if (n < 0) throw std::invalid_argument("sample count must be >= 0");
  const SparseMatrix rows = model.design_rows(locations, covariates);
  Eigen::MatrixXd out(n, rows.rows());
  const auto p = static_cast<std::size_t>(model.n_coef());
  const int n_batches = (n + kBatch - 1) / kBatch;
  const auto run_batch = [&](int b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(b)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    std::vector<double> z(p);
    const int end = std::min(n, (b + 1) * kBatch);
    for (int s = b * kBatch; s < end; ++s) {
      for (auto& v : z) v = normal(rng);
      auto beta = fit.factor->whiten_sample(z);
      for (std::size_t j = 0; j < p; ++j) beta[j] += fit.beta[j];
      const auto vals = rows.multiply(beta);
      for (std::size_t j = 0; j < vals.size(); ++j) out(s, static_cast<Eigen::Index>(j)) = vals[j];
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

}  // namespace spde::fitter
