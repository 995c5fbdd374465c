#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "spde/sparse.hpp"

namespace spde::oracle {

inline Eigen::MatrixXd dense(const sparse::SparseMatrix& m) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  for (sparse::Index i = 0; i < m.rows(); ++i) {
    const auto c = m.row_cols(i);
    const auto v = m.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k) d(i, c[k]) = v[k];
  }
  return d;
}

inline Eigen::MatrixXd dense(const sparse::SparseSymMatrix& m) { return dense(m.general()); }

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Random sparse SPD matrix: a random symmetric pattern made diagonally dominant.
inline sparse::SparseSymMatrix random_spd(int n, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution keep(density);
  std::vector<double> rowsum(n, 0.0);
  std::vector<sparse::Triplet> t;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!keep(rng)) continue;
      const double v = u(rng);
      t.push_back({i, j, v});
      rowsum[i] += std::abs(v);
      rowsum[j] += std::abs(v);
    }
  }
  for (int i = 0; i < n; ++i) t.push_back({i, i, rowsum[i] + 0.5 + 0.5 * (u(rng) + 1.0)});
  return sparse::SparseSymMatrix::from_triplets(t, n);
}

}  // namespace spde::oracle
