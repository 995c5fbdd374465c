#pragma once

// Simplicial sparse Cholesky with a minimum-degree fill-reducing ordering.
//
// With permutation P (row k of P*Q*P^T is row perm[k] of Q) the factor
// satisfies P * Q * P^T = L * L^T. The symbolic analysis depends only on the
// sparsity pattern and can be reused to refactor matrices sharing it, which
// is how the hyperparameter search refactors S(kappa, tau) and H.

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spde/sparse.hpp"

namespace spde::sparse {

/// Raised when a pivot falls at or below the positive-definiteness threshold.
class NotPositiveDefinite : public std::runtime_error {
 public:
  NotPositiveDefinite(Index pivot, double value)
      : std::runtime_error("matrix is not positive definite (pivot at original index " +
                           std::to_string(pivot) + ", value " + std::to_string(value) + ")"),
        pivot_(pivot),
        value_(value) {}
  /// Index in the original (unpermuted) numbering.
  Index pivot() const { return pivot_; }
  double value() const { return value_; }

 private:
  Index pivot_;
  double value_;
};

/// Pivots d with d <= kPivotTolerance * max(diag(Q)) are rejected.
inline constexpr double kPivotTolerance = 1e-12;

/// Minimum-degree ordering of the graph of `q`; ties go to the lowest node index.
/// Returns perm with perm[k] = node eliminated k-th.
std::vector<Index> minimum_degree_ordering(const SparseSymMatrix& q);

std::vector<Index> invert_permutation(std::span<const Index> perm);

class CholeskyAnalysis {
 public:
  explicit CholeskyAnalysis(const SparseSymMatrix& pattern);
  CholeskyAnalysis(const SparseSymMatrix& pattern, std::vector<Index> perm);

  Index dim() const { return n_; }
  std::span<const Index> permutation() const { return perm_; }
  std::span<const Index> inverse_permutation() const { return pinv_; }
  std::span<const Index> etree() const { return parent_; }
  Index factor_nnz() const { return col_ptr_.back(); }
  /// True when `q` has exactly the pattern this analysis was built from.
  bool matches(const SparseSymMatrix& q) const;

 private:
  friend class CholFactor;

  Index n_ = 0;
  std::vector<Index> perm_;
  std::vector<Index> pinv_;
  std::vector<Index> parent_;
  std::vector<Index> col_ptr_;  // column pointers of L
  // Upper triangle of P*Q*P^T in CSC, with a map back into Q's value array.
  std::vector<Index> c_ptr_;
  std::vector<Index> c_row_;
  std::vector<Index> c_src_;
  std::vector<Index> q_row_ptr_;
  std::vector<Index> q_col_idx_;
};

class SelectedInverse;

class CholFactor {
 public:
  /// Numeric factorization. Throws NotPositiveDefinite.
  CholFactor(std::shared_ptr<const CholeskyAnalysis> analysis, const SparseSymMatrix& q);

  Index dim() const { return analysis_->dim(); }
  std::span<const Index> permutation() const { return analysis_->permutation(); }
  const CholeskyAnalysis& analysis() const { return *analysis_; }
  std::shared_ptr<const CholeskyAnalysis> shared_analysis() const { return analysis_; }

  // L in CSC; the diagonal is the first entry of each column and row indices ascend.
  std::span<const Index> col_ptr() const { return analysis_->col_ptr_; }
  std::span<const Index> row_idx() const { return row_; }
  std::span<const double> values() const { return val_; }

  double logdet() const { return logdet_; }

  /// Solves Q x = b.
  std::vector<double> solve(std::span<const double> b) const;

  /// x = P^T L^{-T} z, so x ~ N(0, Q^{-1}) when z ~ N(0, I).
  std::vector<double> whiten_sample(std::span<const double> z) const;

  /// w = L^{-1} P b. Then b^T Q^{-1} b = |w|^2.
  std::vector<double> half_solve(std::span<const double> b) const;

  /// Entries of Q^{-1} on the pattern of L + L^T (Takahashi recursion).
  SelectedInverse selected_inverse() const;

  /// Dense lower factor in permuted numbering (tests and debugging).
  std::vector<double> dense_lower() const;

 private:
  void check_dim(std::size_t n) const;
  void lower_solve(std::span<double> y) const;
  void upper_solve(std::span<double> y) const;

  std::shared_ptr<const CholeskyAnalysis> analysis_;
  std::vector<Index> row_;
  std::vector<double> val_;
  double logdet_ = 0.0;
};

class SelectedInverse {
 public:
  Index dim() const { return static_cast<Index>(pinv_.size()); }
  /// (Q^{-1})_{ij} in the original numbering. Throws std::out_of_range when
  /// (i, j) is outside the factor pattern.
  double operator()(Index i, Index j) const;
  bool contains(Index i, Index j) const;
  /// sum_ij m_ij (Q^{-1})_ij; m's pattern must lie inside the factor pattern.
  double trace_product(const SparseSymMatrix& m) const;
  std::vector<double> diagonal() const;

 private:
  friend class CholFactor;
  const double* find(Index i, Index j) const;

  std::vector<Index> pinv_;
  std::vector<Index> col_ptr_;
  std::vector<Index> row_;
  std::vector<double> val_;
};

/// Analysis plus numeric factorization with the default ordering.
CholFactor cholesky(const SparseSymMatrix& q);

}  // namespace spde::sparse
