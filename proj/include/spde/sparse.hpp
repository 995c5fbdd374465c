#pragma once

// Compressed sparse row storage for the finite-element and precision
// matrices. SparseMatrix is a general rectangular CSR matrix (operator
// matrix P, projection matrix A); SparseSymMatrix wraps a square CSR matrix
// whose stored pattern and values are exactly symmetric (C, G1, G2, Q, H).

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace spde::sparse {

using Index = std::int32_t;

struct Triplet {
  Index row;
  Index col;
  double value;
};

class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(Index rows, Index cols);

  /// Duplicates are summed, exact zeros dropped, columns sorted within rows.
  /// The layout depends only on the multiset of triplets, not their order.
  static SparseMatrix from_triplets(Index rows, Index cols, std::span<const Triplet> triplets);
  static SparseMatrix identity(Index n);
  static SparseMatrix diagonal(std::span<const double> diag);
  /// Adopts a CSR layout; validates monotone row pointers and sorted, in-range columns.
  static SparseMatrix from_csr(Index rows, Index cols, std::vector<Index> row_ptr,
                               std::vector<Index> col_idx, std::vector<double> values);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index nnz() const { return static_cast<Index>(values_.size()); }

  std::span<const Index> row_ptr() const { return row_ptr_; }
  std::span<const Index> col_idx() const { return col_idx_; }
  std::span<const double> values() const { return values_; }

  std::span<const Index> row_cols(Index i) const {
    return {col_idx_.data() + row_ptr_[i], col_idx_.data() + row_ptr_[i + 1]};
  }
  std::span<const double> row_values(Index i) const {
    return {values_.data() + row_ptr_[i], values_.data() + row_ptr_[i + 1]};
  }

  /// Value at (i, j); zero when not stored.
  double coeff(Index i, Index j) const;

  std::vector<double> multiply(std::span<const double> x) const;
  std::vector<double> multiply_transpose(std::span<const double> x) const;

  SparseMatrix transpose() const;
  SparseMatrix scaled(double alpha) const;
  /// Scales row i by d[i] (D * this).
  SparseMatrix scale_rows(std::span<const double> d) const;

  std::vector<double> row_sums() const;
  double max_abs() const;
  std::vector<double> to_dense() const;  // row-major

  std::vector<Triplet> triplets() const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_ptr_{0};
  std::vector<Index> col_idx_;
  std::vector<double> values_;
};

/// alpha * a + beta * b (same shape).
SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double alpha = 1.0,
                 double beta = 1.0);

/// a * b.
SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);

/// a^T * diag(w) * a, computed row by row over a. Output is exactly symmetric.
SparseMatrix weighted_gram(const SparseMatrix& a, std::span<const double> w);

class SparseSymMatrix {
 public:
  SparseSymMatrix() = default;

  /// A triplet (i, j) with i != j contributes to both (i, j) and (j, i);
  /// (i, j) and (j, i) triplets therefore address the same entry.
  static SparseSymMatrix from_triplets(std::span<const Triplet> triplets, Index dim);
  static SparseSymMatrix identity(Index n);
  static SparseSymMatrix diagonal(std::span<const double> diag);

  /// Takes a square matrix whose pattern and values are symmetric. Fails
  /// when |a_ij - a_ji| exceeds tol * max|a|.
  static SparseSymMatrix from_general(SparseMatrix m, double tol = 0.0);

  Index dim() const { return full_.rows(); }
  Index nnz() const { return full_.nnz(); }
  double coeff(Index i, Index j) const { return full_.coeff(i, j); }
  const SparseMatrix& general() const { return full_; }

  std::vector<double> multiply(std::span<const double> x) const { return full_.multiply(x); }
  double quadratic_form(std::span<const double> x) const;

  SparseSymMatrix scaled(double alpha) const;
  std::vector<double> diagonal_values() const;
  double max_abs() const { return full_.max_abs(); }
  /// Largest |i - j| over stored entries.
  Index bandwidth() const;

  /// Upper-triangle (row <= col) entries in row-major order.
  std::vector<Triplet> upper_triplets() const;

  friend bool operator==(const SparseSymMatrix&, const SparseSymMatrix&) = default;

 private:
  explicit SparseSymMatrix(SparseMatrix full) : full_(std::move(full)) {}
  SparseMatrix full_;
};

SparseSymMatrix add(const SparseSymMatrix& a, const SparseSymMatrix& b, double alpha = 1.0,
                    double beta = 1.0);

/// Embeds `a` into the leading block of a dim x dim matrix (remaining block zero).
SparseSymMatrix pad(const SparseSymMatrix& a, Index dim);

/// g * diag(d) * g for symmetric g.
SparseSymMatrix sandwich_diagonal(const SparseSymMatrix& g, std::span<const double> d);

/// p^T * diag(d) * p for general square p.
SparseSymMatrix congruence_diagonal(const SparseMatrix& p, std::span<const double> d);

}  // namespace spde::sparse
