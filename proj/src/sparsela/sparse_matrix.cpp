#include <algorithm>
#include <cmath>
#include <string>

#include "spde/simd.hpp"
#include "spde/sparse.hpp"

namespace spde::sparse {
namespace {

void check_index(Index i, Index n, const char* what) {
  if (i < 0 || i >= n) {
    throw std::out_of_range(std::string(what) + " index " + std::to_string(i) +
                            " out of range [0, " + std::to_string(n) + ")");
  }
}

// Sorting by value as the last key makes duplicate summation independent of
// the order in which triplets were produced.
SparseMatrix compress(Index rows, Index cols, std::vector<Triplet> t) {
  std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
    if (a.row != b.row) return a.row < b.row;
    if (a.col != b.col) return a.col < b.col;
    return a.value < b.value;
  });
  std::vector<Index> row_ptr(static_cast<std::size_t>(rows) + 1, 0);
  std::vector<Index> col_idx;
  std::vector<double> values;
  col_idx.reserve(t.size());
  values.reserve(t.size());
  std::size_t k = 0;
  for (Index r = 0; r < rows; ++r) {
    while (k < t.size() && t[k].row == r) {
      const Index c = t[k].col;
      double s = 0.0;
      while (k < t.size() && t[k].row == r && t[k].col == c) s += t[k++].value;
      if (s != 0.0) {
        col_idx.push_back(c);
        values.push_back(s);
      }
    }
    row_ptr[r + 1] = static_cast<Index>(col_idx.size());
  }
  return SparseMatrix::from_csr(rows, cols, std::move(row_ptr), std::move(col_idx),
                                std::move(values));
}

}  // namespace

SparseMatrix::SparseMatrix(Index rows, Index cols)
    : rows_(rows), cols_(cols), row_ptr_(static_cast<std::size_t>(rows) + 1, 0) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("negative matrix dimension");
}

SparseMatrix SparseMatrix::from_triplets(Index rows, Index cols,
                                         std::span<const Triplet> triplets) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("negative matrix dimension");
  for (const auto& t : triplets) {
    check_index(t.row, rows, "row");
    check_index(t.col, cols, "column");
    if (!std::isfinite(t.value)) throw std::invalid_argument("non-finite triplet value");
  }
  return compress(rows, cols, {triplets.begin(), triplets.end()});
}

SparseMatrix SparseMatrix::identity(Index n) {
  std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
  return diagonal(ones);
}

SparseMatrix SparseMatrix::diagonal(std::span<const double> diag) {
  const auto n = static_cast<Index>(diag.size());
  std::vector<Index> row_ptr(diag.size() + 1);
  std::vector<Index> col_idx;
  std::vector<double> values;
  for (Index i = 0; i < n; ++i) {
    if (diag[i] != 0.0) {
      col_idx.push_back(i);
      values.push_back(diag[i]);
    }
    row_ptr[i + 1] = static_cast<Index>(col_idx.size());
  }
  return from_csr(n, n, std::move(row_ptr), std::move(col_idx), std::move(values));
}

SparseMatrix SparseMatrix::from_csr(Index rows, Index cols, std::vector<Index> row_ptr,
                                    std::vector<Index> col_idx, std::vector<double> values) {
  if (row_ptr.size() != static_cast<std::size_t>(rows) + 1 || row_ptr.front() != 0 ||
      static_cast<std::size_t>(row_ptr.back()) != col_idx.size() ||
      col_idx.size() != values.size()) {
    throw std::invalid_argument("inconsistent CSR arrays");
  }
  for (Index r = 0; r < rows; ++r) {
    if (row_ptr[r + 1] < row_ptr[r]) throw std::invalid_argument("row pointers not monotone");
    for (Index p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
      check_index(col_idx[p], cols, "column");
      if (p > row_ptr[r] && col_idx[p] <= col_idx[p - 1]) {
        throw std::invalid_argument("CSR columns not strictly increasing");
      }
    }
  }
  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.row_ptr_ = std::move(row_ptr);
  m.col_idx_ = std::move(col_idx);
  m.values_ = std::move(values);
  return m;
}

double SparseMatrix::coeff(Index i, Index j) const {
  check_index(i, rows_, "row");
  check_index(j, cols_, "column");
  const auto cols = row_cols(i);
  const auto it = std::lower_bound(cols.begin(), cols.end(), j);
  if (it == cols.end() || *it != j) return 0.0;
  return values_[row_ptr_[i] + (it - cols.begin())];
}

std::vector<double> SparseMatrix::multiply(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(cols_)) {
    throw std::invalid_argument("multiply: dimension mismatch");
  }
  std::vector<double> y(static_cast<std::size_t>(rows_));
  for (Index i = 0; i < rows_; ++i) y[i] = simd::gather_dot(row_values(i), row_cols(i), x.data());
  return y;
}

std::vector<double> SparseMatrix::multiply_transpose(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(rows_)) {
    throw std::invalid_argument("multiply_transpose: dimension mismatch");
  }
  std::vector<double> y(static_cast<std::size_t>(cols_), 0.0);
  for (Index i = 0; i < rows_; ++i) {
    if (x[i] != 0.0) simd::scatter_axpy(x[i], row_values(i), row_cols(i), y.data());
  }
  return y;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<Index> count(static_cast<std::size_t>(cols_) + 1, 0);
  for (const Index c : col_idx_) ++count[c + 1];
  for (Index c = 0; c < cols_; ++c) count[c + 1] += count[c];
  std::vector<Index> row_ptr = count;
  std::vector<Index> col_idx(col_idx_.size());
  std::vector<double> values(values_.size());
  for (Index i = 0; i < rows_; ++i) {
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const Index dst = count[col_idx_[p]]++;
      col_idx[dst] = i;
      values[dst] = values_[p];
    }
  }
  return from_csr(cols_, rows_, std::move(row_ptr), std::move(col_idx), std::move(values));
}

SparseMatrix SparseMatrix::scaled(double alpha) const {
  if (alpha == 0.0) return SparseMatrix(rows_, cols_);
  SparseMatrix m = *this;
  for (auto& v : m.values_) v *= alpha;
  return m;
}

SparseMatrix SparseMatrix::scale_rows(std::span<const double> d) const {
  if (d.size() != static_cast<std::size_t>(rows_)) {
    throw std::invalid_argument("scale_rows: dimension mismatch");
  }
  std::vector<Triplet> t;
  t.reserve(values_.size());
  for (Index i = 0; i < rows_; ++i) {
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      t.push_back({i, col_idx_[p], d[i] * values_[p]});
    }
  }
  return compress(rows_, cols_, std::move(t));
}

std::vector<double> SparseMatrix::row_sums() const {
  std::vector<double> s(static_cast<std::size_t>(rows_), 0.0);
  for (Index i = 0; i < rows_; ++i) {
    for (const double v : row_values(i)) s[i] += v;
  }
  return s;
}

double SparseMatrix::max_abs() const {
  double m = 0.0;
  for (const double v : values_) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> SparseMatrix::to_dense() const {
  std::vector<double> d(static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_), 0.0);
  for (Index i = 0; i < rows_; ++i) {
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      d[static_cast<std::size_t>(i) * cols_ + col_idx_[p]] = values_[p];
    }
  }
  return d;
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> t;
  t.reserve(values_.size());
  for (Index i = 0; i < rows_; ++i) {
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) t.push_back({i, col_idx_[p], values_[p]});
  }
  return t;
}

SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double alpha, double beta) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("add: shape mismatch");
  }
  std::vector<Index> row_ptr(static_cast<std::size_t>(a.rows()) + 1, 0);
  std::vector<Index> col_idx;
  std::vector<double> values;
  col_idx.reserve(a.nnz() + b.nnz());
  values.reserve(a.nnz() + b.nnz());
  for (Index i = 0; i < a.rows(); ++i) {
    const auto ac = a.row_cols(i);
    const auto av = a.row_values(i);
    const auto bc = b.row_cols(i);
    const auto bv = b.row_values(i);
    std::size_t p = 0;
    std::size_t q = 0;
    while (p < ac.size() || q < bc.size()) {
      Index c;
      double v;
      if (q == bc.size() || (p < ac.size() && ac[p] < bc[q])) {
        c = ac[p];
        v = alpha * av[p++];
      } else if (p == ac.size() || bc[q] < ac[p]) {
        c = bc[q];
        v = beta * bv[q++];
      } else {
        c = ac[p];
        v = alpha * av[p++] + beta * bv[q++];
      }
      if (v != 0.0) {
        col_idx.push_back(c);
        values.push_back(v);
      }
    }
    row_ptr[i + 1] = static_cast<Index>(col_idx.size());
  }
  return SparseMatrix::from_csr(a.rows(), a.cols(), std::move(row_ptr), std::move(col_idx),
                                std::move(values));
}

SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: inner dimension mismatch");
  std::vector<Index> row_ptr(static_cast<std::size_t>(a.rows()) + 1, 0);
  std::vector<Index> col_idx;
  std::vector<double> values;
  std::vector<double> acc(static_cast<std::size_t>(b.cols()), 0.0);
  std::vector<Index> mark(static_cast<std::size_t>(b.cols()), -1);
  std::vector<Index> pattern;
  for (Index i = 0; i < a.rows(); ++i) {
    pattern.clear();
    const auto ac = a.row_cols(i);
    const auto av = a.row_values(i);
    for (std::size_t p = 0; p < ac.size(); ++p) {
      const Index k = ac[p];
      const auto bc = b.row_cols(k);
      const auto bv = b.row_values(k);
      for (std::size_t q = 0; q < bc.size(); ++q) {
        const Index j = bc[q];
        if (mark[j] != i) {
          mark[j] = i;
          acc[j] = 0.0;
          pattern.push_back(j);
        }
        acc[j] += av[p] * bv[q];
      }
    }
    std::sort(pattern.begin(), pattern.end());
    for (const Index j : pattern) {
      if (acc[j] != 0.0) {
        col_idx.push_back(j);
        values.push_back(acc[j]);
      }
    }
    row_ptr[i + 1] = static_cast<Index>(col_idx.size());
  }
  return SparseMatrix::from_csr(a.rows(), b.cols(), std::move(row_ptr), std::move(col_idx),
                                std::move(values));
}

SparseMatrix weighted_gram(const SparseMatrix& a, std::span<const double> w) {
  if (w.size() != static_cast<std::size_t>(a.rows())) {
    throw std::invalid_argument("weighted_gram: weight length mismatch");
  }
  std::vector<Triplet> t;
  for (Index r = 0; r < a.rows(); ++r) {
    const auto cols = a.row_cols(r);
    const auto vals = a.row_values(r);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      for (std::size_t q = p; q < cols.size(); ++q) {
        // One product per unordered pair keeps the result exactly symmetric.
        const double v = w[r] * vals[p] * vals[q];
        t.push_back({cols[p], cols[q], v});
        if (q != p) t.push_back({cols[q], cols[p], v});
      }
    }
  }
  return compress(a.cols(), a.cols(), std::move(t));
}

SparseSymMatrix SparseSymMatrix::from_triplets(std::span<const Triplet> triplets, Index dim) {
  if (dim < 0) throw std::invalid_argument("negative matrix dimension");
  std::vector<Triplet> t;
  t.reserve(2 * triplets.size());
  for (const auto& e : triplets) {
    check_index(e.row, dim, "row");
    check_index(e.col, dim, "column");
    if (!std::isfinite(e.value)) throw std::invalid_argument("non-finite triplet value");
    t.push_back(e);
    if (e.row != e.col) t.push_back({e.col, e.row, e.value});
  }
  return SparseSymMatrix(compress(dim, dim, std::move(t)));
}

SparseSymMatrix SparseSymMatrix::identity(Index n) {
  return SparseSymMatrix(SparseMatrix::identity(n));
}

SparseSymMatrix SparseSymMatrix::diagonal(std::span<const double> diag) {
  return SparseSymMatrix(SparseMatrix::diagonal(diag));
}

SparseSymMatrix SparseSymMatrix::from_general(SparseMatrix m, double tol) {
  if (m.rows() != m.cols()) throw std::invalid_argument("symmetric matrix must be square");
  const double bound = tol * m.max_abs();
  const SparseMatrix mt = m.transpose();
  if (m == mt) return SparseSymMatrix(std::move(m));
  const SparseMatrix avg = add(m, mt, 0.5, 0.5);
  const SparseMatrix diff = add(m, mt, 1.0, -1.0);
  if (diff.max_abs() > bound) {
    throw std::invalid_argument("matrix is not symmetric within tolerance");
  }
  return SparseSymMatrix(avg);
}

double SparseSymMatrix::quadratic_form(std::span<const double> x) const {
  const auto y = multiply(x);
  return simd::dot(x, y);
}

SparseSymMatrix SparseSymMatrix::scaled(double alpha) const {
  return SparseSymMatrix(full_.scaled(alpha));
}

std::vector<double> SparseSymMatrix::diagonal_values() const {
  std::vector<double> d(static_cast<std::size_t>(dim()));
  for (Index i = 0; i < dim(); ++i) d[i] = full_.coeff(i, i);
  return d;
}

Index SparseSymMatrix::bandwidth() const {
  Index bw = 0;
  for (Index i = 0; i < dim(); ++i) {
    for (const Index j : full_.row_cols(i)) bw = std::max(bw, static_cast<Index>(std::abs(i - j)));
  }
  return bw;
}

std::vector<Triplet> SparseSymMatrix::upper_triplets() const {
  std::vector<Triplet> t;
  for (Index i = 0; i < dim(); ++i) {
    const auto cols = full_.row_cols(i);
    const auto vals = full_.row_values(i);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      if (cols[p] >= i) t.push_back({i, cols[p], vals[p]});
    }
  }
  return t;
}

SparseSymMatrix add(const SparseSymMatrix& a, const SparseSymMatrix& b, double alpha,
                    double beta) {
  return SparseSymMatrix::from_general(add(a.general(), b.general(), alpha, beta));
}

SparseSymMatrix pad(const SparseSymMatrix& a, Index dim) {
  if (dim < a.dim()) throw std::invalid_argument("pad: target smaller than source");
  const auto& g = a.general();
  std::vector<Index> row_ptr(g.row_ptr().begin(), g.row_ptr().end());
  row_ptr.resize(static_cast<std::size_t>(dim) + 1, row_ptr.back());
  return SparseSymMatrix::from_general(SparseMatrix::from_csr(
      dim, dim, std::move(row_ptr), {g.col_idx().begin(), g.col_idx().end()},
      {g.values().begin(), g.values().end()}));
}

SparseSymMatrix sandwich_diagonal(const SparseSymMatrix& g, std::span<const double> d) {
  // g symmetric, so g * D * g = g^T * D * g.
  return SparseSymMatrix::from_general(weighted_gram(g.general(), d));
}

SparseSymMatrix congruence_diagonal(const SparseMatrix& p, std::span<const double> d) {
  if (p.rows() != p.cols()) throw std::invalid_argument("congruence_diagonal: p must be square");
  return SparseSymMatrix::from_general(weighted_gram(p, d));
}

}  // namespace spde::sparse
