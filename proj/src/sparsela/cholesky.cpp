#include <algorithm>
#include <cmath>
#include <numeric>

#include "spde/cholesky.hpp"
#include "spde/simd.hpp"

namespace spde::sparse {
namespace {

// Row k of L has nonzeros at the etree ancestors of each i < k with
// C(i, k) != 0, up to k. Returned ascending, which is topological since
// parents have larger indices than children.
void row_pattern(Index k, std::span<const Index> c_ptr, std::span<const Index> c_row,
                 std::span<const Index> parent, std::vector<Index>& mark,
                 std::vector<Index>& out) {
  out.clear();
  mark[k] = k;
  for (Index p = c_ptr[k]; p < c_ptr[k + 1]; ++p) {
    for (Index i = c_row[p]; i < k && mark[i] != k; i = parent[i]) {
      mark[i] = k;
      out.push_back(i);
    }
  }
  std::sort(out.begin(), out.end());
}

}  // namespace

CholeskyAnalysis::CholeskyAnalysis(const SparseSymMatrix& pattern)
    : CholeskyAnalysis(pattern, minimum_degree_ordering(pattern)) {}

CholeskyAnalysis::CholeskyAnalysis(const SparseSymMatrix& pattern, std::vector<Index> perm)
    : n_(pattern.dim()), perm_(std::move(perm)) {
  if (perm_.size() != static_cast<std::size_t>(n_)) {
    throw std::invalid_argument("ordering length does not match matrix dimension");
  }
  pinv_ = invert_permutation(perm_);
  const auto& g = pattern.general();
  q_row_ptr_.assign(g.row_ptr().begin(), g.row_ptr().end());
  q_col_idx_.assign(g.col_idx().begin(), g.col_idx().end());

  // Upper triangle of C = P Q P^T, column-compressed, rows ascending.
  std::vector<Index> count(static_cast<std::size_t>(n_) + 1, 0);
  for (Index i = 0; i < n_; ++i) {
    for (const Index j : g.row_cols(i)) {
      const Index r = pinv_[i];
      const Index c = pinv_[j];
      if (r <= c) ++count[c + 1];
    }
  }
  for (Index c = 0; c < n_; ++c) count[c + 1] += count[c];
  c_ptr_ = count;
  c_row_.resize(static_cast<std::size_t>(c_ptr_.back()));
  c_src_.resize(c_row_.size());
  for (Index i = 0; i < n_; ++i) {
    for (Index p = g.row_ptr()[i]; p < g.row_ptr()[i + 1]; ++p) {
      const Index r = pinv_[i];
      const Index c = pinv_[g.col_idx()[p]];
      if (r <= c) {
        const Index dst = count[c]++;
        c_row_[dst] = r;
        c_src_[dst] = p;
      }
    }
  }
  for (Index c = 0; c < n_; ++c) {
    // Sort each column by row, carrying the source positions along.
    std::vector<std::pair<Index, Index>> col;
    for (Index p = c_ptr_[c]; p < c_ptr_[c + 1]; ++p) col.emplace_back(c_row_[p], c_src_[p]);
    std::sort(col.begin(), col.end());
    for (Index p = c_ptr_[c]; p < c_ptr_[c + 1]; ++p) {
      c_row_[p] = col[p - c_ptr_[c]].first;
      c_src_[p] = col[p - c_ptr_[c]].second;
    }
  }

  // Elimination tree with path compression.
  parent_.assign(static_cast<std::size_t>(n_), -1);
  std::vector<Index> ancestor(static_cast<std::size_t>(n_), -1);
  for (Index k = 0; k < n_; ++k) {
    for (Index p = c_ptr_[k]; p < c_ptr_[k + 1]; ++p) {
      Index i = c_row_[p];
      while (i != -1 && i < k) {
        const Index next = ancestor[i];
        ancestor[i] = k;
        if (next == -1) parent_[i] = k;
        i = next;
      }
    }
  }

  // Column counts of L from the row patterns.
  std::vector<Index> colcount(static_cast<std::size_t>(n_), 1);
  std::vector<Index> mark(static_cast<std::size_t>(n_), -1);
  std::vector<Index> pattern_k;
  for (Index k = 0; k < n_; ++k) {
    row_pattern(k, c_ptr_, c_row_, parent_, mark, pattern_k);
    for (const Index i : pattern_k) ++colcount[i];
  }
  col_ptr_.assign(static_cast<std::size_t>(n_) + 1, 0);
  std::partial_sum(colcount.begin(), colcount.end(), col_ptr_.begin() + 1);
}

bool CholeskyAnalysis::matches(const SparseSymMatrix& q) const {
  const auto& g = q.general();
  return g.rows() == n_ && std::equal(g.row_ptr().begin(), g.row_ptr().end(), q_row_ptr_.begin(),
                                      q_row_ptr_.end()) &&
         std::equal(g.col_idx().begin(), g.col_idx().end(), q_col_idx_.begin(),
                    q_col_idx_.end());
}

CholFactor::CholFactor(std::shared_ptr<const CholeskyAnalysis> analysis, const SparseSymMatrix& q)
    : analysis_(std::move(analysis)) {
  const CholeskyAnalysis& a = *analysis_;
  if (!a.matches(q)) throw std::invalid_argument("matrix pattern does not match the analysis");
  const Index n = a.n_;
  const auto qv = q.general().values();

  double max_diag = 0.0;
  for (Index i = 0; i < n; ++i) max_diag = std::max(max_diag, q.coeff(i, i));
  const double threshold = kPivotTolerance * max_diag;

  row_.assign(static_cast<std::size_t>(a.col_ptr_.back()), 0);
  val_.assign(row_.size(), 0.0);
  std::vector<Index> next(a.col_ptr_.begin(), a.col_ptr_.end() - 1);
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  std::vector<Index> mark(static_cast<std::size_t>(n), -1);
  std::vector<Index> pattern_k;

  logdet_ = 0.0;
  for (Index k = 0; k < n; ++k) {
    row_pattern(k, a.c_ptr_, a.c_row_, a.parent_, mark, pattern_k);
    for (Index p = a.c_ptr_[k]; p < a.c_ptr_[k + 1]; ++p) x[a.c_row_[p]] = qv[a.c_src_[p]];
    double d = x[k];
    x[k] = 0.0;
    for (const Index i : pattern_k) {
      const double lki = x[i] / val_[a.col_ptr_[i]];
      x[i] = 0.0;
      const Index begin = a.col_ptr_[i] + 1;
      const auto len = static_cast<std::size_t>(next[i] - begin);
      simd::scatter_axpy(-lki, {val_.data() + begin, len}, {row_.data() + begin, len}, x.data());
      d -= lki * lki;
      row_[next[i]] = k;
      val_[next[i]] = lki;
      ++next[i];
    }
    if (!(d > threshold)) throw NotPositiveDefinite(a.perm_[k], d);
    const double lkk = std::sqrt(d);
    row_[next[k]] = k;
    val_[next[k]] = lkk;
    ++next[k];
    logdet_ += 2.0 * std::log(lkk);
  }
}

void CholFactor::check_dim(std::size_t n) const {
  if (n != static_cast<std::size_t>(dim())) throw std::invalid_argument("dimension mismatch");
}

void CholFactor::lower_solve(std::span<double> y) const {
  const auto cp = col_ptr();
  for (Index j = 0; j < dim(); ++j) {
    y[j] /= val_[cp[j]];
    const auto len = static_cast<std::size_t>(cp[j + 1] - cp[j] - 1);
    if (len > 0 && y[j] != 0.0) {
      simd::scatter_axpy(-y[j], {val_.data() + cp[j] + 1, len}, {row_.data() + cp[j] + 1, len},
                         y.data());
    }
  }
}

void CholFactor::upper_solve(std::span<double> y) const {
  const auto cp = col_ptr();
  for (Index j = dim() - 1; j >= 0; --j) {
    const auto len = static_cast<std::size_t>(cp[j + 1] - cp[j] - 1);
    const double s =
        simd::gather_dot({val_.data() + cp[j] + 1, len}, {row_.data() + cp[j] + 1, len}, y.data());
    y[j] = (y[j] - s) / val_[cp[j]];
  }
}

std::vector<double> CholFactor::solve(std::span<const double> b) const {
  check_dim(b.size());
  const auto perm = permutation();
  std::vector<double> y(b.size());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = b[perm[k]];
  lower_solve(y);
  upper_solve(y);
  std::vector<double> x(b.size());
  for (std::size_t k = 0; k < y.size(); ++k) x[perm[k]] = y[k];
  return x;
}

std::vector<double> CholFactor::whiten_sample(std::span<const double> z) const {
  check_dim(z.size());
  std::vector<double> u(z.begin(), z.end());
  upper_solve(u);
  const auto perm = permutation();
  std::vector<double> x(z.size());
  for (std::size_t k = 0; k < u.size(); ++k) x[perm[k]] = u[k];
  return x;
}

std::vector<double> CholFactor::half_solve(std::span<const double> b) const {
  check_dim(b.size());
  const auto perm = permutation();
  std::vector<double> y(b.size());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = b[perm[k]];
  lower_solve(y);
  return y;
}

std::vector<double> CholFactor::dense_lower() const {
  const auto n = static_cast<std::size_t>(dim());
  std::vector<double> d(n * n, 0.0);
  const auto cp = col_ptr();
  for (Index j = 0; j < dim(); ++j) {
    for (Index p = cp[j]; p < cp[j + 1]; ++p) d[static_cast<std::size_t>(row_[p]) * n + j] = val_[p];
  }
  return d;
}

CholFactor cholesky(const SparseSymMatrix& q) {
  return CholFactor(std::make_shared<const CholeskyAnalysis>(q), q);
}

}  // namespace spde::sparse
