#include <algorithm>

#include "spde/cholesky.hpp"

namespace spde::sparse {

// Takahashi recursion for Z = (L L^T)^{-1} restricted to the pattern of L.
// Column j needs Z(i, k) for i, k in the off-diagonal pattern S_j of column j;
// the fill property of L guarantees those entries lie in columns > j, which
// have already been computed when sweeping j downwards.
SelectedInverse CholFactor::selected_inverse() const {
  SelectedInverse z;
  z.pinv_.assign(analysis_->pinv_.begin(), analysis_->pinv_.end());
  z.col_ptr_.assign(col_ptr().begin(), col_ptr().end());
  z.row_ = row_;
  z.val_.assign(val_.size(), 0.0);

  const auto& cp = z.col_ptr_;
  std::vector<double> acc;
  for (Index j = dim() - 1; j >= 0; --j) {
    const Index begin = cp[j] + 1;
    const Index end = cp[j + 1];
    const auto m = static_cast<std::size_t>(end - begin);
    const double ljj = val_[cp[j]];
    acc.assign(m, 0.0);
    // acc[a] = sum_b L(S_b, j) * Z(S_a, S_b); visit each unordered pair once
    // through column S_b (the smaller index) of Z.
    for (std::size_t b = 0; b < m; ++b) {
      const Index k = row_[begin + b];
      const double lkj = val_[begin + b];
      Index p = cp[k];
      const Index pend = cp[k + 1];
      for (std::size_t a = b; a < m; ++a) {
        const Index i = row_[begin + a];
        while (p < pend && z.row_[p] < i) ++p;
        if (p == pend || z.row_[p] != i) continue;  // unreachable for a valid factor
        const double zik = z.val_[p];
        acc[a] += lkj * zik;
        if (a != b) acc[b] += val_[begin + a] * zik;
      }
    }
    double diag_sum = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      const double zij = -acc[a] / ljj;
      z.val_[begin + a] = zij;
      diag_sum += val_[begin + a] * zij;
    }
    z.val_[cp[j]] = 1.0 / (ljj * ljj) - diag_sum / ljj;
  }
  return z;
}

const double* SelectedInverse::find(Index i, Index j) const {
  if (i < 0 || j < 0 || i >= dim() || j >= dim()) return nullptr;
  Index r = pinv_[i];
  Index c = pinv_[j];
  if (r < c) std::swap(r, c);
  const auto first = row_.begin() + col_ptr_[c];
  const auto last = row_.begin() + col_ptr_[c + 1];
  const auto it = std::lower_bound(first, last, r);
  if (it == last || *it != r) return nullptr;
  return &val_[static_cast<std::size_t>(it - row_.begin())];
}

bool SelectedInverse::contains(Index i, Index j) const { return find(i, j) != nullptr; }

double SelectedInverse::operator()(Index i, Index j) const {
  const double* v = find(i, j);
  if (v == nullptr) throw std::out_of_range("entry outside the selected-inverse pattern");
  return *v;
}

double SelectedInverse::trace_product(const SparseSymMatrix& m) const {
  if (m.dim() != dim()) throw std::invalid_argument("trace_product: dimension mismatch");
  const auto& g = m.general();
  double s = 0.0;
  for (Index i = 0; i < g.rows(); ++i) {
    const auto cols = g.row_cols(i);
    const auto vals = g.row_values(i);
    for (std::size_t p = 0; p < cols.size(); ++p) s += vals[p] * (*this)(i, cols[p]);
  }
  return s;
}

std::vector<double> SelectedInverse::diagonal() const {
  std::vector<double> d(static_cast<std::size_t>(dim()));
  for (Index i = 0; i < dim(); ++i) d[i] = (*this)(i, i);
  return d;
}

}  // namespace spde::sparse
