#include <algorithm>
#include <set>
#include <utility>

#include "spde/cholesky.hpp"

namespace spde::sparse {

// Minimum degree on the explicit elimination graph. Eliminating a node turns
// its remaining neighbourhood into a clique; degrees are kept in an ordered
// set so the (degree, index) minimum is always at the front.
std::vector<Index> minimum_degree_ordering(const SparseSymMatrix& q) {
  const Index n = q.dim();
  const auto& g = q.general();
  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (const Index j : g.row_cols(i)) {
      if (j != i) adj[i].push_back(j);
    }
  }

  std::set<std::pair<Index, Index>> queue;
  for (Index i = 0; i < n; ++i) queue.emplace(static_cast<Index>(adj[i].size()), i);

  std::vector<Index> perm;
  perm.reserve(static_cast<std::size_t>(n));
  std::vector<Index> merged;
  std::vector<Index> others;
  while (!queue.empty()) {
    const Index p = queue.begin()->second;
    queue.erase(queue.begin());
    perm.push_back(p);
    const std::vector<Index> nbrs = std::move(adj[p]);
    adj[p].clear();
    for (const Index u : nbrs) {
      auto& au = adj[u];
      queue.erase({static_cast<Index>(au.size()), u});
      others.clear();
      for (const Index v : nbrs) {
        if (v != u) others.push_back(v);
      }
      merged.clear();
      std::set_union(au.begin(), au.end(), others.begin(), others.end(),
                     std::back_inserter(merged));
      merged.erase(std::remove(merged.begin(), merged.end(), p), merged.end());
      au.swap(merged);
      queue.emplace(static_cast<Index>(au.size()), u);
    }
  }
  return perm;
}

std::vector<Index> invert_permutation(std::span<const Index> perm) {
  std::vector<Index> pinv(perm.size(), -1);
  for (std::size_t k = 0; k < perm.size(); ++k) {
    const Index p = perm[k];
    if (p < 0 || static_cast<std::size_t>(p) >= perm.size() || pinv[p] != -1) {
      throw std::invalid_argument("not a permutation");
    }
    pinv[p] = static_cast<Index>(k);
  }
  return pinv;
}

}  // namespace spde::sparse
