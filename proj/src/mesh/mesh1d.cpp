#include <algorithm>
#include <cmath>

#include "spde/mesh.hpp"

namespace spde::mesh {

Mesh1D::Mesh1D(std::vector<double> knots, double interior_lo, double interior_hi,
               double extension)
    : knots_(std::move(knots)),
      interior_lo_(interior_lo),
      interior_hi_(interior_hi),
      extension_(extension) {
  if (knots_.size() < 4) throw MeshError("1D mesh needs at least 4 knots");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i])) throw MeshError("non-finite knot");
    if (i > 0 && !(knots_[i] > knots_[i - 1])) throw MeshError("knots must be strictly increasing");
  }
  if (!(interior_lo_ <= interior_hi_) || interior_lo_ < knots_.front() ||
      interior_hi_ > knots_.back()) {
    throw MeshError("interior range must lie inside the knot span");
  }
  if (!(extension_ >= 0.0)) throw MeshError("extension must be non-negative");
}

Mesh1D::Mesh1D(std::vector<double> knots)
    : Mesh1D(knots, knots.empty() ? 0.0 : knots.front(), knots.empty() ? 0.0 : knots.back(), 0.0) {}

Mesh1D build_mesh_1d(double lo, double hi, int n_intervals, double extension_fraction) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw MeshError("degenerate 1D range: need lo < hi");
  }
  if (n_intervals < 3) throw MeshError("need at least 3 intervals");
  if (!(extension_fraction >= 0.0)) throw MeshError("extension fraction must be non-negative");

  const double width = hi - lo;
  const double e = extension_fraction * width;
  const double h0 = width / n_intervals;
  const double span = width + 2.0 * e;
  const auto n = static_cast<int>(std::ceil(span / h0 - 1e-9));
  const double h = span / n;
  std::vector<double> knots(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) knots[k] = (lo - e) + k * h;
  knots.back() = hi + e;
  return Mesh1D(std::move(knots), lo, hi, e);
}

std::optional<ElementLocation> locate(const Mesh1D& mesh, double x) {
  const auto k = mesh.knots();
  if (!std::isfinite(x) || x < k.front() || x > k.back()) return std::nullopt;
  // First knot >= x; x on knot j (j > 0) belongs to interval j - 1.
  const auto it = std::lower_bound(k.begin(), k.end(), x);
  Index e = static_cast<Index>(it - k.begin()) - 1;
  if (e < 0) e = 0;
  ElementLocation loc;
  loc.element = e;
  loc.offset = x - k[e];
  const double t = loc.offset / (k[e + 1] - k[e]);
  loc.barycentric = {1.0 - t, t, 0.0};
  return loc;
}

}  // namespace spde::mesh
