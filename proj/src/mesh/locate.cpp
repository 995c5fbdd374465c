#include <algorithm>
#include <cmath>

#include "spde/mesh.hpp"

namespace spde::mesh {
namespace {

constexpr double kBaryTolerance = 1e-12;

}  // namespace

TriangleLocator::TriangleLocator(const Mesh2D& mesh)
    : nodes_(mesh.nodes().begin(), mesh.nodes().end()),
      triangles_(mesh.triangles().begin(), mesh.triangles().end()) {
  double xmin = nodes_[0].x, xmax = nodes_[0].x, ymin = nodes_[0].y, ymax = nodes_[0].y;
  for (const auto& p : nodes_) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  // About one triangle per cell on average.
  const double w = std::max(xmax - xmin, 1e-300);
  const double h = std::max(ymax - ymin, 1e-300);
  cell_ = std::sqrt(w * h / std::max<std::size_t>(triangles_.size(), 1));
  if (!(cell_ > 0.0)) cell_ = std::max(w, h);
  nx_ = std::max<Index>(1, static_cast<Index>(std::ceil(w / cell_)));
  ny_ = std::max<Index>(1, static_cast<Index>(std::ceil(h / cell_)));
  x0_ = xmin;
  y0_ = ymin;
  cells_.resize(static_cast<std::size_t>(nx_) * ny_);
  for (Index t = 0; t < static_cast<Index>(triangles_.size()); ++t) {
    const auto& v = triangles_[t];
    double bx0 = nodes_[v[0]].x, bx1 = bx0, by0 = nodes_[v[0]].y, by1 = by0;
    for (int k = 1; k < 3; ++k) {
      bx0 = std::min(bx0, nodes_[v[k]].x);
      bx1 = std::max(bx1, nodes_[v[k]].x);
      by0 = std::min(by0, nodes_[v[k]].y);
      by1 = std::max(by1, nodes_[v[k]].y);
    }
    const auto clampi = [](double u, Index n) {
      return std::clamp<Index>(static_cast<Index>(std::floor(u)), 0, n - 1);
    };
    const Index i0 = clampi((bx0 - x0_) / cell_, nx_), i1 = clampi((bx1 - x0_) / cell_, nx_);
    const Index j0 = clampi((by0 - y0_) / cell_, ny_), j1 = clampi((by1 - y0_) / cell_, ny_);
    for (Index j = j0; j <= j1; ++j) {
      for (Index i = i0; i <= i1; ++i) cells_[static_cast<std::size_t>(j) * nx_ + i].push_back(t);
    }
  }
}

std::optional<ElementLocation> TriangleLocator::locate(const Point2& p) const {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) return std::nullopt;
  const double fi = (p.x - x0_) / cell_;
  const double fj = (p.y - y0_) / cell_;
  // Points a hair outside the bounding box may still hit a boundary edge within tolerance.
  if (fi < -1e-9 || fj < -1e-9 || fi > nx_ + 1e-9 || fj > ny_ + 1e-9) return std::nullopt;
  const Index i = std::clamp<Index>(static_cast<Index>(std::floor(fi)), 0, nx_ - 1);
  const Index j = std::clamp<Index>(static_cast<Index>(std::floor(fj)), 0, ny_ - 1);
  // Cell lists are built in increasing triangle order, so the first hit is the lowest index.
  for (const Index t : cells_[static_cast<std::size_t>(j) * nx_ + i]) {
    const auto& v = triangles_[t];
    const Point2& a = nodes_[v[0]];
    const Point2& b = nodes_[v[1]];
    const Point2& c = nodes_[v[2]];
    const double area = orient2d(a, b, c);
    std::array<double, 3> w{orient2d(b, c, p) / area, orient2d(c, a, p) / area,
                            orient2d(a, b, p) / area};
    if (w[0] < -kBaryTolerance || w[1] < -kBaryTolerance || w[2] < -kBaryTolerance) continue;
    for (auto& x : w) x = std::max(0.0, x);
    const double s = w[0] + w[1] + w[2];
    for (auto& x : w) x /= s;
    ElementLocation loc;
    loc.element = t;
    loc.barycentric = w;
    return loc;
  }
  return std::nullopt;
}

std::optional<ElementLocation> locate(const Mesh2D& mesh, const Point2& p) {
  return mesh.locator().locate(p);
}

}  // namespace spde::mesh
