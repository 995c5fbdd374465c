#include <algorithm>
#include <cmath>
#include <numbers>

#include "spde/mesh.hpp"

namespace spde::mesh {
namespace {

struct OffsetCurve {
  std::vector<Point2> hull;
  std::vector<Point2> normals;  // outward unit normal of edge i (hull[i] -> hull[i+1])
  std::vector<double> edge_len;
  std::vector<double> turn;  // exterior angle at hull[i+1]
  double perimeter = 0.0;    // of the offset curve
};

OffsetCurve offset_curve(std::span<const Point2> points, double margin) {
  OffsetCurve c;
  c.hull = convex_hull(points);
  const std::size_t h = c.hull.size();
  if (h < 3) throw MeshError("hull extension needs non-collinear points");
  for (std::size_t i = 0; i < h; ++i) {
    const Point2& a = c.hull[i];
    const Point2& b = c.hull[(i + 1) % h];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    c.edge_len.push_back(len);
    c.normals.push_back({(b.y - a.y) / len, -(b.x - a.x) / len});
  }
  for (std::size_t i = 0; i < h; ++i) {
    const Point2& n0 = c.normals[i];
    const Point2& n1 = c.normals[(i + 1) % h];
    double ang = std::atan2(n0.x * n1.y - n0.y * n1.x, n0.x * n1.x + n0.y * n1.y);
    if (ang < 0.0) ang += 2.0 * std::numbers::pi;
    c.turn.push_back(ang);
    c.perimeter += c.edge_len[i] + margin * ang;
  }
  return c;
}

}  // namespace

std::vector<Point2> convex_hull(std::span<const Point2> points) {
  std::vector<Point2> p(points.begin(), points.end());
  std::sort(p.begin(), p.end(),
            [](const Point2& a, const Point2& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
  p.erase(std::unique(p.begin(), p.end()), p.end());
  if (p.size() < 3) return p;
  std::vector<Point2> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && orient2d(h[k - 2], h[k - 1], p[i]) <= 0.0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && orient2d(h[k - 2], h[k - 1], p[i - 1]) <= 0.0) --k;
    h[k++] = p[i - 1];
  }
  h.resize(k - 1);
  return h;
}

Index hull_ring_count(std::span<const Point2> points, double margin, double spacing) {
  if (!(margin > 0.0) || !(spacing > 0.0)) throw MeshError("margin and spacing must be positive");
  const OffsetCurve c = offset_curve(points, margin);
  return std::max<Index>(3, static_cast<Index>(std::ceil(c.perimeter / spacing - 1e-9)));
}

// The offset curve at distance `margin` is the hull's edges pushed out along
// their normals, joined by circular arcs around each hull vertex. Ring points
// are equally spaced in arclength along it.
std::vector<Point2> extend_hull(std::span<const Point2> points, double margin, double spacing) {
  if (!(margin > 0.0) || !(spacing > 0.0)) throw MeshError("margin and spacing must be positive");
  const OffsetCurve c = offset_curve(points, margin);
  const Index count = hull_ring_count(points, margin, spacing);
  const double step = c.perimeter / count;
  const std::size_t h = c.hull.size();

  std::vector<Point2> out(points.begin(), points.end());
  out.reserve(out.size() + static_cast<std::size_t>(count));
  std::size_t seg = 0;
  double seg_start = 0.0;  // arclength at the start of edge `seg`
  for (Index k = 0; k < count; ++k) {
    const double s = k * step;
    while (seg + 1 < h && s >= seg_start + c.edge_len[seg] + margin * c.turn[seg]) {
      seg_start += c.edge_len[seg] + margin * c.turn[seg];
      ++seg;
    }
    const double local = s - seg_start;
    const Point2& a = c.hull[seg];
    const Point2& n0 = c.normals[seg];
    if (local <= c.edge_len[seg]) {
      const Point2& b = c.hull[(seg + 1) % h];
      const double t = local / c.edge_len[seg];
      out.push_back({a.x + t * (b.x - a.x) + margin * n0.x, a.y + t * (b.y - a.y) + margin * n0.y});
    } else {
      const Point2& v = c.hull[(seg + 1) % h];
      const double ang = std::atan2(n0.y, n0.x) + (local - c.edge_len[seg]) / margin;
      out.push_back({v.x + margin * std::cos(ang), v.y + margin * std::sin(ang)});
    }
  }
  return out;
}

}  // namespace spde::mesh
