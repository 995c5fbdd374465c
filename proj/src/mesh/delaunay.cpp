#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "spde/mesh.hpp"

namespace spde::mesh {
namespace {

constexpr double kPredicateTolerance = 1e-12;
constexpr double kDuplicateTolerance = 1e-12;
constexpr double kSuperScale = 100.0;
// Hull corners flatter than this (relative determinant) are left open rather
// than closed with a sliver; rounding makes collinear ring points look reflex.
constexpr double kPocketTolerance = 1e-8;

// Tolerance-aware predicates: the sign is trusted only when the determinant
// exceeds kPredicateTolerance times the sum of magnitudes of its terms.
double orient_tol(const Point2& a, const Point2& b, const Point2& c, double tol = kPredicateTolerance) {
  const double l = (b.x - a.x) * (c.y - a.y);
  const double r = (b.y - a.y) * (c.x - a.x);
  const double det = l - r;
  return std::abs(det) <= tol * (std::abs(l) + std::abs(r)) ? 0.0 : det;
}

double incircle_tol(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;
  const double t1 = alift * (bdx * cdy - cdx * bdy);
  const double t2 = blift * (cdx * ady - adx * cdy);
  const double t3 = clift * (adx * bdy - bdx * ady);
  const double det = t1 + t2 + t3;
  const double perm = alift * (std::abs(bdx * cdy) + std::abs(cdx * bdy)) +
                      blift * (std::abs(cdx * ady) + std::abs(adx * cdy)) +
                      clift * (std::abs(adx * bdy) + std::abs(bdx * ady));
  return std::abs(det) <= kPredicateTolerance * perm ? 0.0 : det;
}

std::uint64_t edge_key(Index a, Index b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

void check_input(std::span<const Point2> pts) {
  if (pts.size() < 3) throw MeshError("triangulation needs at least 3 points");
  for (const auto& p : pts) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw MeshError("non-finite point");
  }
  std::vector<Index> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return pts[a].x != pts[b].x ? pts[a].x < pts[b].x : pts[a].y < pts[b].y;
  });
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const auto& p = pts[order[i]];
      const auto& q = pts[order[j]];
      if (q.x - p.x > kDuplicateTolerance) break;
      if (std::abs(q.y - p.y) <= kDuplicateTolerance) {
        throw MeshError("duplicate points " + std::to_string(order[i]) + " and " +
                        std::to_string(order[j]));
      }
    }
  }
  // Collinearity: every point on the line through the first point and the farthest one.
  std::size_t far = 0;
  double best = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double d = std::hypot(pts[i].x - pts[0].x, pts[i].y - pts[0].y);
    if (d > best) {
      best = d;
      far = i;
    }
  }
  bool collinear = true;
  for (std::size_t i = 1; i < pts.size() && collinear; ++i) {
    if (orient_tol(pts[0], pts[far], pts[i]) != 0.0) collinear = false;
  }
  if (collinear) throw MeshError("points are collinear");
}

class BowyerWatson {
 public:
  explicit BowyerWatson(std::vector<Point2> pts) : pts_(std::move(pts)), n_(Index(pts_.size())) {
    // Super-triangle around the normalized point cloud (which fits in [-0.5, 0.5]^2).
    const double k = kSuperScale;
    pts_.push_back({-3.0 * k, -3.0 * k});
    pts_.push_back({3.0 * k, -3.0 * k});
    pts_.push_back({0.0, 3.0 * k});
    add_triangle({n_, n_ + 1, n_ + 2});
  }

  void insert_all() {
    for (Index p = 0; p < n_; ++p) insert(p);
  }

  std::vector<Triangle> finish() {
    std::vector<Triangle> out;
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      if (!alive_[t]) continue;
      const auto& v = tris_[t];
      if (v[0] >= n_ || v[1] >= n_ || v[2] >= n_) kill(static_cast<Index>(t));
    }
    fill_hull_pockets();
    lawson_flips();
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      if (alive_[t]) out.push_back(tris_[t]);
    }
    return out;
  }

 private:
  Index add_triangle(const Triangle& v) {
    const auto t = static_cast<Index>(tris_.size());
    tris_.push_back(v);
    alive_.push_back(true);
    for (int e = 0; e < 3; ++e) edges_[edge_key(v[e], v[(e + 1) % 3])] = t;
    last_ = t;
    return t;
  }

  void kill(Index t) {
    alive_[t] = false;
    const auto& v = tris_[t];
    for (int e = 0; e < 3; ++e) {
      const auto it = edges_.find(edge_key(v[e], v[(e + 1) % 3]));
      if (it != edges_.end() && it->second == t) edges_.erase(it);
    }
  }

  Index neighbour(Index a, Index b) const {
    const auto it = edges_.find(edge_key(b, a));
    return it == edges_.end() ? -1 : it->second;
  }

  Index find_containing(const Point2& p) const {
    Index t = last_;
    if (t < 0 || !alive_[t]) t = first_alive();
    const std::size_t max_steps = 4 * tris_.size() + 16;
    for (std::size_t step = 0; step < max_steps; ++step) {
      const auto& v = tris_[t];
      Index next = -1;
      for (int e = 0; e < 3; ++e) {
        if (orient_tol(pts_[v[e]], pts_[v[(e + 1) % 3]], p) < 0.0) {
          next = neighbour(v[e], v[(e + 1) % 3]);
          if (next >= 0) break;
        }
      }
      if (next < 0) return t;
      t = next;
    }
    // The walk can cycle on degenerate configurations; scan instead.
    for (std::size_t s = 0; s < tris_.size(); ++s) {
      if (!alive_[s]) continue;
      const auto& v = tris_[s];
      if (orient_tol(pts_[v[0]], pts_[v[1]], p) >= 0.0 &&
          orient_tol(pts_[v[1]], pts_[v[2]], p) >= 0.0 &&
          orient_tol(pts_[v[2]], pts_[v[0]], p) >= 0.0) {
        return static_cast<Index>(s);
      }
    }
    throw MeshError("point location failed during triangulation");
  }

  Index first_alive() const {
    for (std::size_t t = tris_.size(); t-- > 0;) {
      if (alive_[t]) return static_cast<Index>(t);
    }
    throw MeshError("empty triangulation");
  }

  void insert(Index pi) {
    const Point2& p = pts_[pi];
    const Index start = find_containing(p);

    std::vector<Index> cavity{start};
    std::unordered_set<Index> in_cavity{start};
    for (std::size_t k = 0; k < cavity.size(); ++k) {
      const auto v = tris_[cavity[k]];
      for (int e = 0; e < 3; ++e) {
        const Index nb = neighbour(v[e], v[(e + 1) % 3]);
        if (nb < 0 || in_cavity.count(nb)) continue;
        const auto& w = tris_[nb];
        if (incircle_tol(pts_[w[0]], pts_[w[1]], pts_[w[2]], p) > 0.0) {
          in_cavity.insert(nb);
          cavity.push_back(nb);
        }
      }
    }

    // Grow the cavity until it is star-shaped as seen from p.
    std::vector<std::array<Index, 2>> boundary;
    for (;;) {
      boundary.clear();
      Index grow = -1;
      for (const Index t : cavity) {
        const auto& v = tris_[t];
        for (int e = 0; e < 3; ++e) {
          const Index a = v[e];
          const Index b = v[(e + 1) % 3];
          const Index nb = neighbour(a, b);
          if (nb >= 0 && in_cavity.count(nb)) continue;
          if (orient_tol(pts_[a], pts_[b], p) <= 0.0) {
            if (nb < 0) throw MeshError("cannot insert point outside the super-triangle");
            grow = nb;
            break;
          }
          boundary.push_back({a, b});
        }
        if (grow >= 0) break;
      }
      if (grow < 0) break;
      in_cavity.insert(grow);
      cavity.push_back(grow);
    }

    for (const Index t : cavity) kill(t);
    for (const auto& e : boundary) add_triangle({e[0], e[1], pi});
  }

  void fill_hull_pockets() {
    for (;;) {
      // Boundary loop: directed edges a->b with no twin, interior on the left.
      std::map<Index, Index> next;
      std::map<Index, Index> prev;
      for (std::size_t t = 0; t < tris_.size(); ++t) {
        if (!alive_[t]) continue;
        const auto& v = tris_[t];
        for (int e = 0; e < 3; ++e) {
          const Index a = v[e];
          const Index b = v[(e + 1) % 3];
          if (neighbour(a, b) < 0) {
            next[a] = b;
            prev[b] = a;
          }
        }
      }
      bool changed = false;
      for (const auto& [b, c] : next) {
        const auto ip = prev.find(b);
        if (ip == prev.end()) continue;
        const Index a = ip->second;
        if (a == c) continue;
        if (orient_tol(pts_[a], pts_[b], pts_[c], kPocketTolerance) >= 0.0) continue;
        // Reflex corner: the triangle (b, a, c) closes it if it holds no other boundary vertex.
        bool ear = true;
        for (const auto& [q, unused] : next) {
          (void)unused;
          if (q == a || q == b || q == c) continue;
          const Point2& s = pts_[q];
          if (orient_tol(pts_[b], pts_[a], s) >= 0.0 && orient_tol(pts_[a], pts_[c], s) >= 0.0 &&
              orient_tol(pts_[c], pts_[b], s) >= 0.0) {
            ear = false;
            break;
          }
        }
        if (!ear) continue;
        add_triangle({b, a, c});
        changed = true;
        break;
      }
      if (!changed) return;
    }
  }

  void lawson_flips() {
    bool flipped = true;
    std::size_t rounds = 0;
    while (flipped && rounds++ < 1000) {
      flipped = false;
      for (std::size_t t = 0; t < tris_.size(); ++t) {
        if (!alive_[t]) continue;
        for (int e = 0; e < 3; ++e) {
          const auto v = tris_[t];
          const Index a = v[e];
          const Index b = v[(e + 1) % 3];
          const Index c = v[(e + 2) % 3];
          const Index nb = neighbour(a, b);
          if (nb < 0) continue;
          const auto& w = tris_[nb];
          Index d = -1;
          for (int f = 0; f < 3; ++f) {
            if (w[f] != a && w[f] != b) d = w[f];
          }
          if (incircle_tol(pts_[a], pts_[b], pts_[c], pts_[d]) <= 0.0) continue;
          if (orient_tol(pts_[c], pts_[a], pts_[d]) <= 0.0 ||
              orient_tol(pts_[d], pts_[b], pts_[c]) <= 0.0) {
            continue;
          }
          kill(static_cast<Index>(t));
          kill(nb);
          add_triangle({c, a, d});
          add_triangle({d, b, c});
          flipped = true;
          break;
        }
      }
    }
  }

  std::vector<Point2> pts_;
  Index n_;
  std::vector<Triangle> tris_;
  std::vector<bool> alive_;
  std::unordered_map<std::uint64_t, Index> edges_;
  Index last_ = -1;
};

}  // namespace

double orient2d(const Point2& a, const Point2& b, const Point2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

double incircle(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  return (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) +
         (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy) +
         (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
}

Mesh2D::Mesh2D(std::vector<Point2> nodes, std::vector<Triangle> triangles)
    : nodes_(std::move(nodes)), triangles_(std::move(triangles)) {
  const Index n = n_nodes();
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  std::unordered_map<std::uint64_t, int> directed;
  for (auto& t : triangles_) {
    for (const Index v : t) {
      if (v < 0 || v >= n) throw MeshError("triangle references a missing node");
      used[v] = 1;
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) throw MeshError("triangle repeats a node");
    const double a = orient2d(nodes_[t[0]], nodes_[t[1]], nodes_[t[2]]);
    if (a == 0.0 || !std::isfinite(a)) throw MeshError("degenerate triangle (zero area)");
    if (a < 0.0) std::swap(t[1], t[2]);
    for (int e = 0; e < 3; ++e) {
      if (++directed[edge_key(t[e], t[(e + 1) % 3])] > 1) {
        throw MeshError("non-conforming triangulation: repeated oriented edge");
      }
    }
  }
  for (Index v = 0; v < n; ++v) {
    if (!used[v]) throw MeshError("node " + std::to_string(v) + " belongs to no triangle");
  }
  for (const auto& t : triangles_) {
    for (int e = 0; e < 3; ++e) {
      const Index a = t[e];
      const Index b = t[(e + 1) % 3];
      if (!directed.count(edge_key(b, a))) boundary_.push_back({a, b});
    }
  }
  locator_ = std::make_shared<const TriangleLocator>(*this);
}

double Mesh2D::signed_area(Index t) const {
  const auto& v = triangles_.at(static_cast<std::size_t>(t));
  return 0.5 * orient2d(nodes_[v[0]], nodes_[v[1]], nodes_[v[2]]);
}

double Mesh2D::measure() const {
  double a = 0.0;
  for (Index t = 0; t < n_triangles(); ++t) a += signed_area(t);
  return a;
}

Mesh2D delaunay_triangulate(std::span<const Point2> points) {
  check_input(points);
  double xmin = points[0].x, xmax = points[0].x, ymin = points[0].y, ymax = points[0].y;
  for (const auto& p : points) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double cx = 0.5 * (xmin + xmax);
  const double cy = 0.5 * (ymin + ymax);
  const double scale = std::max(xmax - xmin, ymax - ymin);
  std::vector<Point2> normalized;
  normalized.reserve(points.size());
  for (const auto& p : points) normalized.push_back({(p.x - cx) / scale, (p.y - cy) / scale});

  BowyerWatson bw(std::move(normalized));
  bw.insert_all();
  auto triangles = bw.finish();
  return Mesh2D({points.begin(), points.end()}, std::move(triangles));
}

}  // namespace spde::mesh
