#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "spde/mesh.hpp"

using namespace spde;
using mesh::Point2;

namespace {

std::vector<Point2> random_points(int n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, scale);
  std::vector<Point2> p(n);
  for (auto& q : p) q = {u(rng), u(rng)};
  return p;
}

double hull_area(const std::vector<Point2>& h) {
  double a = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& p = h[i];
    const auto& q = h[(i + 1) % h.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

// Largest incircle value of any node against any triangle, relative to the
// lifted scale. Delaunay means no node is strictly inside a circumcircle.
double worst_incircle(const mesh::Mesh2D& m) {
  const auto nodes = m.nodes();
  double worst = 0.0;
  for (const auto& t : m.triangles()) {
    const auto &a = nodes[t[0]], &b = nodes[t[1]], &c = nodes[t[2]];
    const double cx = (a.x + b.x + c.x) / 3.0, cy = (a.y + b.y + c.y) / 3.0;
    const double r = std::hypot(a.x - cx, a.y - cy) + std::hypot(b.x - cx, b.y - cy);
    for (mesh::Index v = 0; v < m.n_nodes(); ++v) {
      if (v == t[0] || v == t[1] || v == t[2]) continue;
      worst = std::max(worst, mesh::incircle(a, b, c, nodes[v]) / std::pow(r, 4));
    }
  }
  return worst;
}

}  // namespace

TEST(Mesh1D, UniformBuildCoversExtendedRange) {
  const auto m = mesh::build_mesh_1d(0.0, 10.0, 20, 0.2);
  EXPECT_DOUBLE_EQ(m.lo(), -2.0);
  EXPECT_DOUBLE_EQ(m.hi(), 12.0);
  const auto k = m.knots();
  for (std::size_t i = 1; i < k.size(); ++i) EXPECT_LE(k[i] - k[i - 1], 0.5 + 1e-12);
  EXPECT_EQ(m.interior_range().first, 0.0);
  EXPECT_EQ(m.interior_range().second, 10.0);
}

TEST(Mesh1D, RejectsBadInput) {
  EXPECT_THROW(mesh::build_mesh_1d(1.0, 1.0, 10), mesh::MeshError);
  EXPECT_THROW(mesh::build_mesh_1d(0.0, 1.0, 2), mesh::MeshError);
  EXPECT_THROW(mesh::Mesh1D({0.0, 1.0, 1.0, 2.0}), mesh::MeshError);
  EXPECT_THROW(mesh::Mesh1D({0.0, 1.0, 2.0}), mesh::MeshError);
}

TEST(Mesh1D, LocateSendsSharedKnotToLowerInterval) {
  const mesh::Mesh1D m({0.0, 1.0, 2.0, 3.0});
  EXPECT_EQ(mesh::locate(m, 1.0)->element, 0);
  EXPECT_EQ(mesh::locate(m, 0.0)->element, 0);
  EXPECT_EQ(mesh::locate(m, 3.0)->element, 2);
  EXPECT_DOUBLE_EQ(mesh::locate(m, 2.25)->offset, 0.25);
  EXPECT_FALSE(mesh::locate(m, 3.5).has_value());
  EXPECT_FALSE(mesh::locate(m, -0.1).has_value());
}

TEST(Delaunay, SquareGivesTwoTriangles) {
  const std::vector<Point2> p{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const auto m = mesh::delaunay_triangulate(p);
  EXPECT_EQ(m.n_triangles(), 2);
  EXPECT_NEAR(m.measure(), 1.0, 1e-15);
}

TEST(Delaunay, RandomPointsSatisfyEmptyCircumcircle) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const auto p = random_points(300, seed);
    const auto m = mesh::delaunay_triangulate(p);
    EXPECT_EQ(m.n_nodes(), 300);
    for (mesh::Index t = 0; t < m.n_triangles(); ++t) EXPECT_GT(m.signed_area(t), 0.0);
    const auto hull = mesh::convex_hull(p);
    // Euler: a triangulation of n points with h on the hull has 2n - 2 - h triangles.
    EXPECT_EQ(m.n_triangles(), 2 * 300 - 2 - static_cast<int>(hull.size()));
    EXPECT_NEAR(m.measure(), hull_area(hull), 1e-12);
    EXPECT_LE(worst_incircle(m), 1e-10);
  }
}

TEST(Delaunay, GridWithCocircularPointsIsValid) {
  std::vector<Point2> p;
  for (int i = 0; i < 15; ++i)
    for (int j = 0; j < 15; ++j) p.push_back({0.1 * i, 0.1 * j});
  const auto m = mesh::delaunay_triangulate(p);
  EXPECT_EQ(m.n_triangles(), 2 * 14 * 14);
  EXPECT_NEAR(m.measure(), 1.96, 1e-12);
  EXPECT_LE(worst_incircle(m), 1e-10);
}

TEST(Delaunay, IsDeterministic) {
  const auto p = random_points(200, 99, 50.0);
  const auto a = mesh::delaunay_triangulate(p);
  const auto b = mesh::delaunay_triangulate(p);
  EXPECT_TRUE(a == b);
}

TEST(Delaunay, LargeCoordinateOffsetsAreHandled) {
  auto p = random_points(150, 5, 1000.0);
  for (auto& q : p) {
    q.x += 5.0e5;
    q.y -= 3.0e6;
  }
  const auto m = mesh::delaunay_triangulate(p);
  EXPECT_EQ(m.n_nodes(), 150);
  const double area = hull_area(mesh::convex_hull(p));
  EXPECT_NEAR(m.measure(), area, 1e-9 * area);
}

TEST(Delaunay, RejectsDuplicatesAndCollinear) {
  std::vector<Point2> dup{{0, 0}, {1, 0}, {0, 1}, {1, 0}};
  EXPECT_THROW(mesh::delaunay_triangulate(dup), mesh::MeshError);
  std::vector<Point2> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  EXPECT_THROW(mesh::delaunay_triangulate(line), mesh::MeshError);
  std::vector<Point2> two{{0, 0}, {1, 1}};
  EXPECT_THROW(mesh::delaunay_triangulate(two), mesh::MeshError);
}

TEST(Mesh2D, ReorientsClockwiseTriangles) {
  const std::vector<Point2> p{{0, 0}, {1, 0}, {0, 1}};
  const mesh::Mesh2D m(p, {{0, 2, 1}});
  EXPECT_GT(m.signed_area(0), 0.0);
  EXPECT_EQ(m.boundary_edges().size(), 3u);
}

TEST(Mesh2D, RejectsBrokenTriangulations) {
  const std::vector<Point2> p{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  EXPECT_THROW(mesh::Mesh2D(p, {{0, 1, 2}}), mesh::MeshError);              // node 3 unused
  EXPECT_THROW(mesh::Mesh2D(p, {{0, 1, 2}, {0, 1, 5}}), mesh::MeshError);   // missing node
  EXPECT_THROW(mesh::Mesh2D(p, {{0, 1, 2}, {0, 1, 3}, {1, 2, 3}}), mesh::MeshError);
}

TEST(Locate, PointsOnSharedEdgesGoToLowestTriangle) {
  const std::vector<Point2> p{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const mesh::Mesh2D m(p, {{0, 1, 2}, {0, 2, 3}});
  const auto loc = mesh::locate(m, {0.5, 0.5});
  ASSERT_TRUE(loc.has_value());
  EXPECT_EQ(loc->element, 0);
  EXPECT_EQ(mesh::locate(m, {0.0, 0.0})->element, 0);
  EXPECT_EQ(mesh::locate(m, {0.2, 0.7})->element, 1);
  EXPECT_FALSE(mesh::locate(m, {1.5, 0.5}).has_value());
  const auto mid = mesh::locate(m, {0.75, 0.25});
  ASSERT_TRUE(mid.has_value());
  const auto& w = mid->barycentric;
  EXPECT_NEAR(w[0] + w[1] + w[2], 1.0, 1e-15);
}

TEST(Locate, BarycentricReproducesPoint) {
  const auto p = random_points(200, 17);
  const auto m = mesh::delaunay_triangulate(p);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int found = 0;
  for (int k = 0; k < 500; ++k) {
    const Point2 q{u(rng), u(rng)};
    const auto loc = mesh::locate(m, q);
    if (!loc) continue;
    ++found;
    const auto& t = m.triangles()[loc->element];
    double x = 0.0, y = 0.0;
    for (int i = 0; i < 3; ++i) {
      x += loc->barycentric[i] * m.nodes()[t[i]].x;
      y += loc->barycentric[i] * m.nodes()[t[i]].y;
    }
    EXPECT_NEAR(x, q.x, 1e-12);
    EXPECT_NEAR(y, q.y, 1e-12);
  }
  EXPECT_GT(found, 400);
}

TEST(Hull, ExtensionRingHasPredictedCountAndDistance) {
  const std::vector<Point2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
  const double margin = 0.3, spacing = 0.2;
  const auto pts = mesh::extend_hull(sq, margin, spacing);
  const int ring = static_cast<int>(pts.size()) - 5;
  const double perim = 4.0 + 2.0 * std::numbers::pi * margin;
  EXPECT_EQ(ring, static_cast<int>(std::ceil(perim / spacing)));
  EXPECT_EQ(ring, mesh::hull_ring_count(sq, margin, spacing));
  for (std::size_t i = 5; i < pts.size(); ++i) {
    const double dx = std::max({0.0 - pts[i].x, 0.0, pts[i].x - 1.0});
    const double dy = std::max({0.0 - pts[i].y, 0.0, pts[i].y - 1.0});
    EXPECT_NEAR(std::hypot(dx, dy), margin, 1e-12);
  }
  const auto m = mesh::delaunay_triangulate(pts);
  EXPECT_EQ(m.n_nodes(), static_cast<int>(pts.size()));
}

TEST(Hull, ExtendedMeshHasNoSlivers) {
  // Ring points on straight stretches of the offset curve are collinear up
  // to rounding; they must not be closed with near-zero-area triangles.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<Point2> pts(900);
  for (auto& p : pts) p = {u(rng), u(rng)};
  const auto m = mesh::delaunay_triangulate(mesh::extend_hull(pts, 1.5, 0.6));
  const double mean_area = m.measure() / m.n_triangles();
  double min_area = mean_area;
  for (mesh::Index t = 0; t < m.n_triangles(); ++t) min_area = std::min(min_area, m.signed_area(t));
  EXPECT_GT(min_area, 1e-6 * mean_area);
}

TEST(MeshIo, RoundTripIsBitwise) {
  const auto m2 = mesh::delaunay_triangulate(random_points(60, 8, 3.7));
  std::stringstream ss;
  mesh::write_mesh(ss, m2);
  const auto back = mesh::read_mesh(ss);
  ASSERT_TRUE(std::holds_alternative<mesh::Mesh2D>(back));
  EXPECT_TRUE(std::get<mesh::Mesh2D>(back) == m2);

  const mesh::Mesh1D m1({0.1, 0.35, 1.0 / 3.0 + 1.0, 2.0});
  std::stringstream s1;
  mesh::write_mesh(s1, m1);
  const auto b1 = mesh::read_mesh(s1);
  ASSERT_TRUE(std::holds_alternative<mesh::Mesh1D>(b1));
  const auto k0 = m1.knots();
  const auto k1 = std::get<mesh::Mesh1D>(b1).knots();
  EXPECT_TRUE(std::equal(k0.begin(), k0.end(), k1.begin(), k1.end()));
}

TEST(MeshIo, RejectsMalformedFiles) {
  std::istringstream a("mesh3d\nnodes 0\n");
  EXPECT_THROW(mesh::read_mesh(a), mesh::MeshError);
  std::istringstream b("mesh2d\nnodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1\n");
  EXPECT_THROW(mesh::read_mesh(b), mesh::MeshError);
  std::istringstream c("mesh1d\nnodes 4\n0\n1\n0.5\n2\n");
  EXPECT_THROW(mesh::read_mesh(c), mesh::MeshError);
}
