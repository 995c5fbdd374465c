#pragma once

// Discretization domains: 1D interval meshes with boundary extension and 2D
// Delaunay triangulations, plus point location and the text mesh format.

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "spde/sparse.hpp"

namespace spde::mesh {

using sparse::Index;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Mesh1D {
 public:
  /// Validates: at least 4 strictly increasing knots, interior range inside
  /// the knot span, non-negative extension.
  Mesh1D(std::vector<double> knots, double interior_lo, double interior_hi, double extension);
  explicit Mesh1D(std::vector<double> knots);

  std::span<const double> knots() const { return knots_; }
  Index n_knots() const { return static_cast<Index>(knots_.size()); }
  Index n_intervals() const { return n_knots() - 1; }
  double lo() const { return knots_.front(); }
  double hi() const { return knots_.back(); }
  std::pair<double, double> interior_range() const { return {interior_lo_, interior_hi_}; }
  double extension() const { return extension_; }
  double measure() const { return hi() - lo(); }

  friend bool operator==(const Mesh1D&, const Mesh1D&) = default;

 private:
  std::vector<double> knots_;
  double interior_lo_;
  double interior_hi_;
  double extension_;
};

/// Uniform knots over [lo - e, hi + e], e = extension_fraction * (hi - lo),
/// with spacing no larger than (hi - lo) / n_intervals.
Mesh1D build_mesh_1d(double lo, double hi, int n_intervals, double extension_fraction = 0.2);

using Triangle = std::array<Index, 3>;

class TriangleLocator;

class Mesh2D {
 public:
  /// Reorients clockwise triangles; rejects degenerate ones, unused nodes and
  /// non-conforming edge incidence (an edge in more than two triangles).
  Mesh2D(std::vector<Point2> nodes, std::vector<Triangle> triangles);

  std::span<const Point2> nodes() const { return nodes_; }
  std::span<const Triangle> triangles() const { return triangles_; }
  Index n_nodes() const { return static_cast<Index>(nodes_.size()); }
  Index n_triangles() const { return static_cast<Index>(triangles_.size()); }
  /// Edges belonging to exactly one triangle, oriented with the mesh on the left.
  std::span<const std::array<Index, 2>> boundary_edges() const { return boundary_; }

  double signed_area(Index t) const;
  double measure() const;
  const TriangleLocator& locator() const { return *locator_; }

  friend bool operator==(const Mesh2D& a, const Mesh2D& b) {
    return a.nodes_ == b.nodes_ && a.triangles_ == b.triangles_;
  }

 private:
  std::vector<Point2> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<std::array<Index, 2>> boundary_;
  std::shared_ptr<const TriangleLocator> locator_;
};

double orient2d(const Point2& a, const Point2& b, const Point2& c);

/// > 0 when d lies inside the circumcircle of the counter-clockwise triangle abc.
double incircle(const Point2& a, const Point2& b, const Point2& c, const Point2& d);

/// Bowyer-Watson with a super-triangle, followed by hull-pocket filling and
/// Lawson flips. Deterministic for a fixed input order.
Mesh2D delaunay_triangulate(std::span<const Point2> points);

/// Counter-clockwise convex hull without collinear vertices.
std::vector<Point2> convex_hull(std::span<const Point2> points);

/// Input points followed by a ring at distance `margin` outside the convex
/// hull, spaced about `spacing` apart along the offset curve.
std::vector<Point2> extend_hull(std::span<const Point2> points, double margin, double spacing);

/// Number of ring points extend_hull adds: ceil((hull perimeter + 2 pi margin) / spacing), at least 3.
Index hull_ring_count(std::span<const Point2> points, double margin, double spacing);

struct ElementLocation {
  Index element = -1;
  /// 1D: distance from the interval's left knot. Unused in 2D.
  double offset = 0.0;
  /// 2D: barycentric weights of the triangle's vertices. 1D: {1 - t, t, 0}
  /// with t the offset relative to the interval length.
  std::array<double, 3> barycentric{};
};

/// Interval containing x; a knot shared by two intervals goes to the lower one.
std::optional<ElementLocation> locate(const Mesh1D& mesh, double x);

/// Triangle containing p; shared edges and vertices go to the lowest triangle index.
std::optional<ElementLocation> locate(const Mesh2D& mesh, const Point2& p);

class TriangleLocator {
 public:
  explicit TriangleLocator(const Mesh2D& mesh);
  std::optional<ElementLocation> locate(const Point2& p) const;

 private:
  std::vector<Point2> nodes_;
  std::vector<Triangle> triangles_;
  double x0_ = 0.0;
  double y0_ = 0.0;
  double cell_ = 1.0;
  Index nx_ = 1;
  Index ny_ = 1;
  std::vector<std::vector<Index>> cells_;
};

using Mesh = std::variant<Mesh1D, Mesh2D>;

void write_mesh(std::ostream& out, const Mesh& mesh);
void write_mesh(const std::string& path, const Mesh& mesh);
Mesh read_mesh(std::istream& in);
Mesh read_mesh(const std::string& path);

}  // namespace spde::mesh
