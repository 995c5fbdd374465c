#include <algorithm>
#include <stdexcept>

#include "spde/fem.hpp"

namespace spde::fem {

Basis::Basis(BasisKind kind, int degree, mesh::Mesh mesh)
    : kind_(kind), degree_(degree), size_(0), mesh_(std::move(mesh)) {
  if (kind_ == BasisKind::bspline_1d) {
    const auto& m = std::get<mesh::Mesh1D>(mesh_);
    const auto k = m.knots();
    knot_vector_.assign(static_cast<std::size_t>(degree_), k.front());
    knot_vector_.insert(knot_vector_.end(), k.begin(), k.end());
    knot_vector_.insert(knot_vector_.end(), static_cast<std::size_t>(degree_), k.back());
    size_ = m.n_intervals() + degree_;
  } else {
    size_ = std::get<mesh::Mesh2D>(mesh_).n_nodes();
  }
}

Basis Basis::bspline(mesh::Mesh1D mesh, int degree) {
  if (degree != 1 && degree != 2) {
    throw std::invalid_argument("B-spline degree must be 1 or 2, got " + std::to_string(degree));
  }
  return Basis(BasisKind::bspline_1d, degree, std::move(mesh));
}

Basis Basis::piecewise_linear(mesh::Mesh2D mesh) {
  return Basis(BasisKind::piecewise_linear_2d, 1, std::move(mesh));
}

Basis Basis::on(const mesh::Mesh& mesh, int degree) {
  if (const auto* m1 = std::get_if<mesh::Mesh1D>(&mesh)) return bspline(*m1, degree);
  if (degree != 1) throw std::invalid_argument("2D meshes support only piecewise-linear bases");
  return piecewise_linear(std::get<mesh::Mesh2D>(mesh));
}

double Basis::measure() const {
  return std::visit([](const auto& m) { return m.measure(); }, mesh_);
}

// Derivatives of the nonzero B-splines on one knot span (Piegl and Tiller,
// "The NURBS Book", algorithm A2.3).
std::vector<std::vector<double>> bspline_derivatives(const Basis& basis, Index element, double x,
                                                     int n_derivs) {
  if (basis.kind() != BasisKind::bspline_1d) throw std::logic_error("not a 1D spline basis");
  const int p = basis.degree();
  const auto U = basis.knot_vector();
  const auto s = static_cast<std::size_t>(element + p);
  const int n = std::min(n_derivs, p);

  std::vector<std::vector<double>> ndu(p + 1, std::vector<double>(p + 1, 0.0));
  std::vector<double> left(p + 1, 0.0), right(p + 1, 0.0);
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - U[s + 1 - j];
    right[j] = U[s + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }

  std::vector<std::vector<double>> ders(n_derivs + 1, std::vector<double>(p + 1, 0.0));
  for (int j = 0; j <= p; ++j) ders[0][j] = ndu[j][p];

  std::vector<std::vector<double>> a(2, std::vector<double>(p + 1, 0.0));
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= n; ++k) {
      double d = 0.0;
      const int rk = r - k, pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      ders[k][r] = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= n; ++k) {
    for (int j = 0; j <= p; ++j) ders[k][j] *= factor;
    factor *= (p - k);
  }
  return ders;
}

BasisValues eval_basis(const Basis& basis, const Point2& x) {
  BasisValues out;
  if (basis.kind() == BasisKind::bspline_1d) {
    const auto loc = mesh::locate(basis.mesh1d(), x.x);
    if (!loc) {
      out.outside = true;
      return out;
    }
    const auto d = bspline_derivatives(basis, loc->element, x.x, 0);
    for (int j = 0; j <= basis.degree(); ++j) {
      out.index.push_back(loc->element + j);
      out.value.push_back(d[0][j]);
    }
    return out;
  }
  const auto& m = basis.mesh2d();
  const auto loc = mesh::locate(m, x);
  if (!loc) {
    out.outside = true;
    return out;
  }
  const auto& tri = m.triangles()[loc->element];
  for (int k = 0; k < 3; ++k) {
    out.index.push_back(tri[k]);
    out.value.push_back(loc->barycentric[k]);
  }
  return out;
}

Projection projection_matrix(const Basis& basis, std::span<const Point2> locations) {
  Projection proj;
  std::vector<sparse::Triplet> trips;
  trips.reserve(locations.size() * 3);
  for (std::size_t i = 0; i < locations.size(); ++i) {
    const BasisValues v = eval_basis(basis, locations[i]);
    if (v.outside) {
      proj.outside.push_back(static_cast<Index>(i));
      continue;
    }
    for (std::size_t k = 0; k < v.index.size(); ++k) {
      trips.push_back({static_cast<Index>(i), v.index[k], v.value[k]});
    }
  }
  proj.A = SparseMatrix::from_triplets(static_cast<Index>(locations.size()), basis.size(), trips);
  return proj;
}

}  // namespace spde::fem
