#include <array>
#include <cmath>
#include <stdexcept>

#include "spde/fem.hpp"

namespace spde::fem {
namespace {

// 3-point Gauss-Legendre on [-1, 1]; exact through degree 5.
const std::array<double, 3> kGaussNodes{-0.77459666924148337704, 0.0, 0.77459666924148337704};
const std::array<double, 3> kGaussWeights{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

void assemble_1d(const Basis& basis, std::vector<sparse::Triplet>& c, std::vector<sparse::Triplet>& g1,
                 std::vector<sparse::Triplet>& g2) {
  const auto& m = basis.mesh1d();
  const auto knots = m.knots();
  const int p = basis.degree();
  for (Index e = 0; e < m.n_intervals(); ++e) {
    const double a = knots[e], b = knots[e + 1];
    const double h = b - a;
    if (!(h > 0.0)) throw mesh::MeshError("degenerate interval " + std::to_string(e));
    for (int q = 0; q < 3; ++q) {
      const double x = 0.5 * (a + b) + 0.5 * h * kGaussNodes[q];
      const double w = 0.5 * h * kGaussWeights[q];
      const auto d = bspline_derivatives(basis, e, x, 2);
      for (int i = 0; i <= p; ++i) {
        for (int j = i; j <= p; ++j) {
          c.push_back({e + i, e + j, w * d[0][i] * d[0][j]});
          g1.push_back({e + i, e + j, w * d[1][i] * d[1][j]});
          if (p == 2) g2.push_back({e + i, e + j, w * d[2][i] * d[2][j]});
        }
      }
    }
  }
}

// Interior 3-point rule, exact for quadratics: the P1 mass products.
void assemble_2d(const Basis& basis, std::vector<sparse::Triplet>& c,
                 std::vector<sparse::Triplet>& g1) {
  const auto& m = basis.mesh2d();
  const auto nodes = m.nodes();
  constexpr std::array<std::array<double, 3>, 3> kPoints{{{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
                                                         {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
                                                         {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}}};
  for (Index t = 0; t < m.n_triangles(); ++t) {
    const auto& v = m.triangles()[t];
    const double area2 = mesh::orient2d(nodes[v[0]], nodes[v[1]], nodes[v[2]]);
    if (!(area2 > 0.0)) throw mesh::MeshError("degenerate triangle " + std::to_string(t));
    const double area = 0.5 * area2;
    // grad phi_k = perp(opposite edge) / (2 area).
    std::array<std::array<double, 2>, 3> grad;
    for (int k = 0; k < 3; ++k) {
      const auto& p1 = nodes[v[(k + 1) % 3]];
      const auto& p2 = nodes[v[(k + 2) % 3]];
      grad[k] = {(p1.y - p2.y) / area2, (p2.x - p1.x) / area2};
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const Index r = v[i], s = v[j];
        if (r > s) continue;
        double mass = 0.0;
        for (const auto& bary : kPoints) mass += (area / 3.0) * bary[i] * bary[j];
        c.push_back({r, s, mass});
        g1.push_back({r, s, area * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1])});
      }
    }
  }
}

// Triplets carry (i <= j) contributions; mirror them into the full matrix.
SparseSymMatrix from_upper(const std::vector<sparse::Triplet>& upper, Index n) {
  return SparseSymMatrix::from_triplets(upper, n);
}

}  // namespace

FemMatrices fem_matrices(const Basis& basis, G2Construction g2) {
  const Index n = basis.size();
  std::vector<sparse::Triplet> c, g1, g2d;
  if (basis.kind() == BasisKind::bspline_1d) {
    assemble_1d(basis, c, g1, g2d);
  } else {
    assemble_2d(basis, c, g1);
  }

  FemMatrices fem;
  fem.C = from_upper(c, n);
  fem.G1 = from_upper(g1, n);
  fem.C_lumped = fem.C.general().row_sums();
  for (Index i = 0; i < n; ++i) {
    if (!(fem.C_lumped[i] > 0.0)) {
      throw mesh::MeshError("basis function " + std::to_string(i) + " has zero lumped mass");
    }
  }
  if (!g2d.empty()) fem.G2_direct = from_upper(g2d, n);

  if (g2 == G2Construction::direct) {
    if (!fem.G2_direct) {
      throw std::invalid_argument("direct G2 needs a 1D degree-2 basis");
    }
    fem.G2 = *fem.G2_direct;
    fem.g2_used = G2Construction::direct;
  } else {
    std::vector<double> inv(fem.C_lumped.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / fem.C_lumped[i];
    fem.G2 = sparse::sandwich_diagonal(fem.G1, inv);
    fem.g2_used = G2Construction::galerkin;
  }
  return fem;
}

SparseMatrix operator_matrix(const FemMatrices& fem, double kappa, double tau, MassMatrix mass) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("kappa must be >= 0");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be > 0");
  const SparseSymMatrix m = mass == MassMatrix::lumped ? fem.lumped() : fem.C;
  return sparse::add(m.general(), fem.G1.general(), tau * kappa * kappa, tau);
}

std::vector<double> noise_precision(const FemMatrices& fem) {
  std::vector<double> q(fem.C_lumped.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!(fem.C_lumped[i] > 0.0)) {
      throw std::domain_error("zero lumped mass at basis function " + std::to_string(i));
    }
    q[i] = 1.0 / fem.C_lumped[i];
  }
  return q;
}

}  // namespace spde::fem
