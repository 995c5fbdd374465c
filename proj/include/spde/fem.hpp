#pragma once

// Basis functions on a mesh and the finite-element matrices built from them:
// mass C, lumped mass, stiffness G1, the second-order matrix G2, the
// projection matrix A, the SPDE operator matrix P and the noise precision.

#include <optional>
#include <span>
#include <vector>

#include "spde/mesh.hpp"
#include "spde/sparse.hpp"

namespace spde::fem {

using mesh::Point2;
using sparse::Index;
using sparse::SparseMatrix;
using sparse::SparseSymMatrix;

enum class BasisKind { bspline_1d, piecewise_linear_2d };

/// Clamped B-splines of degree 1 or 2 on a 1D mesh, or piecewise-linear hat
/// functions on a triangulation. Holds its mesh by value.
class Basis {
 public:
  static Basis bspline(mesh::Mesh1D mesh, int degree);
  static Basis piecewise_linear(mesh::Mesh2D mesh);
  /// Degree-1 basis on either mesh kind; `degree` selects the 1D spline degree.
  static Basis on(const mesh::Mesh& mesh, int degree);

  BasisKind kind() const { return kind_; }
  int degree() const { return degree_; }
  Index size() const { return size_; }
  int dim() const { return kind_ == BasisKind::bspline_1d ? 1 : 2; }
  const mesh::Mesh& mesh() const { return mesh_; }
  const mesh::Mesh1D& mesh1d() const { return std::get<mesh::Mesh1D>(mesh_); }
  const mesh::Mesh2D& mesh2d() const { return std::get<mesh::Mesh2D>(mesh_); }
  double measure() const;
  /// Clamped knot vector (1D only): end knots repeated degree + 1 times.
  std::span<const double> knot_vector() const { return knot_vector_; }

 private:
  Basis(BasisKind kind, int degree, mesh::Mesh mesh);

  BasisKind kind_;
  int degree_;
  Index size_;
  mesh::Mesh mesh_;
  std::vector<double> knot_vector_;
};

struct BasisValues {
  std::vector<Index> index;
  std::vector<double> value;
  bool outside = false;
};

/// Nonzero basis values at x (1D uses x.x). Empty with outside = true when x
/// is not in the mesh.
BasisValues eval_basis(const Basis& basis, const Point2& x);

/// Values and first/second derivatives of the degree + 1 splines that are
/// nonzero on interval `element`, at x. Rows: derivative order; columns:
/// basis function element .. element + degree.
std::vector<std::vector<double>> bspline_derivatives(const Basis& basis, Index element, double x,
                                                     int n_derivs);

enum class G2Construction {
  galerkin,  // G1 * diag(C_lumped)^{-1} * G1
  direct,    // <psi_i'', psi_j''>, 1D degree-2 only
};

struct FemMatrices {
  SparseSymMatrix C;
  std::vector<double> C_lumped;
  SparseSymMatrix G1;
  SparseSymMatrix G2;
  /// Direct second-derivative Gram matrix when it exists (1D degree 2).
  std::optional<SparseSymMatrix> G2_direct;
  G2Construction g2_used = G2Construction::galerkin;

  Index size() const { return C.dim(); }
  SparseSymMatrix lumped() const { return SparseSymMatrix::diagonal(C_lumped); }
};

/// Element-wise Gauss quadrature assembly (3 Gauss-Legendre points per
/// interval, 3-point symmetric rule per triangle). Throws MeshError on a
/// degenerate element.
FemMatrices fem_matrices(const Basis& basis, G2Construction g2 = G2Construction::galerkin);

struct Projection {
  SparseMatrix A;
  /// Rows (locations) outside the mesh; those rows are zero.
  std::vector<Index> outside;
};

Projection projection_matrix(const Basis& basis, std::span<const Point2> locations);

enum class MassMatrix { lumped, consistent };

/// P = tau * (kappa^2 * C + G1), C lumped or consistent. kappa >= 0, tau > 0.
SparseMatrix operator_matrix(const FemMatrices& fem, double kappa, double tau,
                             MassMatrix mass = MassMatrix::lumped);

/// Q_e = diag(C_lumped)^{-1}. Throws when a lumped mass is zero.
std::vector<double> noise_precision(const FemMatrices& fem);

}  // namespace spde::fem
