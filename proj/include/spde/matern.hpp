#pragma once

// Matérn fields through the SPDE tau * (kappa^2 - Laplacian) x = W with
// alpha = 2, so nu = 2 - d/2: 3/2 on a line, 1 in the plane.

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "spde/fem.hpp"
#include "spde/sparse.hpp"

namespace spde::matern {

using sparse::SparseMatrix;
using sparse::SparseSymMatrix;

inline constexpr double kAlpha = 2.0;

struct MaternParams {
  double kappa = 1.0;
  double tau = 1.0;
  int dim = 1;

  double nu() const { return kAlpha - 0.5 * dim; }
  /// Distance at which the correlation is about 0.13: sqrt(8 nu) / kappa.
  double range() const;
  /// Throws std::invalid_argument unless kappa, tau > 0 and dim is 1 or 2.
  void validate() const;
};

/// Modified Bessel function of the second kind, for nu in {1/2, 1, 3/2}.
double bessel_k(double nu, double x);
/// K_1 by its power series for x <= 2 and Steed's continued fraction above.
double bessel_k1(double x);

/// c(0) = Gamma(nu) / ((4 pi)^{d/2} kappa^{2 nu} tau^2 Gamma(nu + d/2)).
double matern_variance(const MaternParams& p);

/// Covariance at distance r >= 0.
double matern_covariance(double r, const MaternParams& p);

double matern_correlation(double r, const MaternParams& p);

/// Green's function of tau (kappa^2 - d^2/dx^2) on the line: exp(-kappa |r|) / (2 kappa tau).
double green_function_1d(double r, double kappa, double tau);

/// int w(x - u) w(y - u) du by the trapezoid rule on a grid with spacing
/// `step` anchored at x, covering `halfwidth` beyond both points. Requires
/// halfwidth * kappa >= 10.
double covariance_by_convolution(double x, double y, double kappa, double tau, double step,
                                 double halfwidth);

/// S = tau^2 (kappa^4 C~ + 2 kappa^2 G1 + G2). kappa >= 0 admits the Laplacian limit.
SparseSymMatrix matern_precision(const fem::FemMatrices& fem, double kappa, double tau);
SparseSymMatrix matern_precision(const fem::FemMatrices& fem, const MaternParams& p);

/// dS/d(log kappa) = tau^2 (4 kappa^4 C~ + 4 kappa^2 G1). dS/d(log tau) = 2 S.
SparseSymMatrix precision_dlogkappa(const fem::FemMatrices& fem, double kappa, double tau);

/// Comparison of S with P^T Q_e P.
struct PrecisionCheck {
  double max_abs_diff = 0.0;
  double max_abs_s = 0.0;
  double relative() const { return max_abs_s > 0.0 ? max_abs_diff / max_abs_s : max_abs_diff; }
};

/// With the lumped mass the two sides agree to rounding; the consistent mass
/// operator leaves a discretization gap that shrinks under refinement.
PrecisionCheck verify_precision_factorization(const fem::FemMatrices& fem, double kappa, double tau,
                                              fem::MassMatrix mass = fem::MassMatrix::lumped);

/// Draws from N(0, Q^{-1}) and projects through A. Sample s uses a random
/// stream derived from (seed, s / batch), so output does not depend on `threads`.
struct FieldSamples {
  Eigen::MatrixXd coefficients;  // n_samples x dim(Q)
  Eigen::MatrixXd values;        // n_samples x rows(A)
};

FieldSamples simulate_field(const SparseSymMatrix& q, const SparseMatrix& a, int n_samples,
                            std::uint64_t seed, int threads = 1);

/// Dense Gaussian posterior of the basis coefficients for y = A x + e,
/// x ~ N(0, Q^{-1}), e ~ N(0, noise_var I), computed in covariance form.
struct DensePosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

DensePosterior dense_posterior_oracle(const SparseSymMatrix& q, const SparseMatrix& a,
                                      std::span<const double> y, double noise_var);

}  // namespace spde::matern
