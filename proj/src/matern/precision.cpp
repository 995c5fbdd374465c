#include <cmath>
#include <stdexcept>

#include "spde/matern.hpp"

namespace spde::matern {
namespace {

void check_kappa_tau(double kappa, double tau) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("kappa must be >= 0");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be > 0");
}

}  // namespace

SparseSymMatrix matern_precision(const fem::FemMatrices& fem, double kappa, double tau) {
  check_kappa_tau(kappa, tau);
  const double t2 = tau * tau, k2 = kappa * kappa;
  const SparseSymMatrix first = sparse::add(fem.lumped(), fem.G1, t2 * k2 * k2, 2.0 * t2 * k2);
  return sparse::add(first, fem.G2, 1.0, t2);
}

SparseSymMatrix matern_precision(const fem::FemMatrices& fem, const MaternParams& p) {
  p.validate();
  return matern_precision(fem, p.kappa, p.tau);
}

SparseSymMatrix precision_dlogkappa(const fem::FemMatrices& fem, double kappa, double tau) {
  check_kappa_tau(kappa, tau);
  const double t2 = tau * tau, k2 = kappa * kappa;
  return sparse::add(fem.lumped(), fem.G1, 4.0 * t2 * k2 * k2, 4.0 * t2 * k2);
}

PrecisionCheck verify_precision_factorization(const fem::FemMatrices& fem, double kappa, double tau,
                                              fem::MassMatrix mass) {
  const SparseSymMatrix s = matern_precision(fem, kappa, tau);
  const SparseMatrix p = fem::operator_matrix(fem, kappa, tau, mass);
  const SparseSymMatrix ptqp = sparse::congruence_diagonal(p, fem::noise_precision(fem));
  PrecisionCheck out;
  out.max_abs_s = s.max_abs();
  out.max_abs_diff = sparse::add(s.general(), ptqp.general(), 1.0, -1.0).max_abs();
  return out;
}

}  // namespace spde::matern
