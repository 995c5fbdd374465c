#include <cmath>
#include <stdexcept>

#include "spde/matern.hpp"

namespace spde::matern {

// Kriging form: the posterior is obtained from the prior covariance
// Q^{-1} rather than from the precision Q + A^T A / noise_var used by the
// sparse fitter, so the two routes share only their inputs.
DensePosterior dense_posterior_oracle(const SparseSymMatrix& q, const SparseMatrix& a,
                                      std::span<const double> y, double noise_var) {
  if (a.cols() != q.dim()) throw std::invalid_argument("projection and precision sizes differ");
  if (static_cast<std::size_t>(a.rows()) != y.size()) {
    throw std::invalid_argument("observation count does not match projection rows");
  }
  if (!(noise_var > 0.0)) throw std::invalid_argument("noise variance must be > 0");
  const Eigen::Index m = q.dim(), n = a.rows();
  Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto c = q.general().row_cols(static_cast<sparse::Index>(i));
    const auto v = q.general().row_values(static_cast<sparse::Index>(i));
    for (std::size_t k = 0; k < c.size(); ++k) dq(i, c[k]) = v[k];
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(dq);
  if (llt.info() != Eigen::Success) throw std::runtime_error("prior precision is not positive definite");
  const Eigen::MatrixXd sigma = llt.solve(Eigen::MatrixXd::Identity(m, m));

  DensePosterior out;
  if (n == 0 || std::isinf(noise_var)) {
    out.mean = Eigen::VectorXd::Zero(m);
    out.covariance = sigma;
    return out;
  }
  Eigen::MatrixXd da = Eigen::MatrixXd::Zero(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto c = a.row_cols(static_cast<sparse::Index>(i));
    const auto v = a.row_values(static_cast<sparse::Index>(i));
    for (std::size_t k = 0; k < c.size(); ++k) da(i, c[k]) = v[k];
  }
  const Eigen::MatrixXd sat = sigma * da.transpose();
  Eigen::MatrixXd k = da * sat;
  k.diagonal().array() += noise_var;
  const Eigen::LDLT<Eigen::MatrixXd> kf(k);
  const Eigen::Map<const Eigen::VectorXd> yy(y.data(), n);
  out.mean = sat * kf.solve(yy);
  out.covariance = sigma - sat * kf.solve(sat.transpose());
  return out;
}

}  // namespace spde::matern
