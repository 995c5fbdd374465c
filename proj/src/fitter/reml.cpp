#include <cmath>
#include <limits>
#include <numbers>

#include "spde/fitter.hpp"

namespace spde::fitter {

RemlObjective::RemlObjective(const Model& model) : model_(model) {}

namespace {

// diag(X H^{-1} X^T); every pair of columns sharing a row of X lies in the
// pattern of H, hence in the selected inverse.
std::vector<double> leverage_diagonal(const SparseMatrix& x, const sparse::SelectedInverse& z) {
  std::vector<double> h(static_cast<std::size_t>(x.rows()), 0.0);
  for (Index i = 0; i < x.rows(); ++i) {
    const auto c = x.row_cols(i);
    const auto v = x.row_values(i);
    double s = 0.0;
    for (std::size_t a = 0; a < c.size(); ++a) {
      s += v[a] * v[a] * z(c[a], c[a]);
      for (std::size_t b = a + 1; b < c.size(); ++b) s += 2.0 * v[a] * v[b] * z(c[a], c[b]);
    }
    h[i] = s;
  }
  return h;
}

}  // namespace

RemlEvaluation RemlObjective::evaluate(const Theta& theta, bool with_gradient) {
  RemlEvaluation ev;
  ev.value = std::numeric_limits<double>::infinity();
  if (!std::isfinite(theta[0]) || !std::isfinite(theta[1])) {
    ev.error = "non-finite theta";
    return ev;
  }
  const double kappa = std::exp(theta[0]);
  const double tau = std::exp(theta[1]);
  const auto& fem = model_.fem();
  const Index p = model_.n_coef();
  const Index m = model_.n_field();
  const double n = static_cast<double>(model_.n_obs());
  const double nc = static_cast<double>(model_.n_fixed());
  try {
    const SparseSymMatrix s = matern::matern_precision(fem, kappa, tau);
    if (!s_analysis_ || !s_analysis_->matches(s)) {
      s_analysis_ = std::make_shared<const sparse::CholeskyAnalysis>(s);
    }
    const sparse::CholFactor sf(s_analysis_, s);
    const SparseSymMatrix sbar = sparse::pad(s, p);
    std::span<const double> warm;
    if (warm_beta_.size() == static_cast<std::size_t>(p)) warm = warm_beta_;
    PirlsResult pr = pirls(model_.design(), model_.y(), model_.family(), sbar, 1.0, warm, {},
                           &h_analysis_);
    if (!pr.converged) {
      ev.error = "inner iteration did not converge";
      ev.pirls = std::move(pr);
      return ev;
    }
    const double logdet_s = sf.logdet();
    const double logdet_h = pr.factor->logdet();
    const double quad = sbar.quadratic_form(pr.beta);
    const double dof = n - nc;
    double deviance = 0.0;
    if (model_.family() == Family::gaussian) {
      deviance = -2.0 * pr.objective;  // |y - X beta|^2 + beta^T S beta
      if (!(deviance > 0.0)) throw FitError("zero residual deviance");
      ev.sigma2 = deviance / dof;
      ev.value = 0.5 * dof * (std::log(2.0 * std::numbers::pi * ev.sigma2) + 1.0) -
                 0.5 * logdet_s + 0.5 * logdet_h;
    } else {
      ev.sigma2 = 1.0;
      ev.value = -pr.loglik + 0.5 * quad - 0.5 * logdet_s + 0.5 * logdet_h -
                 0.5 * nc * std::log(2.0 * std::numbers::pi);
    }
    if (!std::isfinite(ev.value)) throw FitError("non-finite criterion");

    if (with_gradient) {
      const std::array<SparseSymMatrix, 2> sk{matern::precision_dlogkappa(fem, kappa, tau),
                                              s.scaled(2.0)};
      const auto zs = sf.selected_inverse();
      const auto zh = pr.factor->selected_inverse();
      std::vector<double> lev;
      if (model_.family() == Family::poisson) lev = leverage_diagonal(model_.design(), zh);
      const std::span<const double> beta_f(pr.beta.data(), static_cast<std::size_t>(m));
      std::array<double, 2> g{};
      for (int k = 0; k < 2; ++k) {
        const SparseSymMatrix skbar = sparse::pad(sk[k], p);
        const double bsb = sk[k].quadratic_form(beta_f);
        const double tr_s = zs.trace_product(sk[k]);
        double tr_h = zh.trace_product(skbar);
        if (model_.family() == Family::gaussian) {
          g[k] = 0.5 * dof * bsb / deviance - 0.5 * tr_s + 0.5 * tr_h;
        } else {
          // H also moves with theta through the weights mu(beta_hat(theta)).
          auto rhs = skbar.multiply(pr.beta);
          for (auto& v : rhs) v = -v;
          const auto dbeta = pr.factor->solve(rhs);
          const auto deta = model_.design().multiply(dbeta);
          for (std::size_t i = 0; i < deta.size(); ++i) tr_h += pr.mu[i] * deta[i] * lev[i];
          g[k] = 0.5 * bsb - 0.5 * tr_s + 0.5 * tr_h;
        }
      }
      ev.gradient = g;
    }
    ev.ok = true;
    warm_beta_ = pr.beta;
    ev.pirls = std::move(pr);
  } catch (const sparse::NotPositiveDefinite& e) {
    ev.value = std::numeric_limits<double>::infinity();
    ev.error = e.what();
  } catch (const FitError& e) {
    ev.value = std::numeric_limits<double>::infinity();
    ev.error = e.what();
  }
  return ev;
}

double RemlObjective::null_criterion() const {
  if (model_.family() != Family::gaussian) throw FitError("null criterion is defined for gaussian fits");
  const Index m = model_.n_field(), nc = model_.n_fixed();
  const auto n = static_cast<Eigen::Index>(model_.n_obs());
  Eigen::MatrixXd xc(n, nc);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Index j = 0; j < nc; ++j) xc(i, j) = model_.design().coeff(static_cast<Index>(i), m + j);
  }
  const Eigen::Map<const Eigen::VectorXd> y(model_.y().data(), n);
  double rss = y.squaredNorm();
  double logdet = 0.0;
  if (nc > 0) {
    const Eigen::MatrixXd g = xc.transpose() * xc;
    const Eigen::LLT<Eigen::MatrixXd> llt(g);
    const Eigen::VectorXd b = llt.solve(xc.transpose() * y);
    rss = (y - xc * b).squaredNorm();
    logdet = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  }
  const double dof = static_cast<double>(n - nc);
  return 0.5 * dof * (std::log(2.0 * std::numbers::pi * rss / dof) + 1.0) + 0.5 * logdet;
}

}  // namespace spde::fitter
