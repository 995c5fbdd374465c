#include <cmath>
#include <numeric>

#include "spde/fitter.hpp"

namespace spde::fitter {
namespace {

double sample_variance(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / (n - 1.0);
}

FitResult finish(RemlObjective& objective, const Theta& theta) {
  RemlEvaluation ev = objective.evaluate(theta);
  if (!ev.ok) throw FitError("criterion cannot be evaluated at the optimum: " + ev.error);
  const Model& model = objective.model();
  FitResult fit;
  fit.family = model.family();
  fit.theta_internal = theta;
  fit.kappa = std::exp(theta[0]);
  fit.reml_value = ev.value;
  fit.beta = ev.pirls.beta;
  if (model.family() == Family::gaussian) {
    fit.sigma2 = ev.sigma2;
    fit.tau = std::exp(theta[1]) / std::sqrt(ev.sigma2);
    // The internal Hessian carries the prior up to the factor sigma^2.
    fit.posterior_precision = ev.pirls.hessian.scaled(1.0 / ev.sigma2);
    fit.factor = std::make_shared<const sparse::CholFactor>(ev.pirls.factor->shared_analysis(),
                                                            fit.posterior_precision);
  } else {
    fit.sigma2 = 1.0;
    fit.tau = std::exp(theta[1]);
    fit.posterior_precision = std::move(ev.pirls.hessian);
    fit.factor = ev.pirls.factor;
  }
  return fit;
}

}  // namespace

Theta initial_theta(const Model& model) {
  const double kappa0 = 2.0 / (0.2 * model.data_diameter());
  std::vector<double> z(model.y().begin(), model.y().end());
  if (model.family() == Family::poisson) {
    for (auto& v : z) v = std::log(v + 0.5);
  }
  double var = sample_variance(z);
  if (!(var > 0.0) || !std::isfinite(var)) var = 1.0;
  const double c0 = matern::matern_variance({kappa0, 1.0, model.basis().dim()});
  // Gaussian: with sigma0^2 = var the internal tau is tau0 * sigma0 = sqrt(c0).
  const double tau0 = model.family() == Family::gaussian ? std::sqrt(c0) : std::sqrt(c0 / var);
  return {std::log(kappa0), std::log(tau0)};
}

FitResult fit_at(const Model& model, const Theta& theta) {
  RemlObjective objective(model);
  return finish(objective, theta);
}

FitResult optimize_hyperparameters(const Model& model, std::optional<Theta> theta_init,
                                   const NelderMeadOptions& options) {
  RemlObjective objective(model);
  const Theta start = theta_init.value_or(initial_theta(model));
  const NelderMeadResult nm =
      nelder_mead([&](const Theta& t) { return objective(t); }, start, options);
  if (!std::isfinite(nm.value)) throw FitError("criterion is infinite everywhere the search went");
  FitResult fit = finish(objective, nm.best);
  fit.converged = nm.converged;
  fit.evaluations = nm.evaluations;
  fit.trace = nm.trace;
  return fit;
}

}  // namespace spde::fitter
