#include <algorithm>
#include <cmath>
#include <numbers>

#include "spde/fitter.hpp"

namespace spde::fitter {
namespace {

constexpr int kMaxHalvings = 50;

struct Point {
  std::vector<double> eta;
  std::vector<double> mu;
  double objective = 0.0;
};

Point objective_at(const SparseMatrix& x, std::span<const double> y, Family family,
                   const SparseSymMatrix& penalty, double phi, std::span<const double> beta) {
  Point p;
  p.eta = x.multiply(beta);
  p.mu.resize(p.eta.size());
  double l = 0.0;
  if (family == Family::gaussian) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double r = y[i] - p.eta[i];
      l -= 0.5 * r * r;
      p.mu[i] = p.eta[i];
    }
  } else {
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double e = std::clamp(p.eta[i], -kEtaClamp, kEtaClamp);
      p.mu[i] = std::exp(e);
      l += y[i] * e - p.mu[i];
    }
  }
  p.objective = l / phi - 0.5 * penalty.quadratic_form(beta);
  return p;
}

double full_loglik(std::span<const double> y, Family family, const Point& p, double phi) {
  double l = 0.0;
  if (family == Family::gaussian) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double r = y[i] - p.mu[i];
      l -= 0.5 * r * r / phi;
    }
    return l - 0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi * phi);
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    l += y[i] * std::log(p.mu[i]) - p.mu[i] - std::lgamma(y[i] + 1.0);
  }
  return l;
}

}  // namespace

PirlsResult pirls(const SparseMatrix& x, std::span<const double> y, Family family,
                  const SparseSymMatrix& penalty, double phi, std::span<const double> beta_init,
                  const PirlsOptions& options,
                  std::shared_ptr<const sparse::CholeskyAnalysis>* analysis) {
  const auto p = static_cast<std::size_t>(x.cols());
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw FitError("design rows do not match y");
  if (static_cast<std::size_t>(penalty.dim()) != p) throw FitError("penalty size does not match design");
  if (!beta_init.empty() && beta_init.size() != p) throw FitError("initial coefficients have wrong length");
  if (!(phi > 0.0)) throw FitError("dispersion must be positive");

  std::shared_ptr<const sparse::CholeskyAnalysis> local;
  auto& cache = analysis != nullptr ? *analysis : local;

  PirlsResult out;
  std::vector<double> beta = beta_init.empty() ? std::vector<double>(p, 0.0)
                                               : std::vector<double>(beta_init.begin(), beta_init.end());
  bool polishing = false;
  for (int it = 0;; ++it) {
    const Point pt = objective_at(x, y, family, penalty, phi, beta);
    if (!std::isfinite(pt.objective)) throw FitError("non-finite penalized objective");
    out.objective_trace.push_back(pt.objective);

    std::vector<double> resid(y.size()), w(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      resid[i] = (y[i] - pt.mu[i]) / phi;
      w[i] = (family == Family::gaussian ? 1.0 : pt.mu[i]) / phi;
      if (!std::isfinite(w[i])) throw FitError("non-finite working weight");
    }
    std::vector<double> grad = x.multiply_transpose(resid);
    const auto pb = penalty.multiply(beta);
    double gnorm = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      grad[j] -= pb[j];
      gnorm = std::max(gnorm, std::abs(grad[j]));
    }
    SparseSymMatrix h =
        sparse::add(SparseSymMatrix::from_general(sparse::weighted_gram(x, w)), penalty);
    if (!cache || !cache->matches(h)) cache = std::make_shared<const sparse::CholeskyAnalysis>(h);
    auto factor = std::make_shared<const sparse::CholFactor>(cache, h);

    out.beta = beta;
    out.mu = pt.mu;
    out.objective = pt.objective;
    out.loglik = full_loglik(y, family, pt, phi);
    out.gradient_norm = gnorm;
    out.hessian = std::move(h);
    out.factor = factor;
    out.iterations = it;

    const bool small = gnorm <= options.tolerance * (1.0 + std::abs(pt.objective));
    if (polishing) {
      out.converged = true;
      break;
    }
    if (it >= options.max_iterations) break;

    const auto delta = factor->solve(grad);
    if (small) {
      // One extra Newton step tightens beta well below the stopping
      // tolerance, which keeps the REML criterion smooth in theta.
      polishing = true;
      std::vector<double> cand(p);
      for (std::size_t j = 0; j < p; ++j) cand[j] = beta[j] + delta[j];
      if (objective_at(x, y, family, penalty, phi, cand).objective >= pt.objective) {
        beta = std::move(cand);
        continue;
      }
      out.converged = true;
      break;
    }
    bool accepted = false;
    double step = 1.0;
    std::vector<double> cand(p);
    for (int k = 0; k < kMaxHalvings; ++k, step *= 0.5) {
      for (std::size_t j = 0; j < p; ++j) cand[j] = beta[j] + step * delta[j];
      if (objective_at(x, y, family, penalty, phi, cand).objective >= pt.objective) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    beta = cand;
  }
  return out;
}

}  // namespace spde::fitter
