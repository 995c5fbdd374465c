#pragma once

// Penalized-likelihood fitting of y ~ family(g^{-1}(A beta_f + X_c beta_c))
// with the Matérn SPDE penalty on beta_f: PIRLS for the coefficients, a
// Laplace-approximate REML criterion for (kappa, tau), Nelder-Mead on top.
//
// Coefficients are ordered field first (M basis weights), then the n_c
// unpenalized fixed effects.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spde/cholesky.hpp"
#include "spde/fem.hpp"
#include "spde/matern.hpp"

namespace spde::fitter {

using mesh::Point2;
using sparse::Index;
using sparse::SparseMatrix;
using sparse::SparseSymMatrix;

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Family { gaussian, poisson };

std::string family_name(Family f);
Family parse_family(const std::string& name);

/// Clamp applied to the Poisson linear predictor before exponentiating.
inline constexpr double kEtaClamp = 30.0;

struct Dataset {
  int dim = 1;
  Family family = Family::gaussian;
  std::vector<Point2> locations;
  std::vector<double> y;
  std::vector<std::string> covariate_names;
  Eigen::MatrixXd covariates;  // n x (number of covariates), may have zero columns

  std::size_t size() const { return y.size(); }
  /// Finite values, n >= 5, Poisson responses are non-negative integers.
  void validate() const;
};

struct ModelOptions {
  int degree = 1;  // 1D spline degree
  bool intercept = true;
  fem::G2Construction g2 = fem::G2Construction::galerkin;
};

/// Fixed pieces of a fit: basis, FEM matrices and the design X = [A | X_c].
class Model {
 public:
  Model(fem::Basis basis, const Dataset& data, const ModelOptions& options = {});

  const fem::Basis& basis() const { return basis_; }
  const fem::FemMatrices& fem() const { return fem_; }
  const SparseMatrix& design() const { return design_; }
  std::span<const double> y() const { return y_; }
  Family family() const { return family_; }
  Index n_obs() const { return design_.rows(); }
  Index n_field() const { return fem_.size(); }
  Index n_fixed() const { return n_fixed_; }
  Index n_coef() const { return design_.cols(); }
  const ModelOptions& options() const { return options_; }
  std::span<const std::string> fixed_names() const { return fixed_names_; }
  /// Largest distance between observation locations (bounding-box diagonal).
  double data_diameter() const { return diameter_; }

  /// Design rows for new locations with covariate rows (n_new x covariates).
  /// Outside-mesh rows keep only their fixed-effect part and are listed in `outside`.
  SparseMatrix design_rows(std::span<const Point2> locations, const Eigen::MatrixXd& covariates,
                           std::vector<Index>* outside = nullptr) const;

 private:
  fem::Basis basis_;
  fem::FemMatrices fem_;
  SparseMatrix design_;
  std::vector<double> y_;
  Family family_;
  Index n_fixed_ = 0;
  ModelOptions options_;
  std::vector<std::string> fixed_names_;
  double diameter_ = 0.0;
};

/// Rejects fixed-effect columns whose scaled Gram matrix has condition number above 1e8.
void check_fixed_effects(const Eigen::MatrixXd& xc);

struct PirlsOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;
};

struct PirlsResult {
  std::vector<double> beta;
  SparseSymMatrix hessian;  // X^T W X / phi + penalty at beta
  std::shared_ptr<const sparse::CholFactor> factor;
  std::vector<double> mu;
  double loglik = 0.0;     // includes normalizing constants
  double objective = 0.0;  // maximized penalized objective (PIRLS scale)
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

/// Maximizes l(beta) / phi - 1/2 beta^T penalty beta by Newton steps with
/// step halving. `penalty` is p x p (already padded). `analysis` caches the
/// symbolic factorization of the Hessian across calls.
PirlsResult pirls(const SparseMatrix& x, std::span<const double> y, Family family,
                  const SparseSymMatrix& penalty, double phi, std::span<const double> beta_init,
                  const PirlsOptions& options = {},
                  std::shared_ptr<const sparse::CholeskyAnalysis>* analysis = nullptr);

/// Internal hyperparameters: theta = (log kappa, log tau_int). For the
/// gaussian family the prior is beta_f ~ N(0, sigma^2 S(kappa, tau_int)^{-1}),
/// so the natural tau equals tau_int / sigma.
using Theta = std::array<double, 2>;

struct RemlEvaluation {
  double value = 0.0;  // +inf when rejected
  bool ok = false;
  std::string error;
  double sigma2 = 1.0;  // profiled noise variance (gaussian), 1 for poisson
  std::optional<std::array<double, 2>> gradient;
  PirlsResult pirls;
};

class RemlObjective {
 public:
  explicit RemlObjective(const Model& model);

  RemlEvaluation evaluate(const Theta& theta, bool with_gradient = false);
  double operator()(const Theta& theta) { return evaluate(theta).value; }

  /// Criterion of the model without the field (f = 0), gaussian only.
  double null_criterion() const;

  const Model& model() const { return model_; }

 private:
  const Model& model_;
  std::shared_ptr<const sparse::CholeskyAnalysis> s_analysis_;
  std::shared_ptr<const sparse::CholeskyAnalysis> h_analysis_;
  std::vector<double> warm_beta_;
};

struct NelderMeadOptions {
  double initial_step = 0.5;
  double tolerance = 1e-5;  // simplex diameter
  int max_evaluations = 500;
  int restarts = 1;
};

struct NelderMeadResult {
  Theta best{};
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
  std::vector<std::pair<Theta, double>> trace;
};

/// Minimizes f from `start`. Non-finite values count as +inf. After the
/// first convergence the search restarts `restarts` times from the best point.
NelderMeadResult nelder_mead(const std::function<double(const Theta&)>& f, const Theta& start,
                             const NelderMeadOptions& options = {});

struct FitResult {
  Family family = Family::gaussian;
  double kappa = 0.0;
  double tau = 0.0;     // natural scale
  double sigma2 = 1.0;  // gaussian noise variance; 1 for poisson
  Theta theta_internal{};
  double reml_value = 0.0;
  bool converged = false;
  int evaluations = 0;
  std::vector<double> beta;
  /// Posterior precision of beta on the natural scale.
  SparseSymMatrix posterior_precision;
  std::shared_ptr<const sparse::CholFactor> factor;
  std::vector<std::pair<Theta, double>> trace;

  std::array<double, 3> theta_hat() const {
    return {std::log(kappa), std::log(tau), std::log(sigma2)};
  }
};

/// Scale-aware start: kappa0 = 2 / (0.2 * data diameter), tau chosen so the
/// prior marginal variance matches the response (link-scale) variance.
Theta initial_theta(const Model& model);

FitResult optimize_hyperparameters(const Model& model, std::optional<Theta> theta_init = {},
                                   const NelderMeadOptions& options = {});

/// Fit at fixed internal theta (no search).
FitResult fit_at(const Model& model, const Theta& theta);

struct Prediction {
  std::vector<double> mean;  // linear predictor
  std::vector<double> se;
  std::vector<double> response_mean;
  std::vector<Index> outside;
};

Prediction predict(const Model& model, const FitResult& fit, std::span<const Point2> locations,
                   const Eigen::MatrixXd& covariates);

/// Draws beta ~ N(beta_hat, H^{-1}) and returns linear-predictor values,
/// n x locations. Reproducible per seed and independent of `threads`.
Eigen::MatrixXd posterior_samples(const Model& model, const FitResult& fit,
                                  std::span<const Point2> locations,
                                  const Eigen::MatrixXd& covariates, int n, std::uint64_t seed,
                                  int threads = 1);

}  // namespace spde::fitter
