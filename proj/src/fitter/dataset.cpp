#include <algorithm>
#include <cmath>

#include "spde/fitter.hpp"

namespace spde::fitter {

std::string family_name(Family f) { return f == Family::gaussian ? "gaussian" : "poisson"; }

Family parse_family(const std::string& name) {
  if (name == "gaussian") return Family::gaussian;
  if (name == "poisson") return Family::poisson;
  throw std::invalid_argument("unknown family '" + name + "' (expected gaussian or poisson)");
}

void Dataset::validate() const {
  const std::size_t n = y.size();
  if (dim != 1 && dim != 2) throw FitError("dataset dimension must be 1 or 2");
  if (locations.size() != n) throw FitError("locations and responses differ in length");
  if (n < 5) throw FitError("need at least 5 observations, got " + std::to_string(n));
  if (covariates.cols() > 0 && static_cast<std::size_t>(covariates.rows()) != n) {
    throw FitError("covariate rows do not match the number of observations");
  }
  if (covariate_names.size() != static_cast<std::size_t>(covariates.cols())) {
    throw FitError("covariate names do not match covariate columns");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(locations[i].x) || !std::isfinite(locations[i].y)) {
      throw FitError("non-finite location at observation " + std::to_string(i));
    }
    if (!std::isfinite(y[i])) throw FitError("non-finite response at observation " + std::to_string(i));
    if (family == Family::poisson && (y[i] < 0.0 || y[i] != std::floor(y[i]))) {
      throw FitError("poisson response must be a non-negative integer (observation " +
                     std::to_string(i) + ")");
    }
  }
  if (!covariates.allFinite()) throw FitError("non-finite covariate value");
}

void check_fixed_effects(const Eigen::MatrixXd& xc) {
  if (xc.cols() == 0) return;
  Eigen::MatrixXd scaled = xc;
  for (Eigen::Index j = 0; j < xc.cols(); ++j) {
    const double norm = xc.col(j).norm();
    if (!(norm > 0.0)) throw FitError("fixed-effect column " + std::to_string(j) + " is zero");
    scaled.col(j) /= norm;
  }
  const Eigen::MatrixXd gram = scaled.transpose() * scaled;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e8) {
    throw FitError("fixed-effect columns are numerically collinear (condition number " +
                   (lo > 0.0 ? std::to_string(hi / lo) : std::string("inf")) + ")");
  }
}

namespace {

Eigen::MatrixXd fixed_block(const Eigen::MatrixXd& covariates, std::size_t n, bool intercept) {
  const Eigen::Index nc = covariates.cols() + (intercept ? 1 : 0);
  Eigen::MatrixXd xc(static_cast<Eigen::Index>(n), nc);
  Eigen::Index c = 0;
  if (intercept) xc.col(c++).setOnes();
  if (covariates.cols() > 0) xc.rightCols(covariates.cols()) = covariates;
  return xc;
}

SparseMatrix append_columns(const SparseMatrix& a, const Eigen::MatrixXd& xc) {
  std::vector<sparse::Triplet> t = a.triplets();
  for (Eigen::Index i = 0; i < xc.rows(); ++i) {
    for (Eigen::Index j = 0; j < xc.cols(); ++j) {
      t.push_back({static_cast<Index>(i), a.cols() + static_cast<Index>(j), xc(i, j)});
    }
  }
  return SparseMatrix::from_triplets(a.rows(), a.cols() + static_cast<Index>(xc.cols()), t);
}

}  // namespace

Model::Model(fem::Basis basis, const Dataset& data, const ModelOptions& options)
    : basis_(std::move(basis)), family_(data.family), options_(options) {
  data.validate();
  if (basis_.dim() != data.dim) {
    throw FitError("dataset is " + std::to_string(data.dim) + "D but the mesh is " +
                   std::to_string(basis_.dim()) + "D");
  }
  fem_ = fem::fem_matrices(basis_, options.g2);
  const auto proj = fem::projection_matrix(basis_, data.locations);
  if (!proj.outside.empty()) {
    throw FitError("observation " + std::to_string(proj.outside.front()) +
                   " lies outside the mesh (" + std::to_string(proj.outside.size()) + " in total)");
  }
  const Eigen::MatrixXd xc = fixed_block(data.covariates, data.size(), options.intercept);
  check_fixed_effects(xc);
  n_fixed_ = static_cast<Index>(xc.cols());
  if (options.intercept) fixed_names_.push_back("(intercept)");
  fixed_names_.insert(fixed_names_.end(), data.covariate_names.begin(), data.covariate_names.end());
  design_ = append_columns(proj.A, xc);
  y_ = data.y;

  double x0 = data.locations[0].x, x1 = x0, y0 = data.locations[0].y, y1 = y0;
  for (const auto& p : data.locations) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  diameter_ = std::hypot(x1 - x0, y1 - y0);
  if (!(diameter_ > 0.0)) throw FitError("all observations share one location");
}

SparseMatrix Model::design_rows(std::span<const Point2> locations,
                                const Eigen::MatrixXd& covariates,
                                std::vector<Index>* outside) const {
  const Index n_cov = n_fixed_ - (options_.intercept ? 1 : 0);
  if (covariates.cols() != n_cov || (n_cov > 0 && static_cast<std::size_t>(covariates.rows()) != locations.size())) {
    throw FitError("prediction covariates must have " + std::to_string(n_cov) +
                   " columns and one row per location");
  }
  auto proj = fem::projection_matrix(basis_, locations);
  if (outside != nullptr) *outside = proj.outside;
  return append_columns(proj.A, fixed_block(covariates, locations.size(), options_.intercept));
}

}  // namespace spde::fitter
