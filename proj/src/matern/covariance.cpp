#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "spde/matern.hpp"
#include "spde/simd.hpp"

namespace spde::matern {

void MaternParams::validate() const {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("kappa must be > 0");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be > 0");
  if (dim != 1 && dim != 2) throw std::invalid_argument("dimension must be 1 or 2");
}

double MaternParams::range() const { return std::sqrt(8.0 * nu()) / kappa; }

namespace {

double leading_constant(const MaternParams& p) {
  const double d = p.dim;
  return 1.0 / (std::pow(4.0 * std::numbers::pi, 0.5 * d) * std::pow(p.kappa, 2.0 * p.nu()) *
                p.tau * p.tau * std::tgamma(p.nu() + 0.5 * d));
}

}  // namespace

double matern_variance(const MaternParams& p) {
  p.validate();
  return std::tgamma(p.nu()) * leading_constant(p);
}

double matern_covariance(double r, const MaternParams& p) {
  p.validate();
  if (!(r >= 0.0)) throw std::invalid_argument("distance must be >= 0");
  const double z = p.kappa * r;
  if (z == 0.0) return matern_variance(p);
  const double nu = p.nu();
  return std::pow(2.0, 1.0 - nu) * leading_constant(p) * std::pow(z, nu) * bessel_k(nu, z);
}

double matern_correlation(double r, const MaternParams& p) {
  return matern_covariance(r, p) / matern_variance(p);
}

double green_function_1d(double r, double kappa, double tau) {
  return std::exp(-kappa * std::abs(r)) / (2.0 * kappa * tau);
}

double covariance_by_convolution(double x, double y, double kappa, double tau, double step,
                                 double halfwidth) {
  if (!(kappa > 0.0) || !(tau > 0.0)) throw std::invalid_argument("kappa and tau must be > 0");
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be > 0");
  if (!(halfwidth * kappa >= 10.0)) {
    throw std::invalid_argument("convolution grid too narrow: need halfwidth * kappa >= 10");
  }
  const double lo = std::min(x, y) - halfwidth;
  const double hi = std::max(x, y) + halfwidth;
  const long k0 = -static_cast<long>(std::ceil((x - lo) / step));
  const long k1 = static_cast<long>(std::ceil((hi - x) / step));
  const auto n = static_cast<std::size_t>(k1 - k0 + 1);
  std::vector<double> wx(n), wy(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = x + static_cast<double>(k0 + static_cast<long>(i)) * step;
    wx[i] = green_function_1d(x - u, kappa, tau);
    wy[i] = green_function_1d(y - u, kappa, tau);
  }
  const double ends = 0.5 * (wx.front() * wy.front() + wx.back() * wy.back());
  return step * (simd::dot(wx, wy) - ends);
}

}  // namespace spde::matern
