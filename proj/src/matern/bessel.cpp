#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "spde/matern.hpp"

namespace spde::matern {
namespace {

constexpr double kEuler = 0.57721566490153286061;
constexpr double kEps = 1e-16;
constexpr int kMaxTerms = 10000;

// Power series around zero (Abramowitz and Stegun 9.6.11 with n = 1).
double k1_series(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;  // (x^2/4)^k / (k! (k+1)!)
  double i1 = 0.0;
  double psi_sum = 0.0;
  double psi_k1 = -kEuler;        // psi(k + 1)
  double psi_k2 = 1.0 - kEuler;   // psi(k + 2)
  for (int k = 0; k < kMaxTerms; ++k) {
    i1 += term;
    psi_sum += (psi_k1 + psi_k2) * term;
    if (term < kEps * i1) break;
    term *= q / ((k + 1.0) * (k + 2.0));
    psi_k1 += 1.0 / (k + 1.0);
    psi_k2 += 1.0 / (k + 2.0);
  }
  i1 *= 0.5 * x;
  return 1.0 / x + std::log(0.5 * x) * i1 - 0.25 * x * psi_sum;
}

// Steed's continued fraction CF2 (Temme's normalization) for K_0 and K_1.
double k1_continued_fraction(double x) {
  const double a1 = 0.25;
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d, delh = d;
  double q1 = 0.0, q2 = 1.0;
  double q = a1, c = a1, a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i < kMaxTerms; ++i) {
    a -= 2.0 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < kEps) break;
  }
  h *= a1;
  const double k0 = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) / s;
  return k0 * (x + 0.5 - h) / x;
}

}  // namespace

double bessel_k1(double x) {
  if (!(x > 0.0)) throw std::domain_error("K_1 needs x > 0");
  if (std::isinf(x)) return 0.0;
  return x <= 2.0 ? k1_series(x) : k1_continued_fraction(x);
}

double bessel_k(double nu, double x) {
  if (!(x > 0.0)) throw std::domain_error("K_nu needs x > 0");
  if (std::isinf(x)) return 0.0;
  if (nu == 1.0) return bessel_k1(x);
  const double half = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x);
  if (nu == 0.5) return half;
  if (nu == 1.5) return half * (1.0 + 1.0 / x);
  throw std::invalid_argument("bessel_k supports nu in {0.5, 1, 1.5}");
}

}  // namespace spde::matern
