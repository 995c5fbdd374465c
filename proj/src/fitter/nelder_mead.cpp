#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "spde/fitter.hpp"

namespace spde::fitter {
namespace {

// Standard coefficients: reflection 1, expansion 2, contraction 1/2, shrink 1/2.
Theta lerp(const Theta& c, const Theta& x, double t) {
  return {c[0] + t * (x[0] - c[0]), c[1] + t * (x[1] - c[1])};
}

double distance(const Theta& a, const Theta& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Theta&)>& f, const Theta& start,
                             const NelderMeadOptions& options) {
  NelderMeadResult res;
  res.best = start;
  res.value = std::numeric_limits<double>::infinity();
  const auto eval = [&](const Theta& t) {
    double v = f(t);
    if (!std::isfinite(v)) v = std::numeric_limits<double>::infinity();
    ++res.evaluations;
    res.trace.emplace_back(t, v);
    if (v < res.value) {
      res.value = v;
      res.best = t;
    }
    return v;
  };

  const auto run = [&](const Theta& x0, double step) {
    std::array<Theta, 3> x{x0, Theta{x0[0] + step, x0[1]}, Theta{x0[0], x0[1] + step}};
    std::array<double, 3> fx{};
    for (int i = 0; i < 3; ++i) fx[i] = eval(x[i]);
    while (true) {
      std::array<int, 3> order{0, 1, 2};
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fx[a] < fx[b]; });
      const std::array<Theta, 3> xs{x[order[0]], x[order[1]], x[order[2]]};
      const std::array<double, 3> fs{fx[order[0]], fx[order[1]], fx[order[2]]};
      x = xs;
      fx = fs;
      const double diam =
          std::max({distance(x[0], x[1]), distance(x[0], x[2]), distance(x[1], x[2])});
      if (diam <= options.tolerance) return true;
      if (res.evaluations >= options.max_evaluations) return false;

      const Theta c{0.5 * (x[0][0] + x[1][0]), 0.5 * (x[0][1] + x[1][1])};
      const Theta xr = lerp(c, x[2], -1.0);
      const double fr = eval(xr);
      if (fr < fx[0]) {
        const Theta xe = lerp(c, x[2], -2.0);
        const double fe = eval(xe);
        if (fe < fr) {
          x[2] = xe;
          fx[2] = fe;
        } else {
          x[2] = xr;
          fx[2] = fr;
        }
        continue;
      }
      if (fr < fx[1]) {
        x[2] = xr;
        fx[2] = fr;
        continue;
      }
      const bool outside = fr < fx[2];
      const Theta xc = outside ? lerp(c, xr, 0.5) : lerp(c, x[2], 0.5);
      const double fc = eval(xc);
      if (outside ? fc <= fr : fc < fx[2]) {
        x[2] = xc;
        fx[2] = fc;
        continue;
      }
      for (int i = 1; i < 3; ++i) {
        x[i] = lerp(x[0], x[i], 0.5);
        fx[i] = eval(x[i]);
      }
    }
  };

  bool converged = run(start, options.initial_step);
  for (int r = 0; r < options.restarts && converged; ++r) {
    converged = run(res.best, options.initial_step);
  }
  res.converged = converged && std::isfinite(res.value);
  return res;
}

}  // namespace spde::fitter
