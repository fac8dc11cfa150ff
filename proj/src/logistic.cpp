#include "chunklearn/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace chunklearn {

double logistic(double x, double k, double x0) {
  const double z = -k * (x - x0);
  if (z > 700.0) return 0.0;
  return 1.0 / (1.0 + std::exp(z));
}

namespace {

double sse(std::span<const double> x, std::span<const double> y, double k, double x0) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double r = logistic(x[j], k, x0) - y[j];
    s += r * r;
  }
  return s;
}

}  // namespace

LogisticFit fit_logistic(std::span<const double> x, std::span<const double> y,
                         const LogisticFitOptions& options) {
  if (x.size() != y.size()) throw std::invalid_argument("x and y differ in length");
  if (x.size() < 10) throw std::invalid_argument("logistic fit needs at least 10 points");
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double span = std::max(hi - lo, 1e-12);

  double best_k = 1.0 / span;
  double best_x0 = 0.5 * (lo + hi);
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < options.grid_k; ++a) {
    // k * span from 1e-1 to 1e4, log-spaced.
    const double k = std::pow(10.0, -1.0 + 5.0 * a / (options.grid_k - 1)) / span;
    for (int b = 0; b < options.grid_x0; ++b) {
      const double x0 = lo - 0.5 * span + 2.0 * span * b / (options.grid_x0 - 1);
      const double s = sse(x, y, k, x0);
      if (s < best) {
        best = s;
        best_k = k;
        best_x0 = x0;
      }
    }
  }

  // Levenberg-Marquardt damped Gauss-Newton on (k, x0).
  double k = best_k;
  double x0 = best_x0;
  double lambda = 1e-3;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    double jkk = 0, jkx = 0, jxx = 0, gk = 0, gx = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double f = logistic(x[j], k, x0);
      const double df = f * (1.0 - f);
      const double dk = df * (x[j] - x0);
      const double dx = -k * df;
      const double r = f - y[j];
      jkk += dk * dk;
      jkx += dk * dx;
      jxx += dx * dx;
      gk += dk * r;
      gx += dx * r;
    }
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      const double a11 = jkk * (1.0 + lambda);
      const double a22 = jxx * (1.0 + lambda);
      const double det = a11 * a22 - jkx * jkx;
      if (!(std::abs(det) > 0.0)) {
        lambda *= 4.0;
        continue;
      }
      const double step_k = -(a22 * gk - jkx * gx) / det;
      const double step_x = -(a11 * gx - jkx * gk) / det;
      const double cand = sse(x, y, k + step_k, x0 + step_x);
      if (cand < best) {
        const double gain = best - cand;
        k += step_k;
        x0 += step_x;
        best = cand;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = gain > 1e-15 * std::max(best, 1e-300);
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) break;
  }

  LogisticFit fit;
  fit.k = k;
  fit.x0 = x0;
  fit.learning_time = 2.0 * x0;
  fit.residual = best;
  fit.rms = std::sqrt(best / static_cast<double>(x.size()));
  fit.iterations = it;
  const double rise = logistic(hi, k, x0) - logistic(lo, k, x0);
  fit.degenerate = !(k > 0.0) || rise < 0.5;
  fit.poor_fit = fit.rms > options.rms_bound;
  return fit;
}

LogisticFit fit_logistic(std::span<const double> y, const LogisticFitOptions& options) {
  std::vector<double> x(y.size());
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = static_cast<double>(j + 1);
  return fit_logistic(x, y, options);
}

}  // namespace chunklearn
