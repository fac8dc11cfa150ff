#pragma once

#include <span>
#include <vector>

namespace chunklearn {

/// f(x) = 1 / (1 + exp(-k (x - x0))).
double logistic(double x, double k, double x0);

struct LogisticFit {
  double k = 0.0;
  double x0 = 0.0;
  double learning_time = 0.0;  // 2 * x0
  double residual = 0.0;       // sum of squared errors
  double rms = 0.0;
  /// The best curve shows no sigmoid rise across the data (k <= 0 or less
  /// than half of the [0, 1] range covered).
  bool degenerate = false;
  /// rms exceeded the configured bound.
  bool poor_fit = false;
  int iterations = 0;

  bool ok() const { return !degenerate && !poor_fit; }
};

struct LogisticFitOptions {
  double rms_bound = 0.15;
  int grid_k = 60;
  int grid_x0 = 80;
  int max_iterations = 200;
};

/// Least-squares fit: coarse (k, x0) grid, then damped Gauss-Newton.
/// Throws std::invalid_argument on fewer than 10 points or mismatched sizes.
LogisticFit fit_logistic(std::span<const double> x, std::span<const double> y,
                         const LogisticFitOptions& options = {});

/// Fit against x = 1..n.
LogisticFit fit_logistic(std::span<const double> y, const LogisticFitOptions& options = {});

}  // namespace chunklearn
