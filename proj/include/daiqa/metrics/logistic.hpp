#pragma once

#include <array>
#include <span>
#include <vector>

namespace daiqa::metrics {

/// y = b1 * (1/2 - 1/(1 + exp(b2 (x - b3)))) + b4
double logistic4(const std::array<double, 4>& beta, double x);

struct LogisticFit {
  std::array<double, 4> beta{};
  std::vector<double> fitted;  // model at each input
  double sse = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Damped Gauss-Newton (Levenberg-Marquardt) least squares of y on yhat.
/// Initialization: b3 = median(yhat), b2 = +-4/range(yhat) with the sign of
/// the data correlation, b1 = range(y), b4 = midrange(y). Requires n >= 5;
/// on non-convergence the best iterate is returned with converged = false.
LogisticFit logistic_fit(std::span<const double> yhat, std::span<const double> y, int max_iterations = 500);

}  // namespace daiqa::metrics
