#include "daiqa/metrics/logistic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace daiqa::metrics {

double logistic4(const std::array<double, 4>& b, double x) {
  return b[0] * (0.5 - 1.0 / (1.0 + std::exp(b[1] * (x - b[2])))) + b[3];
}

namespace {

double sse_of(const std::array<double, 4>& b, std::span<const double> x, std::span<const double> y) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - logistic4(b, x[i]);
    s += r * r;
  }
  return s;
}

}  // namespace

LogisticFit logistic_fit(std::span<const double> yhat, std::span<const double> y, int max_iterations) {
  if (yhat.size() != y.size()) throw std::invalid_argument("logistic_fit: length mismatch");
  if (yhat.size() < 5) throw std::invalid_argument("logistic_fit: need at least 5 samples");
  const std::size_t n = y.size();

  std::vector<double> xs(yhat.begin(), yhat.end());
  std::sort(xs.begin(), xs.end());
  const double median = n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
  const double xrange = std::max(xs.back() - xs.front(), 1e-12);
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());

  double mx = 0, my = 0, cov = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += yhat[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  for (std::size_t i = 0; i < n; ++i) cov += (yhat[i] - mx) * (y[i] - my);

  std::array<double, 4> b{std::max(*ymax - *ymin, 1e-12), (cov >= 0 ? 4.0 : -4.0) / xrange, median,
                          0.5 * (*ymax + *ymin)};
  LogisticFit fit;
  double sse = sse_of(b, yhat, y);
  double lambda = 1e-3;

  Eigen::MatrixXd jac(n, 4);
  Eigen::VectorXd res(n);
  for (fit.iterations = 0; fit.iterations < max_iterations; ++fit.iterations) {
    for (std::size_t i = 0; i < n; ++i) {
      const double u = b[1] * (yhat[i] - b[2]);
      const double s = 1.0 / (1.0 + std::exp(u));
      const double dfdu = b[0] * s * (1.0 - s);
      jac(i, 0) = 0.5 - s;
      jac(i, 1) = dfdu * (yhat[i] - b[2]);
      jac(i, 2) = -dfdu * b[1];
      jac(i, 3) = 1.0;
      res(i) = y[i] - (b[0] * (0.5 - s) + b[3]);
    }
    const Eigen::Matrix4d jtj = jac.transpose() * jac;
    const Eigen::Vector4d jtr = jac.transpose() * res;
    if (jtr.norm() <= 1e-14 * std::max(1.0, jtj.norm())) {
      fit.converged = true;
      break;
    }
    bool improved = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::Matrix4d a = jtj;
      for (int k = 0; k < 4; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-12);
      const Eigen::Vector4d delta = a.ldlt().solve(jtr);
      std::array<double, 4> trial{b[0] + delta(0), b[1] + delta(1), b[2] + delta(2), b[3] + delta(3)};
      const double trial_sse = sse_of(trial, yhat, y);
      if (std::isfinite(trial_sse) && trial_sse <= sse) {
        const double rel = (sse - trial_sse) / std::max(sse, 1e-300);
        const double step = delta.norm() / (1e-12 + Eigen::Vector4d(b[0], b[1], b[2], b[3]).norm());
        b = trial;
        sse = trial_sse;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (rel < 1e-15 || step < 1e-13) fit.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      // No descent direction left at any damping: stationary to working precision.
      fit.converged = true;
      break;
    }
    if (fit.converged) break;
  }
  fit.beta = b;
  fit.sse = sse;
  fit.fitted.resize(n);
  for (std::size_t i = 0; i < n; ++i) fit.fitted[i] = logistic4(b, yhat[i]);
  return fit;
}

}  // namespace daiqa::metrics
