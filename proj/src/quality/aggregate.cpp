#include "daiqa/quality/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace daiqa::quality {

double activate_weight(double w_raw, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("weight epsilon must be positive");
  return std::max(0.0, w_raw) + eps;
}

double aggregate(std::span<const double> scores, std::span<const double> weights) {
  if (scores.empty()) throw std::invalid_argument("aggregate: no patches");
  if (scores.size() != weights.size()) throw std::invalid_argument("aggregate: score/weight count mismatch");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("aggregate: weights must be positive");
    wsum += w;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) acc += weights[i] / wsum * scores[i];
  // Rounding can push a convex combination a hair outside its hull.
  double lo = scores[0], hi = scores[0];
  for (double s : scores) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return std::clamp(acc, lo, hi);
}

double aggregate(std::span<const PatchPrediction> patches) {
  std::vector<double> s, w;
  s.reserve(patches.size());
  w.reserve(patches.size());
  for (const auto& p : patches) {
    s.push_back(p.s);
    w.push_back(p.w);
  }
  return aggregate(s, w);
}

RegressionLoss loss_regression(std::span<const double> predicted, std::span<const double> target) {
  if (predicted.size() != target.size()) throw std::invalid_argument("loss_regression: length mismatch");
  if (predicted.empty()) throw std::invalid_argument("loss_regression: empty batch");
  RegressionLoss out;
  out.grad.resize(predicted.size());
  const double inv = 1.0 / static_cast<double>(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - target[i];
    out.value += std::abs(d) * inv;
    out.grad[i] = d > 0 ? inv : (d < 0 ? -inv : 0.0);
  }
  return out;
}

}  // namespace daiqa::quality
