#pragma once

#include <span>
#include <vector>

#include "daiqa/forge/patches.hpp"

namespace daiqa::quality {

inline constexpr double kDefaultWeightEpsilon = 1e-6;

struct PatchPrediction {
  double s = 0.0;      // patch quality
  double w_raw = 0.0;  // weight branch output before activation
  double w = 0.0;      // activated weight, always > 0
  forge::PatchCoord coord;
};

/// max(0, w_raw) + eps. Throws std::invalid_argument unless eps > 0.
double activate_weight(double w_raw, double eps = kDefaultWeightEpsilon);

/// Normalized weighted mean sum_i (w_i / sum_j w_j) s_i. Throws
/// std::invalid_argument for empty input, length mismatch or a non-positive weight.
double aggregate(std::span<const double> scores, std::span<const double> weights);
double aggregate(std::span<const PatchPrediction> patches);

struct RegressionLoss {
  double value = 0.0;
  std::vector<double> grad;  // d value / d prediction
};

/// Mean absolute error over the batch of patches. The subgradient at a tie is 0.
RegressionLoss loss_regression(std::span<const double> predicted, std::span<const double> target);

}  // namespace daiqa::quality
