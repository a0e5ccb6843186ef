#pragma once

#include <span>
#include <vector>

namespace daiqa::metrics {

struct ConfusionResult {
  /// Row r, column c: fraction of class-r samples predicted as c.
  std::vector<std::vector<double>> matrix;
  /// Classes with no samples; their rows are all zero.
  std::vector<int> empty_rows;
  double accuracy = 0.0;
  std::vector<int> counts;
};

/// Throws std::out_of_range for labels outside [0, n_classes).
ConfusionResult confusion(std::span<const int> truth, std::span<const int> predicted, int n_classes);

}  // namespace daiqa::metrics
