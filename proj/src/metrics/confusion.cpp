#include "daiqa/metrics/confusion.hpp"

#include <stdexcept>
#include <string>

namespace daiqa::metrics {

ConfusionResult confusion(std::span<const int> truth, std::span<const int> predicted, int n_classes) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("confusion: length mismatch");
  if (n_classes <= 0) throw std::invalid_argument("confusion: need at least one class");
  ConfusionResult out;
  out.matrix.assign(n_classes, std::vector<double>(n_classes, 0.0));
  out.counts.assign(n_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
      throw std::out_of_range("confusion: label outside [0," + std::to_string(n_classes) + ")");
    out.matrix[t][p] += 1.0;
    ++out.counts[t];
  }
  const double total = static_cast<double>(truth.size());
  for (int r = 0; r < n_classes; ++r) {
    if (out.counts[r] == 0) {
      out.empty_rows.push_back(r);
      continue;
    }
    for (auto& v : out.matrix[r]) v /= out.counts[r];
    out.accuracy += (out.counts[r] / total) * out.matrix[r][r];
  }
  return out;
}

}  // namespace daiqa::metrics
