#pragma once

#include <span>
#include <vector>

namespace daiqa::metrics {

/// Pearson linear correlation. Throws std::invalid_argument on length
/// mismatch or fewer than two samples, std::domain_error when either vector
/// is constant (correlation undefined).
double plcc(std::span<const double> y, std::span<const double> yhat);

/// Spearman rank correlation. Tie-free data uses 1 - 6 sum d^2 / (N(N^2-1));
/// with ties it is the Pearson correlation of average ranks.
double srocc(std::span<const double> y, std::span<const double> yhat);

/// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> v);

bool has_ties(std::span<const double> v);

}  // namespace daiqa::metrics
