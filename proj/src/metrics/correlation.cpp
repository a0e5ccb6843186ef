#include "daiqa/metrics/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace daiqa::metrics {
namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("correlation: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("correlation: need at least two samples");
}

}  // namespace

double plcc(std::span<const double> y, std::span<const double> yhat) {
  check_pair(y, yhat);
  const double n = static_cast<double>(y.size());
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  const double mh = std::accumulate(yhat.begin(), yhat.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double a = y[i] - my, b = yhat[i] - mh;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::domain_error("correlation undefined for a constant vector");
  return std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

bool has_ties(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return std::adjacent_find(s.begin(), s.end()) != s.end();
}

double srocc(std::span<const double> y, std::span<const double> yhat) {
  check_pair(y, yhat);
  const auto ry = average_ranks(y);
  const auto rh = average_ranks(yhat);
  if (has_ties(y) || has_ties(yhat)) return plcc(ry, rh);
  const double n = static_cast<double>(y.size());
  double d2 = 0;
  for (std::size_t i = 0; i < y.size(); ++i) d2 += (ry[i] - rh[i]) * (ry[i] - rh[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

}  // namespace daiqa::metrics
