#include "daiqa/metrics/pseudo_label.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace daiqa::metrics {

std::string_view to_string(Oracle oracle) {
  switch (oracle) {
    case Oracle::kPsnrMapped: return "psnr_mapped";
    case Oracle::kSsimLike: return "ssim_like";
    case Oracle::kPlugin: return "plugin";
  }
  return "psnr_mapped";
}

Oracle parse_oracle(std::string_view name) {
  for (auto o : {Oracle::kPsnrMapped, Oracle::kSsimLike, Oracle::kPlugin})
    if (to_string(o) == name) return o;
  throw std::invalid_argument("unknown oracle '" + std::string(name) + "'");
}

double psnr_mapped(const Image& distorted, const Image& reference) {
  const double p = psnr(distorted, reference);
  if (!std::isfinite(p)) return 1.0;
  return std::clamp(p / 50.0, 0.0, 1.0);
}

double ssim_like(const Image& distorted, const Image& reference) {
  if (!distorted.same_shape(reference)) throw std::invalid_argument("ssim_like: shape mismatch");
  const GrayImage a = to_gray(distorted), b = to_gray(reference);
  constexpr int kWin = 7;
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const int h = a.height, w = a.width;
  if (h < kWin || w < kWin) throw std::invalid_argument("ssim_like: image smaller than the 7x7 window");
  double total = 0;
  int count = 0;
  for (int y = 0; y + kWin <= h; ++y)
    for (int x = 0; x + kWin <= w; ++x) {
      double ma = 0, mb = 0;
      for (int dy = 0; dy < kWin; ++dy)
        for (int dx = 0; dx < kWin; ++dx) {
          ma += a.at(y + dy, x + dx);
          mb += b.at(y + dy, x + dx);
        }
      const double m = kWin * kWin;
      ma /= m;
      mb /= m;
      double va = 0, vb = 0, cov = 0;
      for (int dy = 0; dy < kWin; ++dy)
        for (int dx = 0; dx < kWin; ++dx) {
          const double da = a.at(y + dy, x + dx) - ma, db = b.at(y + dy, x + dx) - mb;
          va += da * da;
          vb += db * db;
          cov += da * db;
        }
      va /= m - 1;
      vb /= m - 1;
      cov /= m - 1;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return std::clamp(total / count, 0.0, 1.0);
}

double pseudo_label(const Image& distorted, const Image& reference, Oracle oracle, const OracleFn& plugin) {
  if (!distorted.same_shape(reference)) throw std::invalid_argument("pseudo_label: shape mismatch");
  switch (oracle) {
    case Oracle::kPsnrMapped: return psnr_mapped(distorted, reference);
    case Oracle::kSsimLike: return ssim_like(distorted, reference);
    case Oracle::kPlugin:
      if (!plugin) throw std::invalid_argument("pseudo_label: plugin oracle not provided");
      return std::clamp(plugin(distorted, reference), 0.0, 1.0);
  }
  return 0.0;
}

}  // namespace daiqa::metrics
