#include "daiqa/quality/predict.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

#include "daiqa/core/errors.hpp"

namespace daiqa::quality {

namespace {

int mirror(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

Image center_pad(const Image& img, int height, int width) {
  if (height < img.height() || width < img.width()) throw std::invalid_argument("center_pad: target smaller than image");
  const int oy = (height - img.height()) / 2, ox = (width - img.width()) / 2;
  Image out(height, width);
  for (int c = 0; c < Image::kChannels; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) out.at(c, y, x) = img.at(c, mirror(y - oy, img.height()), mirror(x - ox, img.width()));
  return out;
}

QualityReport predict_image(const Image& img, restore::RestoreModel& restorer, QualityRegressor& regressor) {
  const RegressorConfig& cfg = regressor.config();
  const int p = cfg.patch_size;
  if (p % restorer.config().size_multiple() != 0)
    throw ConfigError("patch_size " + std::to_string(p) + " is not a multiple of " +
                      std::to_string(restorer.config().size_multiple()));
  if (regressor.feature_dim() != restore_feature_dim(restorer.config()))
    throw ConfigError("regressor was trained against a different restoration network");
  if (img.empty()) throw std::invalid_argument("predict_image: empty image");

  QualityReport report;
  Image source = img;
  if (img.height() < p || img.width() < p) {
    spdlog::warn("image {}x{} is smaller than the {}px patch; scoring one padded patch", img.height(), img.width(), p);
    source = center_pad(img, std::max(p, img.height()), std::max(p, img.width()));
    report.padded = true;
  }
  const auto patches = forge::sample_patches(source, p, forge::GridMode{cfg.stride()});
  std::vector<Image> pixels;
  pixels.reserve(patches.size());
  for (const auto& patch : patches) pixels.push_back(patch.pixels);

  const RegressionInput in = make_regression_input(pixels, restorer);
  const RegressorOutput out = regressor.forward(in);

  const int n = static_cast<int>(patches.size());
  for (int i = 0; i < n; ++i)
    report.patches.push_back({out.s[i], out.w_raw[i], activate_weight(out.w_raw[i], cfg.epsilon), patches[i].coord});
  report.n_patches = n;
  report.score = aggregate(report.patches);

  const int k = in.domain_logits.c();
  std::vector<double> mean_logit(k, 0.0), mean_prob(k, 0.0);
  for (int i = 0; i < n; ++i) {
    double mx = -INFINITY;
    for (int c = 0; c < k; ++c) mx = std::max(mx, static_cast<double>(in.domain_logits.at(i, c, 0, 0)));
    double z = 0;
    for (int c = 0; c < k; ++c) z += std::exp(in.domain_logits.at(i, c, 0, 0) - mx);
    for (int c = 0; c < k; ++c) {
      mean_logit[c] += in.domain_logits.at(i, c, 0, 0) / n;
      mean_prob[c] += std::exp(in.domain_logits.at(i, c, 0, 0) - mx) / z / n;
    }
  }
  report.predicted_domain = static_cast<int>(std::max_element(mean_logit.begin(), mean_logit.end()) - mean_logit.begin());
  report.domain_confidence = mean_prob[report.predicted_domain];
  return report;
}

std::string report_to_json(const QualityReport& r) {
  const nlohmann::json j{{"score", r.score},
                         {"predicted_domain", r.predicted_domain},
                         {"domain_confidence", r.domain_confidence},
                         {"n_patches", r.n_patches}};
  return j.dump(2) + "\n";
}

}  // namespace daiqa::quality
