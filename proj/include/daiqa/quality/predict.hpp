#pragma once

#include <string>
#include <vector>

#include "daiqa/quality/aggregate.hpp"
#include "daiqa/quality/regressor.hpp"

namespace daiqa::quality {

struct QualityReport {
  double score = 0.0;
  int predicted_domain = 0;
  double domain_confidence = 0.0;
  std::vector<PatchPrediction> patches;
  int n_patches = 0;
  /// Set when the image was smaller than one patch and had to be padded.
  bool padded = false;
};

/// Grid patches at the regressor's test stride, one batched restoration pass,
/// weighted aggregation. The domain is the argmax of the patch-averaged
/// domain logits; its confidence is the patch-averaged softmax probability.
/// Images smaller than a patch are reflect-padded around the center.
QualityReport predict_image(const Image& img, restore::RestoreModel& restorer, QualityRegressor& regressor);

/// {score, predicted_domain, domain_confidence, n_patches}
std::string report_to_json(const QualityReport& report);

/// Embeds the image in the middle of a height x width canvas, mirroring at the borders.
Image center_pad(const Image& img, int height, int width);

}  // namespace daiqa::quality
