#pragma once

// Patch quality regressor. One conv trunk is shared by the distorted patch and
// its discrepancy map; their pooled features are concatenated with a learned
// projection of the restoration network's features and fed to two parallel
// branches of identical shape: patch score (sigmoid) and raw patch weight.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "daiqa/core/image.hpp"
#include "daiqa/core/nn.hpp"
#include "daiqa/restore/model.hpp"
#include "json.hpp"

namespace daiqa::quality {

enum class PatchLabels { kImage, kOracle };

struct RegressorConfig {
  int patch_size = 64;
  int test_stride = 0;  // 0: patch_size / 2
  std::vector<int> trunk_channels{16, 32, 32};
  int fusion_dim = 32;  // output size of the feature projection
  int hidden = 64;
  int branch_dim = 32;
  double epsilon = 1e-6;

  double lr = 1e-3;
  int batch_size = 32;
  int iterations = 1500;
  int checkpoint_every = 500;
  std::uint64_t seed = 0;
  /// Image: every patch inherits its image's score. Oracle: the manifest's
  /// full-reference oracle scores each patch against its reference patch.
  PatchLabels patch_labels = PatchLabels::kImage;
  bool semantic_fusion = true;
  std::string restore_checkpoint;

  int stride() const { return test_stride > 0 ? test_stride : patch_size / 2; }
  /// Throws ConfigError.
  void validate() const;
};

nlohmann::json config_to_json(const RegressorConfig& cfg);
/// Unknown keys raise ConfigError.
RegressorConfig regressor_config_from_json(const nlohmann::json& j);

/// Frozen restoration-network outputs for a batch of patches.
struct RegressionInput {
  Tensorf distorted;      // N x 3 x P x P
  Tensorf discrepancy;    // |distorted - restored|, same shape
  Tensorf features;       // N x F x 1 x 1: pooled deepest encoder map, then the degradation mean
  Tensorf domain_logits;  // N x n_domains x 1 x 1
};

/// Size of RegressionInput::features for a restoration config.
int restore_feature_dim(const restore::RestoreConfig& cfg);

/// Runs the restoration network on each patch (all must share one size that is
/// a multiple of 2^depth).
RegressionInput make_regression_input(const std::vector<Image>& patches, restore::RestoreModel& model);

struct RegressorOutput {
  std::vector<double> s;
  std::vector<double> w_raw;
};

class QualityRegressor {
 public:
  QualityRegressor(const RegressorConfig& cfg, int feature_dim);
  QualityRegressor(const QualityRegressor&) = delete;
  QualityRegressor& operator=(const QualityRegressor&) = delete;

  const RegressorConfig& config() const { return cfg_; }
  int feature_dim() const { return feature_dim_; }

  RegressorOutput forward(const RegressionInput& in);
  /// Gradients w.r.t. the last forward's s and w_raw; either may be empty.
  void backward(const std::vector<double>& g_s, const std::vector<double>& g_w_raw);

  nn::NamedParams<float> params();

  std::int64_t iteration = 0;
  std::string config_hash;

 private:
  RegressorConfig cfg_;
  int feature_dim_;
  int trunk_out_;
  std::mt19937_64 init_rng_;
  nn::Sequential<float> trunk_;
  nn::Linear<float> projection_;
  nn::Sequential<float> fc_;
  nn::Sequential<float> score_branch_, weight_branch_;
  int batch_ = 0;
  Tensorf sigmoid_out_;
};

void save_regressor(const std::filesystem::path& path, QualityRegressor& model);
/// Missing or truncated file: DataError; foreign or mismatched file: ConfigError.
std::unique_ptr<QualityRegressor> load_regressor(const std::filesystem::path& path);

}  // namespace daiqa::quality
