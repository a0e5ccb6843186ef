#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "daiqa/core/image.hpp"
#include "daiqa/restore/networks.hpp"
#include "json.hpp"

namespace daiqa::restore {

nlohmann::json config_to_json(const RestoreConfig& cfg);
/// Unknown or mistyped keys raise ConfigError.
RestoreConfig config_from_json(const nlohmann::json& j);

/// Every trainable part of the restoration network plus the frozen perceptual
/// feature extractor (rebuilt from its seed, never stored).
class RestoreModel {
 public:
  explicit RestoreModel(const RestoreConfig& cfg);
  RestoreModel(const RestoreModel&) = delete;
  RestoreModel& operator=(const RestoreModel&) = delete;

  const RestoreConfig& config() const { return cfg_; }
  Encoder& encoder() { return encoder_; }
  Decoder& decoder() { return decoder_; }
  ImageDiscriminator& image_discriminator() { return image_disc_; }
  DomainDiscriminator& domain_discriminator() { return domain_disc_; }
  FeatureExtractor<float>& extractor() { return extractor_; }

  nn::NamedParams<float> encoder_params();
  nn::NamedParams<float> decoder_params();
  nn::NamedParams<float> image_discriminator_params();
  nn::NamedParams<float> domain_discriminator_params();
  /// All of the above in a fixed order; this is what a checkpoint stores.
  nn::NamedParams<float> params();

  std::int64_t iteration = 0;
  /// Hash of the experiment configuration that produced the weights, if any.
  std::string config_hash;

 private:
  RestoreConfig cfg_;
  std::mt19937_64 init_rng_;
  Encoder encoder_;
  Decoder decoder_;
  ImageDiscriminator image_disc_;
  DomainDiscriminator domain_disc_;
  FeatureExtractor<float> extractor_;
};

void save_checkpoint(const std::filesystem::path& path, RestoreModel& model);
/// Throws ConfigError when the stored tensors do not fit the stored config.
std::unique_ptr<RestoreModel> load_checkpoint(const std::filesystem::path& path);

/// Inference results for a batch whose spatial size is a multiple of 2^depth.
struct RestorationBatch {
  Tensorf restored;
  Tensorf features;       // deepest encoder map H
  Tensorf content_mu;     // posterior mean of the content latent
  Tensorf deg_mu;         // posterior mean of the degradation latent, N x Dz x 1 x 1
  Tensorf domain_logits;  // N x n_domains x 1 x 1
};

/// Deterministic forward pass with posterior means instead of samples.
RestorationBatch restore_tensor(RestoreModel& model, const Tensorf& x);

struct RestorationOutput {
  Image restored;
  Image discrepancy;  // |input - restored|
  Tensorf features;   // computed on the reflect-padded input
  std::vector<float> deg_mu;
  std::vector<float> content_code;  // spatial mean of the content posterior mean
  std::vector<double> domain_logits;
};

/// Restores one image. Inputs whose size is not a multiple of 2^depth are
/// reflect-padded and the output cropped back. Throws std::invalid_argument for
/// values outside [0,1].
RestorationOutput restore(const Image& img, RestoreModel& model);

/// Mirror padding on the bottom and right edges.
Image pad_reflect(const Image& img, int height, int width);

}  // namespace daiqa::restore
