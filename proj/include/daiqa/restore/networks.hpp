#pragma once

// Encoder / decoder / discriminators of the restoration network. All four are
// thin wrappers around nn::Sequential stacks with explicit forward caches.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "daiqa/core/nn.hpp"
#include "daiqa/restore/losses.hpp"

namespace daiqa::restore {

struct RestoreConfig {
  int depth = 3;            // number of stride-2 encoder levels
  int base_channels = 16;   // width of the first level, doubled per level
  int content_channels = 0; // 0: same as the deepest encoder level
  int degradation_dim = 8;
  int n_domains = 3;

  double lambda1 = 5.0;     // KL weight
  double lambda2 = 100.0;   // perceptual weight
  GanMode gan_mode = GanMode::kLeastSquares;
  std::vector<int> perceptual_layers{0, 1, 2};
  std::vector<int> extractor_channels{8, 16};
  std::uint64_t extractor_seed = 7;

  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 8;
  int crop_size = 64;
  int iterations = 1000;
  int checkpoint_every = 250;
  std::uint64_t seed = 0;

  // Ablation switches; each removes one loss path entirely.
  bool perceptual = true;
  bool adversarial = true;
  bool domain_classification = true;

  int level_channels(int level) const { return base_channels << level; }
  int deepest_channels() const { return level_channels(depth - 1); }
  int content_dim() const { return content_channels > 0 ? content_channels : deepest_channels(); }
  /// Spatial sizes must be multiples of this.
  int size_multiple() const { return 1 << depth; }

  /// Throws ConfigError on out-of-range settings.
  void validate() const;
};

struct Posterior {
  Tensorf features;  // deepest encoder feature map H
  Tensorf content_mu, content_logvar;  // N x Cc x h x w
  Tensorf deg_mu, deg_logvar;          // N x Dz x 1 x 1
};

class Encoder {
 public:
  Encoder(const RestoreConfig& cfg, std::mt19937_64& rng);

  /// Throws std::invalid_argument unless H and W are multiples of 2^depth.
  Posterior forward(const Tensorf& x);
  /// Gradients w.r.t. every posterior parameter; empty tensors count as zero.
  void backward(const Tensorf& g_content_mu, const Tensorf& g_content_logvar, const Tensorf& g_deg_mu,
                const Tensorf& g_deg_logvar);
  void collect(const std::string& prefix, nn::NamedParams<float>& out);

 private:
  int multiple_;
  nn::Sequential<float> trunk_;
  nn::Conv2d<float> content_mu_, content_logvar_;
  nn::Sequential<float> deg_trunk_;
  nn::Linear<float> deg_mu_, deg_logvar_;
};

class Decoder {
 public:
  Decoder(const RestoreConfig& cfg, std::mt19937_64& rng);

  /// restored = clip(x + residual(z_content, z_deg, x), 0, 1).
  Tensorf forward(const Tensorf& z_content, const Tensorf& z_deg, const Tensorf& x);

  struct Grads {
    Tensorf z_content;
    Tensorf z_deg;
  };
  /// Accumulates parameter gradients and returns latent gradients.
  Grads backward(const Tensorf& g_restored);
  void collect(const std::string& prefix, nn::NamedParams<float>& out);

 private:
  int content_dim_;
  nn::Sequential<float> up_;
  nn::Sequential<float> refine_;
  std::vector<std::uint8_t> pass_;  // 1 where the output was not clipped
};

/// PatchGAN critic: one real-valued output per receptive field.
class ImageDiscriminator {
 public:
  ImageDiscriminator(const RestoreConfig& cfg, std::mt19937_64& rng);
  Tensorf forward(const Tensorf& x) { return net_.forward(x); }
  Tensorf backward(const Tensorf& g) { return net_.backward(g); }
  void collect(const std::string& prefix, nn::NamedParams<float>& out) { net_.collect(prefix, out); }

 private:
  nn::Sequential<float> net_;
};

/// Domain classifier with one head per latent part.
class DomainDiscriminator {
 public:
  DomainDiscriminator(const RestoreConfig& cfg, std::mt19937_64& rng);
  Tensorf forward_degradation(const Tensorf& z_deg) { return deg_.forward(z_deg); }
  Tensorf backward_degradation(const Tensorf& g) { return deg_.backward(g); }
  Tensorf forward_content(const Tensorf& z_content) { return content_.forward(z_content); }
  Tensorf backward_content(const Tensorf& g) { return content_.backward(g); }
  void collect(const std::string& prefix, nn::NamedParams<float>& out);

 private:
  nn::Sequential<float> deg_;
  nn::Sequential<float> content_;
};

/// N x D x 1 x 1 -> N x D x h x w.
Tensorf broadcast_spatial(const Tensorf& v, int h, int w);
/// Adjoint of broadcast_spatial: spatial sum.
Tensorf reduce_spatial(const Tensorf& g);

}  // namespace daiqa::restore
