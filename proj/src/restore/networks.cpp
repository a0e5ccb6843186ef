#include "daiqa/restore/networks.hpp"

#include <algorithm>

#include "daiqa/core/errors.hpp"

namespace daiqa::restore {

using nn::Conv2d;
using nn::ConvTranspose2d;
using nn::GlobalAvgPool;
using nn::InstanceNorm2d;
using nn::LeakyRelu;
using nn::Linear;

void RestoreConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("restore config: ") + what);
  };
  require(depth >= 2 && depth <= 6, "depth must be in [2,6]");
  require(base_channels >= 1, "base_channels must be positive");
  require(degradation_dim >= 1, "degradation_dim must be positive");
  require(n_domains >= 1, "n_domains must be positive");
  require(lambda1 > 0 && lambda2 > 0, "loss weights must be positive");
  require(lr > 0, "lr must be positive");
  require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, "Adam betas must be in [0,1)");
  require(batch_size >= 1, "batch_size must be positive");
  require(crop_size >= size_multiple() && crop_size % size_multiple() == 0,
          "crop_size must be a positive multiple of 2^depth");
  require(iterations >= 0, "iterations must be non-negative");
  require(checkpoint_every >= 1, "checkpoint_every must be positive");
  require(!perceptual_layers.empty(), "perceptual_layers must not be empty");
  for (int l : perceptual_layers)
    require(l >= 0 && l <= static_cast<int>(extractor_channels.size()), "perceptual layer index out of range");
}

Encoder::Encoder(const RestoreConfig& cfg, std::mt19937_64& rng)
    : multiple_(cfg.size_multiple()),
      content_mu_(cfg.deepest_channels(), cfg.content_dim(), 1, 1, 0, rng),
      content_logvar_(cfg.deepest_channels(), cfg.content_dim(), 1, 1, 0, rng, 0.1),
      deg_mu_(cfg.deepest_channels(), cfg.degradation_dim, rng),
      deg_logvar_(cfg.deepest_channels(), cfg.degradation_dim, rng, 0.1) {
  int in = 3;
  for (int l = 0; l < cfg.depth; ++l) {
    const int out = cfg.level_channels(l);
    trunk_.add<Conv2d<float>>(in, out, 4, 2, 1, rng);
    trunk_.add<InstanceNorm2d<float>>(out);
    trunk_.add<LeakyRelu<float>>(0.2);
    in = out;
  }
  deg_trunk_.add<Conv2d<float>>(in, in, 3, 1, 1, rng);
  deg_trunk_.add<LeakyRelu<float>>(0.2);
  deg_trunk_.add<GlobalAvgPool<float>>();
}

Posterior Encoder::forward(const Tensorf& x) {
  if (x.h() % multiple_ != 0 || x.w() % multiple_ != 0)
    throw std::invalid_argument("encoder input " + x.shape_string() + ": height and width must be multiples of " +
                                std::to_string(multiple_));
  Posterior p;
  p.features = trunk_.forward(x);
  p.content_mu = content_mu_.forward(p.features);
  p.content_logvar = content_logvar_.forward(p.features);
  const Tensorf pooled = deg_trunk_.forward(p.features);
  p.deg_mu = deg_mu_.forward(pooled);
  p.deg_logvar = deg_logvar_.forward(pooled);
  return p;
}

void Encoder::backward(const Tensorf& g_cmu, const Tensorf& g_clv, const Tensorf& g_dmu, const Tensorf& g_dlv) {
  Tensorf g_feat;
  auto add = [](Tensorf& acc, Tensorf g) {
    if (acc.empty()) acc = std::move(g);
    else acc += g;
  };
  if (!g_cmu.empty()) add(g_feat, content_mu_.backward(g_cmu));
  if (!g_clv.empty()) add(g_feat, content_logvar_.backward(g_clv));
  Tensorf g_pool;
  if (!g_dmu.empty()) add(g_pool, deg_mu_.backward(g_dmu));
  if (!g_dlv.empty()) add(g_pool, deg_logvar_.backward(g_dlv));
  if (!g_pool.empty()) add(g_feat, deg_trunk_.backward(g_pool));
  if (!g_feat.empty()) trunk_.backward(g_feat);
}

void Encoder::collect(const std::string& prefix, nn::NamedParams<float>& out) {
  trunk_.collect(prefix + ".trunk", out);
  content_mu_.collect(prefix + ".content_mu", out);
  content_logvar_.collect(prefix + ".content_logvar", out);
  deg_trunk_.collect(prefix + ".deg_trunk", out);
  deg_mu_.collect(prefix + ".deg_mu", out);
  deg_logvar_.collect(prefix + ".deg_logvar", out);
}

Tensorf broadcast_spatial(const Tensorf& v, int h, int w) {
  Tensorf out(v.n(), static_cast<int>(v.sample_size()), h, w);
  for (int n = 0; n < out.n(); ++n) {
    auto s = v.sample(n);
    for (int c = 0; c < out.c(); ++c) std::ranges::fill(out.plane(n, c), s[c]);
  }
  return out;
}

Tensorf reduce_spatial(const Tensorf& g) {
  Tensorf out(g.n(), g.c(), 1, 1);
  for (int n = 0; n < g.n(); ++n)
    for (int c = 0; c < g.c(); ++c) {
      float s = 0;
      for (float v : g.plane(n, c)) s += v;
      out.at(n, c, 0, 0) = s;
    }
  return out;
}

Decoder::Decoder(const RestoreConfig& cfg, std::mt19937_64& rng) : content_dim_(cfg.content_dim()) {
  int in = cfg.content_dim() + cfg.degradation_dim;
  for (int l = cfg.depth - 1; l >= 0; --l) {
    const int out = cfg.level_channels(std::max(l - 1, 0));
    up_.add<ConvTranspose2d<float>>(in, out, 4, 2, 1, rng);
    up_.add<InstanceNorm2d<float>>(out);
    up_.add<LeakyRelu<float>>(0.2);
    in = out;
  }
  refine_.add<Conv2d<float>>(in + 3, cfg.base_channels, 3, 1, 1, rng);
  refine_.add<LeakyRelu<float>>(0.2);
  // Small last layer: the untrained network starts close to the identity map.
  refine_.add<Conv2d<float>>(cfg.base_channels, 3, 3, 1, 1, rng, 0.1);
}

Tensorf Decoder::forward(const Tensorf& z_content, const Tensorf& z_deg, const Tensorf& x) {
  const Tensorf z = concat_channels(z_content, broadcast_spatial(z_deg, z_content.h(), z_content.w()));
  const Tensorf up = up_.forward(z);
  Tensorf out = refine_.forward(concat_channels(up, x));
  pass_.assign(out.size(), 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float v = out[i] + x[i];
    out[i] = std::clamp(v, 0.0f, 1.0f);
    pass_[i] = (v > 0.0f && v < 1.0f) ? 1 : 0;
  }
  return out;
}

Decoder::Grads Decoder::backward(const Tensorf& g_restored) {
  Tensorf g = g_restored;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!pass_[i]) g[i] = 0.0f;
  const Tensorf g_cat = refine_.backward(g);
  // The skip input x is data; its gradient is dropped.
  auto [g_up, g_x] = split_channels(g_cat, g_cat.c() - 3);
  const Tensorf g_z = up_.backward(g_up);
  auto [g_zc, g_zd] = split_channels(g_z, content_dim_);
  return {std::move(g_zc), reduce_spatial(g_zd)};
}

void Decoder::collect(const std::string& prefix, nn::NamedParams<float>& out) {
  up_.collect(prefix + ".up", out);
  refine_.collect(prefix + ".refine", out);
}

ImageDiscriminator::ImageDiscriminator(const RestoreConfig& cfg, std::mt19937_64& rng) {
  const int c = cfg.base_channels;
  net_.add<Conv2d<float>>(3, c, 4, 2, 1, rng);
  net_.add<LeakyRelu<float>>(0.2);
  net_.add<Conv2d<float>>(c, 2 * c, 4, 2, 1, rng);
  net_.add<InstanceNorm2d<float>>(2 * c);
  net_.add<LeakyRelu<float>>(0.2);
  net_.add<Conv2d<float>>(2 * c, 1, 3, 1, 1, rng);
}

DomainDiscriminator::DomainDiscriminator(const RestoreConfig& cfg, std::mt19937_64& rng) {
  constexpr int kHidden = 32;
  deg_.add<Linear<float>>(cfg.degradation_dim, kHidden, rng);
  deg_.add<LeakyRelu<float>>(0.2);
  deg_.add<Linear<float>>(kHidden, cfg.n_domains, rng);
  content_.add<GlobalAvgPool<float>>();
  content_.add<Linear<float>>(cfg.content_dim(), kHidden, rng);
  content_.add<LeakyRelu<float>>(0.2);
  content_.add<Linear<float>>(kHidden, cfg.n_domains, rng);
}

void DomainDiscriminator::collect(const std::string& prefix, nn::NamedParams<float>& out) {
  deg_.collect(prefix + ".deg", out);
  content_.collect(prefix + ".content", out);
}

}  // namespace daiqa::restore
