#include "daiqa/restore/model.hpp"

#include <cmath>
#include <set>

#include "daiqa/core/errors.hpp"
#include "daiqa/core/param_file.hpp"

namespace daiqa::restore {

namespace {
constexpr const char* kKind = "restore";
}

nlohmann::json config_to_json(const RestoreConfig& c) {
  return {{"depth", c.depth},
          {"base_channels", c.base_channels},
          {"content_channels", c.content_channels},
          {"degradation_dim", c.degradation_dim},
          {"n_domains", c.n_domains},
          {"lambda1", c.lambda1},
          {"lambda2", c.lambda2},
          {"gan_mode", std::string(to_string(c.gan_mode))},
          {"perceptual_layers", c.perceptual_layers},
          {"extractor_channels", c.extractor_channels},
          {"extractor_seed", c.extractor_seed},
          {"lr", c.lr},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"batch_size", c.batch_size},
          {"crop_size", c.crop_size},
          {"iterations", c.iterations},
          {"checkpoint_every", c.checkpoint_every},
          {"seed", c.seed},
          {"perceptual", c.perceptual},
          {"adversarial", c.adversarial},
          {"domain_classification", c.domain_classification}};
}

RestoreConfig config_from_json(const nlohmann::json& j) {
  RestoreConfig c;
  const std::set<std::string> known = [] {
    std::set<std::string> k;
    const nlohmann::json defaults = config_to_json(RestoreConfig{});
    for (const auto& [key, v] : defaults.items()) k.insert(key);
    return k;
  }();
  try {
    for (const auto& [key, v] : j.items())
      if (!known.contains(key)) throw ConfigError("unknown restore config key '" + key + "'");
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("depth", c.depth);
    get("base_channels", c.base_channels);
    get("content_channels", c.content_channels);
    get("degradation_dim", c.degradation_dim);
    get("n_domains", c.n_domains);
    get("lambda1", c.lambda1);
    get("lambda2", c.lambda2);
    if (j.contains("gan_mode")) c.gan_mode = parse_gan_mode(j.at("gan_mode").get<std::string>());
    get("perceptual_layers", c.perceptual_layers);
    get("extractor_channels", c.extractor_channels);
    get("extractor_seed", c.extractor_seed);
    get("lr", c.lr);
    get("beta1", c.beta1);
    get("beta2", c.beta2);
    get("batch_size", c.batch_size);
    get("crop_size", c.crop_size);
    get("iterations", c.iterations);
    get("checkpoint_every", c.checkpoint_every);
    get("seed", c.seed);
    get("perceptual", c.perceptual);
    get("adversarial", c.adversarial);
    get("domain_classification", c.domain_classification);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("restore config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

RestoreModel::RestoreModel(const RestoreConfig& cfg)
    : cfg_((cfg.validate(), cfg)),
      init_rng_(cfg.seed),
      encoder_(cfg_, init_rng_),
      decoder_(cfg_, init_rng_),
      image_disc_(cfg_, init_rng_),
      domain_disc_(cfg_, init_rng_),
      extractor_(cfg_.extractor_channels, cfg_.extractor_seed) {}

nn::NamedParams<float> RestoreModel::encoder_params() {
  nn::NamedParams<float> out;
  encoder_.collect("encoder", out);
  return out;
}
nn::NamedParams<float> RestoreModel::decoder_params() {
  nn::NamedParams<float> out;
  decoder_.collect("decoder", out);
  return out;
}
nn::NamedParams<float> RestoreModel::image_discriminator_params() {
  nn::NamedParams<float> out;
  image_disc_.collect("image_disc", out);
  return out;
}
nn::NamedParams<float> RestoreModel::domain_discriminator_params() {
  nn::NamedParams<float> out;
  domain_disc_.collect("domain_disc", out);
  return out;
}

nn::NamedParams<float> RestoreModel::params() {
  auto out = encoder_params();
  for (auto&& more : {decoder_params(), image_discriminator_params(), domain_discriminator_params()})
    out.insert(out.end(), more.begin(), more.end());
  return out;
}

void save_checkpoint(const std::filesystem::path& path, RestoreModel& model) {
  nlohmann::json meta{{"config", config_to_json(model.config())}, {"iteration", model.iteration}};
  if (!model.config_hash.empty()) meta["config_hash"] = model.config_hash;
  write_param_file(path, kKind, meta, model.params());
}

std::unique_ptr<RestoreModel> load_checkpoint(const std::filesystem::path& path) {
  const ParamFile file = read_param_file(path, kKind);
  auto model = std::make_unique<RestoreModel>(config_from_json(file.meta.at("config")));
  assign_params(file, model->params());
  model->iteration = file.meta.value("iteration", std::int64_t{0});
  model->config_hash = file.meta.value("config_hash", std::string{});
  return model;
}

RestorationBatch restore_tensor(RestoreModel& model, const Tensorf& x) {
  Posterior p = model.encoder().forward(x);
  RestorationBatch b;
  b.restored = model.decoder().forward(p.content_mu, p.deg_mu, x);
  b.domain_logits = model.domain_discriminator().forward_degradation(p.deg_mu);
  b.features = std::move(p.features);
  b.content_mu = std::move(p.content_mu);
  b.deg_mu = std::move(p.deg_mu);
  return b;
}

namespace {

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

Image pad_reflect(const Image& img, int height, int width) {
  if (height < img.height() || width < img.width()) throw std::invalid_argument("pad_reflect: target smaller than image");
  Image out(height, width);
  for (int c = 0; c < Image::kChannels; ++c)
    for (int y = 0; y < height; ++y) {
      const int sy = reflect_index(y, img.height());
      for (int x = 0; x < width; ++x) out.at(c, y, x) = img.at(c, sy, reflect_index(x, img.width()));
    }
  return out;
}

RestorationOutput restore(const Image& img, RestoreModel& model) {
  if (img.empty()) throw std::invalid_argument("restore: empty image");
  if (!img.in_unit_range()) throw std::invalid_argument("restore: pixel values outside [0,1]");
  const int m = model.config().size_multiple();
  const int ph = (img.height() + m - 1) / m * m;
  const int pw = (img.width() + m - 1) / m * m;
  const bool padded = ph != img.height() || pw != img.width();
  const Image input = padded ? pad_reflect(img, ph, pw) : img;

  RestorationBatch b = restore_tensor(model, input.to_tensor());
  RestorationOutput out;
  out.restored = Image::from_tensor(b.restored);
  if (padded) out.restored = out.restored.crop(0, 0, img.height(), img.width());
  out.discrepancy = img;
  for (std::size_t i = 0; i < img.size(); ++i)
    out.discrepancy.pixels()[i] = std::abs(img.pixels()[i] - out.restored.pixels()[i]);
  out.features = std::move(b.features);
  out.deg_mu.assign(b.deg_mu.vec().begin(), b.deg_mu.vec().end());
  out.content_code.resize(b.content_mu.c());
  for (int c = 0; c < b.content_mu.c(); ++c) {
    double s = 0;
    for (float v : b.content_mu.plane(0, c)) s += v;
    out.content_code[c] = static_cast<float>(s / b.content_mu.plane_size());
  }
  out.domain_logits.assign(b.domain_logits.vec().begin(), b.domain_logits.vec().end());
  return out;
}

}  // namespace daiqa::restore
