#include "daiqa/quality/regressor.hpp"

#include <cmath>
#include <set>

#include "daiqa/core/errors.hpp"
#include "daiqa/core/param_file.hpp"

namespace daiqa::quality {

namespace {
constexpr const char* kKind = "regressor";
}

void RegressorConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("regressor config: ") + what);
  };
  require(patch_size >= 8, "patch_size must be at least 8");
  require(test_stride >= 0, "test_stride must be non-negative");
  require(!trunk_channels.empty(), "trunk_channels must not be empty");
  for (int c : trunk_channels) require(c >= 1, "trunk channel counts must be positive");
  require(fusion_dim >= 1 && hidden >= 1 && branch_dim >= 1, "layer widths must be positive");
  require(epsilon > 0, "epsilon must be positive");
  require(lr > 0, "lr must be positive");
  require(batch_size >= 1, "batch_size must be positive");
  require(iterations >= 0, "iterations must be non-negative");
  require(checkpoint_every >= 1, "checkpoint_every must be positive");
}

nlohmann::json config_to_json(const RegressorConfig& c) {
  return {{"patch_size", c.patch_size},
          {"test_stride", c.test_stride},
          {"trunk_channels", c.trunk_channels},
          {"fusion_dim", c.fusion_dim},
          {"hidden", c.hidden},
          {"branch_dim", c.branch_dim},
          {"epsilon", c.epsilon},
          {"lr", c.lr},
          {"batch_size", c.batch_size},
          {"iterations", c.iterations},
          {"checkpoint_every", c.checkpoint_every},
          {"seed", c.seed},
          {"patch_labels", c.patch_labels == PatchLabels::kOracle ? "oracle" : "image"},
          {"semantic_fusion", c.semantic_fusion},
          {"restore_checkpoint", c.restore_checkpoint}};
}

RegressorConfig regressor_config_from_json(const nlohmann::json& j) {
  RegressorConfig c;
  const nlohmann::json defaults = config_to_json(RegressorConfig{});
  try {
    for (const auto& [key, v] : j.items())
      if (!defaults.contains(key)) throw ConfigError("unknown regressor config key '" + key + "'");
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("patch_size", c.patch_size);
    get("test_stride", c.test_stride);
    get("trunk_channels", c.trunk_channels);
    get("fusion_dim", c.fusion_dim);
    get("hidden", c.hidden);
    get("branch_dim", c.branch_dim);
    get("epsilon", c.epsilon);
    get("lr", c.lr);
    get("batch_size", c.batch_size);
    get("iterations", c.iterations);
    get("checkpoint_every", c.checkpoint_every);
    get("seed", c.seed);
    if (j.contains("patch_labels")) {
      const auto name = j.at("patch_labels").get<std::string>();
      if (name == "image")
        c.patch_labels = PatchLabels::kImage;
      else if (name == "oracle")
        c.patch_labels = PatchLabels::kOracle;
      else
        throw ConfigError("patch_labels must be 'image' or 'oracle', got '" + name + "'");
    }
    get("semantic_fusion", c.semantic_fusion);
    get("restore_checkpoint", c.restore_checkpoint);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("regressor config: ") + e.what());
  }
  c.validate();
  return c;
}

int restore_feature_dim(const restore::RestoreConfig& cfg) { return cfg.deepest_channels() + cfg.degradation_dim; }

RegressionInput make_regression_input(const std::vector<Image>& patches, restore::RestoreModel& model) {
  if (patches.empty()) throw std::invalid_argument("make_regression_input: no patches");
  const int h = patches[0].height(), w = patches[0].width();
  Tensorf x(static_cast<int>(patches.size()), 3, h, w);
  for (std::size_t n = 0; n < patches.size(); ++n) {
    if (patches[n].height() != h || patches[n].width() != w)
      throw std::invalid_argument("make_regression_input: patches differ in size");
    const auto& px = patches[n].pixels();
    std::copy(px.begin(), px.end(), x.sample(static_cast<int>(n)).begin());
  }
  restore::RestorationBatch b = restore::restore_tensor(model, x);

  RegressionInput in;
  in.discrepancy = x;
  for (std::size_t i = 0; i < x.size(); ++i) in.discrepancy[i] = std::abs(x[i] - b.restored[i]);
  in.distorted = std::move(x);
  const int fc = b.features.c(), dz = b.deg_mu.c();
  in.features = Tensorf(in.distorted.n(), fc + dz, 1, 1);
  for (int n = 0; n < in.distorted.n(); ++n) {
    for (int c = 0; c < fc; ++c) {
      double s = 0;
      for (float v : b.features.plane(n, c)) s += v;
      in.features.at(n, c, 0, 0) = static_cast<float>(s / b.features.plane_size());
    }
    for (int c = 0; c < dz; ++c) in.features.at(n, fc + c, 0, 0) = b.deg_mu.at(n, c, 0, 0);
  }
  in.domain_logits = std::move(b.domain_logits);
  return in;
}

QualityRegressor::QualityRegressor(const RegressorConfig& cfg, int feature_dim)
    : cfg_((cfg.validate(), cfg)),
      feature_dim_(feature_dim),
      trunk_out_(cfg.trunk_channels.back()),
      init_rng_(cfg.seed),
      projection_(feature_dim, cfg.fusion_dim, init_rng_) {
  if (feature_dim < 1) throw ConfigError("regressor: feature_dim must be positive");
  int in = 3;
  for (int c : cfg_.trunk_channels) {
    trunk_.add<nn::Conv2d<float>>(in, c, 3, 2, 1, init_rng_);
    trunk_.add<nn::LeakyRelu<float>>(0.2);
    in = c;
  }
  trunk_.add<nn::GlobalAvgPool<float>>();
  const int fused = 2 * trunk_out_ + (cfg_.semantic_fusion ? cfg_.fusion_dim : 0);
  fc_.add<nn::Linear<float>>(fused, cfg_.hidden, init_rng_);
  fc_.add<nn::LeakyRelu<float>>(0.2);
  for (auto* branch : {&score_branch_, &weight_branch_}) {
    branch->add<nn::Linear<float>>(cfg_.hidden, cfg_.branch_dim, init_rng_);
    branch->add<nn::LeakyRelu<float>>(0.2);
  }
  score_branch_.add<nn::Linear<float>>(cfg_.branch_dim, 1, init_rng_);
  // Start the weights near-uniform (w_raw ~ 1) so untrained weighting does not
  // distort the aggregate.
  auto& w_out = weight_branch_.add<nn::Linear<float>>(cfg_.branch_dim, 1, init_rng_, 0.1);
  w_out.bias().value.fill(1.0f);
}

RegressorOutput QualityRegressor::forward(const RegressionInput& in) {
  const int n = in.distorted.n();
  in.distorted.check_same(in.discrepancy, "QualityRegressor::forward");
  if (in.features.n() != n) throw std::invalid_argument("QualityRegressor::forward: feature batch size");
  batch_ = n;
  const Tensorf pooled = trunk_.forward(concat_batch(in.distorted, in.discrepancy));
  Tensorf fused = concat_channels(slice_batch(pooled, 0, n), slice_batch(pooled, n, n));
  if (cfg_.semantic_fusion) fused = concat_channels(fused, projection_.forward(in.features));
  const Tensorf h = fc_.forward(fused);
  const Tensorf s_logit = score_branch_.forward(h);
  const Tensorf w_raw = weight_branch_.forward(h);

  RegressorOutput out;
  sigmoid_out_ = Tensorf(n, 1, 1, 1);
  for (int i = 0; i < n; ++i) {
    const float s = 1.0f / (1.0f + std::exp(-s_logit[i]));
    sigmoid_out_[i] = s;
    out.s.push_back(s);
    out.w_raw.push_back(w_raw[i]);
  }
  return out;
}

void QualityRegressor::backward(const std::vector<double>& g_s, const std::vector<double>& g_w_raw) {
  const int n = batch_;
  Tensorf g_h(n, cfg_.hidden, 1, 1);
  if (!g_s.empty()) {
    if (static_cast<int>(g_s.size()) != n) throw std::invalid_argument("QualityRegressor::backward: g_s size");
    Tensorf g(n, 1, 1, 1);
    for (int i = 0; i < n; ++i) g[i] = static_cast<float>(g_s[i]) * sigmoid_out_[i] * (1.0f - sigmoid_out_[i]);
    g_h += score_branch_.backward(g);
  }
  if (!g_w_raw.empty()) {
    if (static_cast<int>(g_w_raw.size()) != n) throw std::invalid_argument("QualityRegressor::backward: g_w size");
    Tensorf g(n, 1, 1, 1);
    for (int i = 0; i < n; ++i) g[i] = static_cast<float>(g_w_raw[i]);
    g_h += weight_branch_.backward(g);
  }
  const Tensorf g_fused = fc_.backward(g_h);
  auto [g_pair, g_proj] = split_channels(g_fused, 2 * trunk_out_);
  if (cfg_.semantic_fusion) projection_.backward(g_proj);
  auto [g_d, g_e] = split_channels(g_pair, trunk_out_);
  trunk_.backward(concat_batch(g_d, g_e));
}

nn::NamedParams<float> QualityRegressor::params() {
  nn::NamedParams<float> out;
  trunk_.collect("trunk", out);
  if (cfg_.semantic_fusion) projection_.collect("projection", out);
  fc_.collect("fc", out);
  score_branch_.collect("score", out);
  weight_branch_.collect("weight", out);
  return out;
}

void save_regressor(const std::filesystem::path& path, QualityRegressor& model) {
  nlohmann::json meta{{"config", config_to_json(model.config())},
                      {"feature_dim", model.feature_dim()},
                      {"iteration", model.iteration}};
  if (!model.config_hash.empty()) meta["config_hash"] = model.config_hash;
  write_param_file(path, kKind, meta, model.params());
}

std::unique_ptr<QualityRegressor> load_regressor(const std::filesystem::path& path) {
  const ParamFile file = read_param_file(path, kKind);
  std::unique_ptr<QualityRegressor> model;
  try {
    model = std::make_unique<QualityRegressor>(regressor_config_from_json(file.meta.at("config")),
                                               file.meta.at("feature_dim").get<int>());
    model->iteration = file.meta.value("iteration", std::int64_t{0});
    model->config_hash = file.meta.value("config_hash", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("regressor checkpoint header: " + std::string(e.what()));
  }
  assign_params(file, model->params());
  return model;
}

}  // namespace daiqa::quality
