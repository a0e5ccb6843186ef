#include <gtest/gtest.h>

#include <cmath>

#include "daiqa/core/errors.hpp"
#include "daiqa/core/param_file.hpp"
#include "daiqa/forge/pristine.hpp"
#include "daiqa/restore/model.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"

using namespace daiqa;
using namespace daiqa::restore;

namespace {

RestoreConfig small_config() {
  RestoreConfig c;
  c.depth = 3;
  c.base_channels = 4;
  c.degradation_dim = 3;
  c.n_domains = 2;
  c.seed = 11;
  return c;
}

nn::Param<float>* find_param(const nn::NamedParams<float>& params, const std::string& name) {
  for (const auto& [n, p] : params)
    if (n == name) return p;
  return nullptr;
}

}  // namespace

TEST(Encoder, DeepestMapIsInputOverTwoToTheDepth) {
  RestoreModel m(small_config());
  EXPECT_EQ(m.encoder().forward(Tensorf(1, 3, 64, 64)).features.shape(), (std::array<int, 4>{1, 16, 8, 8}));

  RestoreConfig deep = small_config();
  deep.depth = 5;
  deep.base_channels = 2;
  RestoreModel m5(deep);
  const auto p = m5.encoder().forward(Tensorf(1, 3, 256, 256));
  EXPECT_EQ(p.features.h(), 8);
  EXPECT_EQ(p.features.w(), 8);
  EXPECT_EQ(p.deg_mu.shape(), (std::array<int, 4>{1, 3, 1, 1}));
}

TEST(Encoder, RejectsIndivisibleSizeNamingTheMultiple) {
  RestoreModel m(small_config());
  try {
    m.encoder().forward(Tensorf(1, 3, 60, 64));
    FAIL() << "expected std::invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("multiples of 8"), std::string::npos) << e.what();
  }
}

TEST(Decoder, ZeroResidualBranchReturnsInput) {
  RestoreModel m(small_config());
  const auto params = m.decoder_params();
  for (const char* name : {"decoder.refine.2.weight", "decoder.refine.2.bias"}) {
    auto* p = find_param(params, name);
    ASSERT_NE(p, nullptr) << name;
    p->value.fill(0.0f);
  }
  std::mt19937_64 rng(1);
  const auto x = daiqa::testing::random_tensor<float>(2, 3, 16, 16, rng, 0.01, 0.99);
  const auto post = m.encoder().forward(x);
  EXPECT_EQ(m.decoder().forward(post.content_mu, post.deg_mu, x).vec(), x.vec());
}

TEST(Decoder, OutputAlwaysInUnitRange) {
  RestoreModel m(small_config());
  for (auto& [name, p] : m.decoder_params()) p->value *= 50.0f;  // force large residuals
  std::mt19937_64 rng(2);
  const auto x = daiqa::testing::random_tensor<float>(2, 3, 16, 16, rng, 0, 1);
  const auto post = m.encoder().forward(x);
  const auto y = m.decoder().forward(post.content_mu, post.deg_mu, x);
  for (float v : y.vec()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Restore, EvalModeIsDeterministicAndDiscrepancyIsAbsolute) {
  RestoreModel m(small_config());
  const Image img = forge::generate_pristine(32, 40, 5);
  const auto a = restore::restore(img, m);
  const auto b = restore::restore(img, m);
  EXPECT_EQ(a.restored, b.restored);
  EXPECT_EQ(a.domain_logits, b.domain_logits);
  ASSERT_EQ(a.domain_logits.size(), 2u);
  for (std::size_t i = 0; i < img.size(); ++i) {
    EXPECT_GE(a.discrepancy.pixels()[i], 0.0f);
    EXPECT_FLOAT_EQ(a.discrepancy.pixels()[i], std::abs(img.pixels()[i] - a.restored.pixels()[i]));
  }
}

TEST(Restore, PadsAndCropsNonMultipleSizes) {
  RestoreModel m(small_config());
  const Image img = forge::generate_pristine(37, 50, 6);
  const auto out = restore::restore(img, m);
  EXPECT_EQ(out.restored.height(), 37);
  EXPECT_EQ(out.restored.width(), 50);
  EXPECT_EQ(out.features.h(), 5);  // 40 / 8
  EXPECT_EQ(out.features.w(), 7);  // 56 / 8
  EXPECT_TRUE(out.restored.in_unit_range());
}

TEST(Restore, UntrainedOutputsAreFinite) {
  RestoreModel m(small_config());
  const auto out = restore::restore(forge::generate_pristine(16, 16, 7), m);
  for (double v : out.domain_logits) EXPECT_TRUE(std::isfinite(v));
  for (float v : out.deg_mu) EXPECT_TRUE(std::isfinite(v));
  EXPECT_TRUE(out.restored.in_unit_range());
}

TEST(Restore, RejectsOutOfRangePixels) {
  RestoreModel m(small_config());
  Image img(16, 16, 0.5f);
  img.at(0, 0, 0) = 1.5f;
  EXPECT_THROW(restore::restore(img, m), std::invalid_argument);
}

TEST(PadReflect, MirrorsWithoutRepeatingTheEdge) {
  Image img(1, 3);
  for (int c = 0; c < 3; ++c)
    for (int x = 0; x < 3; ++x) img.at(c, 0, x) = 0.1f * (x + 1);
  const Image p = pad_reflect(img, 2, 6);
  const float want[6] = {0.1f, 0.2f, 0.3f, 0.2f, 0.1f, 0.2f};
  for (int x = 0; x < 6; ++x) {
    EXPECT_FLOAT_EQ(p.at(0, 0, x), want[x]);
    EXPECT_FLOAT_EQ(p.at(2, 1, x), want[x]);
  }
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  daiqa::testing::TempDir dir;
  RestoreModel m(small_config());
  m.iteration = 17;
  save_checkpoint(dir / "m.ckpt", m);
  auto loaded = load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(loaded->iteration, 17);
  EXPECT_EQ(config_to_json(loaded->config()), config_to_json(m.config()));
  const Image img = forge::generate_pristine(24, 24, 8);
  const auto a = restore::restore(img, m);
  const auto b = restore::restore(img, *loaded);
  EXPECT_EQ(a.restored, b.restored);
  EXPECT_EQ(a.deg_mu, b.deg_mu);
  EXPECT_EQ(a.domain_logits, b.domain_logits);
}

TEST(Checkpoint, ConfigMismatchIsAConfigError) {
  daiqa::testing::TempDir dir;
  RestoreModel m(small_config());
  RestoreConfig other = small_config();
  other.base_channels = 6;
  write_param_file(dir / "bad.ckpt", "restore", {{"config", config_to_json(other)}, {"iteration", 0}}, m.params());
  EXPECT_THROW(load_checkpoint(dir / "bad.ckpt"), ConfigError);
}

TEST(Checkpoint, MissingOrForeignFilesAreRejected) {
  daiqa::testing::TempDir dir;
  EXPECT_THROW(load_checkpoint(dir / "absent.ckpt"), DataError);
  RestoreModel m(small_config());
  write_param_file(dir / "other.ckpt", "regressor", {}, m.params());
  EXPECT_THROW(load_checkpoint(dir / "other.ckpt"), ConfigError);
}

TEST(RestoreConfigJson, RoundTripsAndRejectsUnknownKeys) {
  RestoreConfig c = small_config();
  c.gan_mode = GanMode::kLogistic;
  c.perceptual_layers = {0, 2};
  const auto j = config_to_json(c);
  EXPECT_EQ(config_to_json(config_from_json(j)), j);
  auto bad = j;
  bad["lamda1"] = 1.0;
  EXPECT_THROW(config_from_json(bad), ConfigError);
  auto wrong = j;
  wrong["depth"] = 0;
  EXPECT_THROW(config_from_json(wrong), ConfigError);
}
