#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "daiqa/core/errors.hpp"
#include "daiqa/pipeline/config.hpp"
#include "fixtures.hpp"

using namespace daiqa;
using namespace daiqa::pipeline;

TEST(Config, DefaultsMatchTheDocumentedValues) {
  const ExperimentConfig c = default_experiment();
  EXPECT_EQ(c.repeats, 10);
  EXPECT_DOUBLE_EQ(c.splits[0], 0.6);
  EXPECT_DOUBLE_EQ(c.splits[1], 0.2);
  EXPECT_DOUBLE_EQ(c.splits[2], 0.2);
  ASSERT_EQ(c.dataset.domains.size(), 3u);
  EXPECT_EQ(c.dataset.domains[0].spec.kind, forge::DistortionKind::kWhiteNoise);
  EXPECT_DOUBLE_EQ(c.dataset.domains[0].spec.level, 25.0 / 255.0);
  EXPECT_EQ(c.dataset.domains[2].spec.kind, forge::DistortionKind::kJpeg);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, EmptyTextGivesDefaults) {
  EXPECT_EQ(to_ini(parse_experiment_ini("")), to_ini(default_experiment()));
}

TEST(Config, RoundTripsThroughIni) {
  const std::string text =
      "[experiment]\nseed = 42\nrepeats = 3\n"
      "[dataset]\npristine_count = 12\ndomains = white_noise:0.02|0.05, jpeg:30\noracle = ssim_like\n"
      "[restore]\ndepth = 2\nbase_channels = 8\nn_domains = 2\nlambda1 = 1e-4\nperceptual_layers = 0,1\n"
      "[regressor]\npatch_size = 32\nlr = 0.003\npatch_labels = oracle\n"
      "[ablations]\nadversarial = off\nsemantic_fusion = false\n";
  const ExperimentConfig c = parse_experiment_ini(text);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.repeats, 3);
  EXPECT_EQ(c.dataset.pristine_count, 12);
  ASSERT_EQ(c.dataset.domains.size(), 2u);
  EXPECT_EQ(c.dataset.domains[0].effective_levels(), (std::vector<double>{0.02, 0.05}));
  EXPECT_EQ(c.dataset.domains[1].spec.domain_id, 1);
  EXPECT_EQ(c.restore.depth, 2);
  EXPECT_DOUBLE_EQ(c.restore.lambda1, 1e-4);
  EXPECT_EQ(c.restore.perceptual_layers, (std::vector<int>{0, 1}));
  EXPECT_EQ(c.regressor.patch_size, 32);
  EXPECT_EQ(c.regressor.patch_labels, quality::PatchLabels::kOracle);
  EXPECT_FALSE(c.restore.adversarial);
  EXPECT_TRUE(c.restore.perceptual);
  EXPECT_FALSE(c.regressor.semantic_fusion);

  const ExperimentConfig again = parse_experiment_ini(to_ini(c));
  EXPECT_EQ(to_ini(again), to_ini(c));
  EXPECT_EQ(config_hash(again), config_hash(c));
}

TEST(Config, HashTracksEveryChange) {
  ExperimentConfig a = default_experiment();
  ExperimentConfig b = a;
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b.restore.lambda2 = 99.0;
  EXPECT_NE(config_hash(a), config_hash(b));
  b = a;
  b.seed = 1;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, Fnv1aKnownValues) {
  // Published FNV-1a 64 test vectors.
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Config, RejectsBadInput) {
  const char* bad[] = {
      "[experiment]\nsede = 1\n",                              // typo
      "[nonsense]\nx = 1\n",                                   // unknown section
      "[restore]\ndepht = 3\n",                                // unknown module key
      "[restore]\nperceptual = false\n",                       // switch outside [ablations]
      "[regressor]\nsemantic_fusion = false\n",
      "[experiment]\nrepeats = 0\n",
      "[experiment]\ntrain_fraction = 0.7\n",                  // sums to 1.1
      "[experiment]\nseed = abc\n",
      "[experiment]\ndevice = cuda\n",
      "[restore]\nlambda1 = nan\n",
      "[dataset]\ndomains = white_noise\n",
      "[dataset]\ndomains = sparkle:1\n",
      "[dataset]\noracle = fsim\n",
      "[dataset]\ndomains = white_noise:0.1\n",                // n_domains still 3
      "[regressor]\npatch_size = 36\n",                        // not a multiple of 8
      "[ablations]\nperceptual = maybe\n",
      "[regressor]\npatch_labels = pixels\n",
  };
  for (const char* text : bad) EXPECT_THROW(parse_experiment_ini(text), ConfigError) << text;
}

TEST(Config, FractionToleranceIsTight) {
  ExperimentConfig c = default_experiment();
  c.splits = {0.6, 0.2, 0.2 + 5e-10};
  EXPECT_NO_THROW(c.validate());
  c.splits = {0.6, 0.2, 0.2 + 5e-9};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, AblationsCopyIntoModules) {
  ExperimentConfig c = default_experiment();
  c.ablations.domain_classification = false;
  c.apply_ablations();
  EXPECT_FALSE(c.restore.domain_classification);
  EXPECT_TRUE(c.restore.perceptual);
  EXPECT_TRUE(c.restore.adversarial);
  EXPECT_TRUE(c.regressor.semantic_fusion);
}

TEST(Config, ReadsFromFile) {
  daiqa::testing::TempDir dir;
  std::ofstream(dir / "c.ini") << "[experiment]\nseed = 7\n";
  EXPECT_EQ(read_experiment_config(dir / "c.ini").seed, 7u);
  EXPECT_THROW(read_experiment_config(dir / "missing.ini"), ConfigError);
}

TEST(Config, SettingsResolveFlagThenEnvThenFallback) {
  ::setenv("DAIQA_TEST_SETTING", "from-env", 1);
  EXPECT_EQ(resolve_setting("flag", "DAIQA_TEST_SETTING", "fb"), "flag");
  EXPECT_EQ(resolve_setting("", "DAIQA_TEST_SETTING", "fb"), "from-env");
  ::unsetenv("DAIQA_TEST_SETTING");
  EXPECT_EQ(resolve_setting("", "DAIQA_TEST_SETTING", "fb"), "fb");
  EXPECT_NO_THROW(require_supported_device("cpu"));
  EXPECT_THROW(require_supported_device("gpu"), ConfigError);
}

TEST(Config, DataRootPrefixesRelativePaths) {
  EXPECT_EQ(under_data_root("imgs", "/data"), std::filesystem::path("/data/imgs"));
  EXPECT_EQ(under_data_root("/abs/imgs", "/data"), std::filesystem::path("/abs/imgs"));
  EXPECT_EQ(under_data_root("imgs", ""), std::filesystem::path("imgs"));
}

TEST(Config, DomainsFormatRoundTrip) {
  const auto d = parse_domains("gaussian_blur:0.5|1|2, white_noise:0.1");
  EXPECT_EQ(parse_domains(format_domains(d))[0].effective_levels(), d[0].effective_levels());
  EXPECT_EQ(format_domains(parse_domains(format_domains(d))), format_domains(d));
}
