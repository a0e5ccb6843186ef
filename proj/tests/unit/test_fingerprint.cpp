#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "daiqa/core/errors.hpp"
#include "daiqa/fingerprint/fingerprint.hpp"
#include "daiqa/forge/distortion.hpp"
#include "daiqa/forge/pristine.hpp"
#include "fixtures.hpp"

using namespace daiqa;
using namespace daiqa::fingerprint;

namespace {

GrayImage random_gray(int h, int w, std::uint64_t seed, double offset = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 2.0);
  GrayImage g{h, w, std::vector<double>(static_cast<std::size_t>(h) * w)};
  for (double& v : g.data) v = nd(rng) + offset;
  return g;
}

double mean_of(const GrayImage& g) { return std::accumulate(g.data.begin(), g.data.end(), 0.0) / g.data.size(); }

double var_of(const GrayImage& g) {
  const double m = mean_of(g);
  double s = 0;
  for (double v : g.data) s += (v - m) * (v - m);
  return s / g.data.size();
}

restore::RestoreConfig small_restore() {
  restore::RestoreConfig c;
  c.depth = 2;
  c.base_channels = 4;
  c.degradation_dim = 3;
  c.n_domains = 2;
  c.crop_size = 16;
  c.seed = 5;
  return c;
}

void make_perfect(restore::RestoreModel& m) {
  for (const auto& [name, p] : m.decoder_params())
    if (name == "decoder.refine.2.weight" || name == "decoder.refine.2.bias") p->value.fill(0.0f);
}

double mean_abs_laplacian(const GrayImage& g) {
  double s = 0;
  int n = 0;
  for (int y = 1; y + 1 < g.height; ++y)
    for (int x = 1; x + 1 < g.width; ++x, ++n)
      s += std::abs(4 * g.at(y, x) - g.at(y - 1, x) - g.at(y + 1, x) - g.at(y, x - 1) - g.at(y, x + 1));
  return s / n;
}

}  // namespace

TEST(Normalize, ZeroMeanUnitVarianceAndIdempotent) {
  const auto fp = normalize(random_gray(20, 30, 1, 5.0));
  EXPECT_FALSE(fp.degenerate);
  EXPECT_NEAR(mean_of(fp.pixels), 0.0, 1e-6);
  EXPECT_NEAR(var_of(fp.pixels), 1.0, 1e-6);
  const auto again = normalize(fp.pixels);
  for (std::size_t i = 0; i < fp.pixels.data.size(); ++i) EXPECT_NEAR(again.pixels.data[i], fp.pixels.data[i], 1e-9);
}

TEST(Normalize, ConstantInputIsFlaggedNotNaN) {
  const GrayImage flat{4, 4, std::vector<double>(16, 0.3)};
  const auto fp = normalize(flat);
  EXPECT_TRUE(fp.degenerate);
  for (double v : fp.pixels.data) EXPECT_EQ(v, 0.0);
}

TEST(Response, SelfCorrelationSignAndSymmetry) {
  const auto a = normalize(random_gray(16, 16, 2)), b = normalize(random_gray(16, 16, 3));
  EXPECT_NEAR(response(a, a).scalar, 1.0, 1e-12);
  Fingerprint neg = b;
  for (double& v : neg.pixels.data) v = -v;
  EXPECT_NEAR(response(a, neg).scalar, -response(a, b).scalar, 1e-12);
  EXPECT_DOUBLE_EQ(response(a, b).scalar, response(b, a).scalar);
  const auto img = response(a, b).image;
  EXPECT_DOUBLE_EQ(img.data[5], a.pixels.data[5] * b.pixels.data[5]);
}

TEST(Response, IndependentNoiseIsNearZero) {
  const int h = 64, w = 64;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const double r = response(normalize(random_gray(h, w, 100 + s)), normalize(random_gray(h, w, 200 + s))).scalar;
    EXPECT_LT(std::abs(r), 3.0 / std::sqrt(h * w));
  }
}

TEST(Response, InvariantToConstantOffsets) {
  const auto raw = random_gray(12, 12, 4);
  GrayImage shifted = raw;
  for (double& v : shifted.data) v += 17.0;
  const auto other = normalize(random_gray(12, 12, 5));
  EXPECT_NEAR(response(normalize(raw), other).scalar, response(normalize(shifted), other).scalar, 1e-12);
}

TEST(Response, ShapeMismatchThrows) {
  EXPECT_THROW(response(normalize(random_gray(4, 4, 1)), normalize(random_gray(4, 5, 1))), std::invalid_argument);
}

TEST(ImageFingerprint, PerfectRestorationIsDegenerate) {
  restore::RestoreModel m(small_restore());
  make_perfect(m);
  const auto fp = image_fingerprint(forge::generate_pristine(16, 16, 2), m);
  EXPECT_TRUE(fp.degenerate);
  for (double v : fp.pixels.data) EXPECT_FALSE(std::isnan(v));
}

TEST(ImageFingerprint, NoiseResidualsAreRougherThanBlurResiduals) {
  // Ideal restorer (the pristine image itself): the residual is the distortion.
  double noise = 0, blur = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Image ref = forge::generate_pristine(48, 48, 300 + s);
    const Image n = forge::apply_distortion(ref, {0, forge::DistortionKind::kWhiteNoise, 25.0 / 255}, s);
    const Image b = forge::apply_distortion(ref, {1, forge::DistortionKind::kGaussianBlur, 2.0}, s);
    noise += mean_abs_laplacian(normalize(residual_gray(n, ref)).pixels);
    blur += mean_abs_laplacian(normalize(residual_gray(b, ref)).pixels);
  }
  EXPECT_GT(noise, blur);
}

TEST(ModelFingerprint, SingleSampleEqualsItsImageFingerprint) {
  daiqa::testing::TempDir dir;
  const auto m = daiqa::testing::tiny_dataset(dir.path(), 5, 16);
  restore::RestoreModel model(small_restore());
  const auto fp = model_fingerprint(0, m, model, 1, 7);
  bool matched = false;
  for (const auto* r : m.in_split(forge::Split::kTrain)) {
    if (r->domain_id != 0) continue;
    const auto single = image_fingerprint(read_png(m.resolve(r->image_path)), model);
    double diff = 0;
    for (std::size_t i = 0; i < fp.pixels.data.size(); ++i) diff = std::max(diff, std::abs(fp.pixels.data[i] - single.pixels.data[i]));
    matched |= diff < 1e-9;
  }
  EXPECT_TRUE(matched);
  const auto again = model_fingerprint(0, m, model, 1, 7);
  EXPECT_EQ(again.pixels.data, fp.pixels.data);
}

TEST(ModelFingerprint, ShortfallIsNamed) {
  daiqa::testing::TempDir dir;
  const auto m = daiqa::testing::tiny_dataset(dir.path(), 5, 16);
  restore::RestoreModel model(small_restore());
  try {
    model_fingerprint(1, m, model, 5, 0);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("short by 2"), std::string::npos) << e.what();
  }
}

TEST(ModelFingerprint, AveragingReducesContentLeakage) {
  // Each image fingerprint = shared degradation signature + its own content.
  const GrayImage signature = random_gray(32, 32, 900);
  std::vector<GrayImage> contents;
  std::vector<Fingerprint> fps;
  for (std::uint64_t s = 0; s < 50; ++s) {
    contents.push_back(to_gray(forge::generate_pristine(32, 32, 500 + s)));
    const Fingerprint c = normalize(contents.back());
    GrayImage mix = normalize(signature).pixels;
    for (std::size_t i = 0; i < mix.data.size(); ++i) mix.data[i] += c.pixels.data[i];
    fps.push_back(normalize(mix));
  }
  const Fingerprint one = average({fps[0]});
  const Fingerprint many = average(fps);
  const double leak_one = std::abs(response(one, normalize(contents[0])).scalar);
  double leak_many = 0;
  for (const auto& c : contents) leak_many = std::max(leak_many, std::abs(response(many, normalize(c)).scalar));
  EXPECT_LT(leak_many, leak_one);
  EXPECT_GT(response(many, normalize(signature)).scalar, response(one, normalize(signature)).scalar);
}

TEST(ResponseMatrix, StructureAndBounds) {
  daiqa::testing::TempDir dir;
  const auto m = daiqa::testing::tiny_dataset(dir.path(), 10, 16);
  restore::RestoreModel model(small_restore());
  FingerprintSet set = build_fingerprint_set(m, model, 3, 1);
  ASSERT_EQ(set.model_fps.size(), 2u);

  // Self-response dominance among the model fingerprints (Cauchy-Schwarz).
  for (const auto& [r, fr] : set.model_fps)
    for (const auto& [c, fc] : set.model_fps) EXPECT_LE(response(fr, fc).scalar, response(fr, fr).scalar + 1e-12);

  set.model_fps.emplace(2, set.model_fps.at(0));  // a domain with no evaluation images
  const auto rm = response_matrix(m, set, model);
  EXPECT_EQ(rm.domain_ids, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(rm.empty_rows, std::vector<int>{2});
  EXPECT_EQ(rm.assignments.size(), m.in_split(forge::Split::kTest).size());
  for (const auto& row : rm.matrix)
    for (double v : row) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_LE(std::abs(v), 1.0 + 1e-12);
    }
  EXPECT_GE(rm.own_domain_rate, 0.0);
  EXPECT_LE(rm.own_domain_rate, 1.0);
  EXPECT_NE(response_matrix_csv(rm).find("domain,fp_0,fp_1,fp_2"), std::string::npos);
}

TEST(ResponseMatrix, PerfectRestorerIsFlaggedDegenerate) {
  daiqa::testing::TempDir dir;
  const auto m = daiqa::testing::tiny_dataset(dir.path(), 5, 16);
  restore::RestoreModel model(small_restore());
  make_perfect(model);
  const auto set = build_fingerprint_set(m, model, 1, 1);
  const auto rm = response_matrix(m, set, model);
  EXPECT_EQ(rm.degenerate_rows, (std::vector<int>{0, 1}));
  for (const auto& row : rm.matrix)
    for (double v : row) EXPECT_FALSE(std::isnan(v));
}

TEST(FingerprintExport, GridRoundTripAndPng) {
  daiqa::testing::TempDir dir;
  const auto g = random_gray(7, 9, 8);
  write_fingerprint_grid(dir / "f.grid", g);
  const auto back = read_fingerprint_grid(dir / "f.grid");
  EXPECT_EQ(back.height, 7);
  EXPECT_EQ(back.width, 9);
  EXPECT_EQ(back.data, g.data);
  write_fingerprint_png(dir / "f.png", normalize(g));
  const Image png = read_png(dir / "f.png");
  EXPECT_EQ(png.height(), 7);
  {
    std::ofstream bad(dir / "bad.grid", std::ios::binary);
    bad << "NOTAGRID........................";
  }
  EXPECT_THROW(read_fingerprint_grid(dir / "bad.grid"), DataError);
  std::filesystem::resize_file(dir / "f.grid", 40);
  EXPECT_THROW(read_fingerprint_grid(dir / "f.grid"), DataError);
}
