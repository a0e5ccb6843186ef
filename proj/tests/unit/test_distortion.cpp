#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "daiqa/forge/distortion.hpp"
#include "daiqa/forge/pristine.hpp"

using namespace daiqa;
using namespace daiqa::forge;

namespace {

double mean_of(const Image& img) {
  return std::accumulate(img.pixels().begin(), img.pixels().end(), 0.0) / static_cast<double>(img.size());
}

// Pristine image squeezed into [lo, hi] so additive noise never clips.
Image squeezed(int size, std::uint64_t seed, float lo, float hi) {
  Image img = generate_pristine(size, size, seed);
  for (auto& v : img.pixels()) v = lo + (hi - lo) * v;
  return img;
}

}  // namespace

TEST(ApplyDistortion, IdentityIsBitExact) {
  const Image img = generate_pristine(40, 30, 1);
  EXPECT_EQ(apply_distortion(img, {0, DistortionKind::kIdentity, 0.0}, 99), img);
}

TEST(ApplyDistortion, ZeroNoiseLeavesImageUnchanged) {
  const Image gray(16, 16, 0.5f);
  EXPECT_EQ(apply_distortion(gray, {0, DistortionKind::kWhiteNoise, 0.0}, 7), gray);
}

TEST(ApplyDistortion, BlurOfConstantIsConstant) {
  const Image gray(20, 24, 0.5f);
  const Image out = apply_distortion(gray, {0, DistortionKind::kGaussianBlur, 2.0}, 0);
  for (float v : out.pixels()) EXPECT_NEAR(v, 0.5f, 1e-6);
}

TEST(ApplyDistortion, NoiseStdMatchesLevel) {
  const double sigma = 25.0 / 255.0;
  const Image img = squeezed(256, 4, 0.35f, 0.65f);
  const Image out = apply_distortion(img, {0, DistortionKind::kWhiteNoise, sigma}, 1);
  double s = 0, s2 = 0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double d = out.pixels()[i] - img.pixels()[i];
    s += d;
    s2 += d * d;
  }
  const double n = static_cast<double>(img.size());
  const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
  EXPECT_NEAR(sd, sigma, 0.05 * sigma);
  EXPECT_NEAR(s / n, 0.0, 4 * sigma / std::sqrt(n));
}

TEST(ApplyDistortion, DeterministicInSeed) {
  const Image img = generate_pristine(32, 32, 2);
  for (auto kind : {DistortionKind::kWhiteNoise, DistortionKind::kGaussianBlur, DistortionKind::kJpeg,
                    DistortionKind::kJp2kLike, DistortionKind::kDownsample}) {
    const double level = kind == DistortionKind::kWhiteNoise     ? 0.1
                         : kind == DistortionKind::kGaussianBlur ? 1.5
                         : kind == DistortionKind::kDownsample   ? 2
                                                                  : 30;
    const DistortionSpec spec{0, kind, level};
    EXPECT_EQ(apply_distortion(img, spec, 5), apply_distortion(img, spec, 5)) << to_string(kind);
    EXPECT_TRUE(apply_distortion(img, spec, 5).in_unit_range()) << to_string(kind);
  }
  const DistortionSpec noise{0, DistortionKind::kWhiteNoise, 0.1};
  EXPECT_NE(apply_distortion(img, noise, 5), apply_distortion(img, noise, 6));
}

TEST(ApplyDistortion, OutputClippedToUnitRange) {
  const Image img = generate_pristine(32, 32, 3);
  EXPECT_TRUE(apply_distortion(img, {0, DistortionKind::kWhiteNoise, 0.8}, 3).in_unit_range());
}

TEST(ApplyDistortion, RejectsOutOfRangeLevelsAndInputs) {
  const Image img(8, 8, 0.5f);
  EXPECT_THROW(apply_distortion(img, {0, DistortionKind::kJpeg, 0}, 0), std::out_of_range);
  EXPECT_THROW(apply_distortion(img, {0, DistortionKind::kJpeg, 101}, 0), std::out_of_range);
  EXPECT_THROW(apply_distortion(img, {0, DistortionKind::kWhiteNoise, -0.1}, 0), std::out_of_range);
  EXPECT_THROW(apply_distortion(img, {0, DistortionKind::kDownsample, 2.5}, 0), std::out_of_range);
  EXPECT_THROW(apply_distortion(img, {0, DistortionKind::kIdentity, 1}, 0), std::out_of_range);
  Image bad = img;
  bad.at(1, 2, 3) = -0.01f;
  EXPECT_THROW(apply_distortion(bad, {0, DistortionKind::kIdentity, 0}, 0), std::invalid_argument);
}

TEST(GaussianKernel, NormalizedAndSymmetric) {
  for (double sigma : {0.3, 1.0, 2.0, 5.5}) {
    const auto k = gaussian_kernel(sigma);
    EXPECT_EQ(k.size() % 2, 1u);
    EXPECT_NEAR(std::accumulate(k.begin(), k.end(), 0.0), 1.0, 1e-12);
    for (std::size_t i = 0; i < k.size() / 2; ++i) EXPECT_DOUBLE_EQ(k[i], k[k.size() - 1 - i]);
  }
}

TEST(GaussianBlur, PreservesMeanWithoutClipping) {
  const Image img = squeezed(48, 5, 0.2f, 0.8f);
  for (double sigma : {0.7, 2.0, 4.0}) EXPECT_NEAR(mean_of(gaussian_blur(img, sigma)), mean_of(img), 1e-6);
}

TEST(Downsample, FactorOneIsIdentityAndShapeIsKept) {
  const Image img = generate_pristine(30, 20, 6);
  const Image same = down_up_sample(img, 1);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(same.pixels()[i], img.pixels()[i], 1e-6);
  const Image out = down_up_sample(img, 4);
  EXPECT_TRUE(out.same_shape(img));
}

TEST(Distortions, StrongerLevelsDegradeMore) {
  const Image img = generate_pristine(64, 64, 7);
  EXPECT_GT(psnr(jpeg_roundtrip(img, 80), img), psnr(jpeg_roundtrip(img, 10), img));
  EXPECT_GT(psnr(wavelet_quantize(img, 80), img), psnr(wavelet_quantize(img, 10), img));
  EXPECT_GT(psnr(gaussian_blur(img, 0.8), img), psnr(gaussian_blur(img, 3.0), img));
  EXPECT_GT(psnr(down_up_sample(img, 2), img), psnr(down_up_sample(img, 6), img));
}

TEST(DistortionKindNames, RoundTrip) {
  for (auto kind : {DistortionKind::kGaussianBlur, DistortionKind::kWhiteNoise, DistortionKind::kJpeg,
                    DistortionKind::kJp2kLike, DistortionKind::kDownsample, DistortionKind::kIdentity})
    EXPECT_EQ(parse_kind(to_string(kind)), kind);
  EXPECT_THROW(parse_kind("gaussian"), std::invalid_argument);
}
