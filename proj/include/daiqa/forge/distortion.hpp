#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "daiqa/core/image.hpp"

namespace daiqa::forge {

enum class DistortionKind { kGaussianBlur, kWhiteNoise, kJpeg, kJp2kLike, kDownsample, kIdentity };

std::string_view to_string(DistortionKind kind);
/// Throws std::invalid_argument for unknown names.
DistortionKind parse_kind(std::string_view name);

/// One degradation domain.
///
/// `level` units depend on the kind: noise std in pixel-intensity units
/// [0,1], blur sigma in pixels [0,20], quality factor [1,100] for jpeg and
/// jp2k_like, integer factor [1,16] for downsample, exactly 0 for identity.
struct DistortionSpec {
  int domain_id = 0;
  DistortionKind kind = DistortionKind::kIdentity;
  double level = 0.0;

  bool operator==(const DistortionSpec&) const = default;
};

/// Throws std::out_of_range when `level` is outside the kind's range.
void validate_level(DistortionKind kind, double level);

/// Applies one degradation. Deterministic in (img, kind, level, seed); the
/// domain id does not influence pixels. Output is clipped to [0,1].
Image apply_distortion(const Image& img, const DistortionSpec& spec, std::uint64_t rng_seed);

/// Normalized 1-D Gaussian taps, radius ceil(3 sigma) (at least 1).
std::vector<double> gaussian_kernel(double sigma);

/// Separable blur with half-sample symmetric borders. The symmetric
/// extension makes the blur matrix doubly stochastic, so the image mean is
/// preserved exactly (up to rounding).
Image gaussian_blur(const Image& img, double sigma);

/// Orthonormal Haar transform, uniform dead-zone quantization of detail
/// coefficients, inverse transform.
Image wavelet_quantize(const Image& img, double quality);

/// Box-average by `factor`, bilinear upsample back to the input size.
Image down_up_sample(const Image& img, int factor);

/// JPEG round trip through libjpeg at the given quality factor.
Image jpeg_roundtrip(const Image& img, int quality);

}  // namespace daiqa::forge
