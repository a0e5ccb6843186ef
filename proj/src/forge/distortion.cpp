#include "daiqa/forge/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace daiqa::forge {

std::string_view to_string(DistortionKind kind) {
  switch (kind) {
    case DistortionKind::kGaussianBlur: return "gaussian_blur";
    case DistortionKind::kWhiteNoise: return "white_noise";
    case DistortionKind::kJpeg: return "jpeg";
    case DistortionKind::kJp2kLike: return "jp2k_like";
    case DistortionKind::kDownsample: return "downsample";
    case DistortionKind::kIdentity: return "identity";
  }
  return "identity";
}

DistortionKind parse_kind(std::string_view name) {
  for (auto k : {DistortionKind::kGaussianBlur, DistortionKind::kWhiteNoise, DistortionKind::kJpeg,
                 DistortionKind::kJp2kLike, DistortionKind::kDownsample, DistortionKind::kIdentity})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown distortion kind '" + std::string(name) + "'");
}

void validate_level(DistortionKind kind, double level) {
  auto fail = [&](const std::string& range) {
    throw std::out_of_range(std::string(to_string(kind)) + " level " + std::to_string(level) + " outside " + range);
  };
  if (!std::isfinite(level)) fail("finite values");
  switch (kind) {
    case DistortionKind::kIdentity:
      if (level != 0.0) fail("{0}");
      break;
    case DistortionKind::kGaussianBlur:
      if (level < 0.0 || level > 20.0) fail("[0,20]");
      break;
    case DistortionKind::kWhiteNoise:
      if (level < 0.0 || level > 1.0) fail("[0,1]");
      break;
    case DistortionKind::kJpeg:
    case DistortionKind::kJp2kLike:
      if (level < 1.0 || level > 100.0) fail("[1,100]");
      break;
    case DistortionKind::kDownsample:
      if (level < 1.0 || level > 16.0 || level != std::floor(level)) fail("integers in [1,16]");
      break;
  }
}

std::vector<double> gaussian_kernel(double sigma) {
  if (sigma <= 0.0) return {1.0};
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

namespace {

// Half-sample symmetric index (edge sample repeated), valid for any offset.
int reflect(int i, int n) {
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

}  // namespace

Image gaussian_blur(const Image& img, double sigma) {
  if (sigma <= 0.0) return img;
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int h = img.height(), w = img.width();
  Image out(h, w);
  std::vector<double> tmp(static_cast<std::size_t>(h) * w);
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0;
        for (int t = -r; t <= r; ++t) s += k[t + r] * img.at(c, y, reflect(x + t, w));
        tmp[static_cast<std::size_t>(y) * w + x] = s;
      }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0;
        for (int t = -r; t <= r; ++t) s += k[t + r] * tmp[static_cast<std::size_t>(reflect(y + t, h)) * w + x];
        out.at(c, y, x) = static_cast<float>(s);
      }
  }
  return out;
}

namespace {

constexpr int kWaveletLevels = 3;

void haar_forward_1d(std::vector<double>& v, int n, std::vector<double>& scratch) {
  const double s = 1.0 / std::sqrt(2.0);
  const int half = n / 2;
  for (int i = 0; i < half; ++i) {
    scratch[i] = (v[2 * i] + v[2 * i + 1]) * s;
    scratch[half + i] = (v[2 * i] - v[2 * i + 1]) * s;
  }
  std::copy(scratch.begin(), scratch.begin() + n, v.begin());
}

void haar_inverse_1d(std::vector<double>& v, int n, std::vector<double>& scratch) {
  const double s = 1.0 / std::sqrt(2.0);
  const int half = n / 2;
  for (int i = 0; i < half; ++i) {
    scratch[2 * i] = (v[i] + v[half + i]) * s;
    scratch[2 * i + 1] = (v[i] - v[half + i]) * s;
  }
  std::copy(scratch.begin(), scratch.begin() + n, v.begin());
}

// In-place 2-D Haar on the top-left (h x w) block of a (stride)-wide grid.
void haar_2d(std::vector<double>& g, int stride, int h, int w, bool inverse) {
  std::vector<double> line(std::max(h, w)), scratch(std::max(h, w));
  auto rows = [&] {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) line[x] = g[static_cast<std::size_t>(y) * stride + x];
      inverse ? haar_inverse_1d(line, w, scratch) : haar_forward_1d(line, w, scratch);
      for (int x = 0; x < w; ++x) g[static_cast<std::size_t>(y) * stride + x] = line[x];
    }
  };
  auto cols = [&] {
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) line[y] = g[static_cast<std::size_t>(y) * stride + x];
      inverse ? haar_inverse_1d(line, h, scratch) : haar_forward_1d(line, h, scratch);
      for (int y = 0; y < h; ++y) g[static_cast<std::size_t>(y) * stride + x] = line[y];
    }
  };
  if (inverse) {
    cols();
    rows();
  } else {
    rows();
    cols();
  }
}

}  // namespace

Image wavelet_quantize(const Image& img, double quality) {
  // Step grows smoothly from 0 (q=100, lossless) to 0.5 (q=1).
  const double step = 0.5 * std::pow((100.0 - quality) / 99.0, 1.5);
  if (step <= 0.0) return img;
  const int block = 1 << kWaveletLevels;
  const int h = img.height(), w = img.width();
  const int ph = (h + block - 1) / block * block, pw = (w + block - 1) / block * block;
  Image out(h, w);
  std::vector<double> g(static_cast<std::size_t>(ph) * pw);
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x) g[static_cast<std::size_t>(y) * pw + x] = img.at(c, std::min(y, h - 1), std::min(x, w - 1));
    for (int l = 0; l < kWaveletLevels; ++l) haar_2d(g, pw, ph >> l, pw >> l, false);
    const int lh = ph >> kWaveletLevels, lw = pw >> kWaveletLevels;
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x) {
        if (y < lh && x < lw) continue;  // approximation band is kept
        double& v = g[static_cast<std::size_t>(y) * pw + x];
        const double q = std::floor(std::abs(v) / step);
        v = q == 0.0 ? 0.0 : std::copysign((q + 0.5) * step, v);
      }
    for (int l = kWaveletLevels - 1; l >= 0; --l) haar_2d(g, pw, ph >> l, pw >> l, true);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(c, y, x) = static_cast<float>(g[static_cast<std::size_t>(y) * pw + x]);
  }
  out.clip();
  return out;
}

Image down_up_sample(const Image& img, int factor) {
  if (factor <= 1) return img;
  const int h = img.height(), w = img.width();
  const int sh = (h + factor - 1) / factor, sw = (w + factor - 1) / factor;
  std::vector<double> small(static_cast<std::size_t>(sh) * sw);
  Image out(h, w);
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int by = 0; by < sh; ++by)
      for (int bx = 0; bx < sw; ++bx) {
        double s = 0;
        int count = 0;
        for (int y = by * factor; y < std::min(h, (by + 1) * factor); ++y)
          for (int x = bx * factor; x < std::min(w, (bx + 1) * factor); ++x, ++count) s += img.at(c, y, x);
        small[static_cast<std::size_t>(by) * sw + bx] = s / count;
      }
    for (int y = 0; y < h; ++y) {
      const double sy = std::clamp((y + 0.5) / factor - 0.5, 0.0, static_cast<double>(sh - 1));
      const int y0 = static_cast<int>(std::floor(sy));
      const int y1 = std::min(y0 + 1, sh - 1);
      const double fy = sy - y0;
      for (int x = 0; x < w; ++x) {
        const double sx = std::clamp((x + 0.5) / factor - 0.5, 0.0, static_cast<double>(sw - 1));
        const int x0 = static_cast<int>(std::floor(sx));
        const int x1 = std::min(x0 + 1, sw - 1);
        const double fx = sx - x0;
        auto s = [&](int yy, int xx) { return small[static_cast<std::size_t>(yy) * sw + xx]; };
        const double v = (1 - fy) * ((1 - fx) * s(y0, x0) + fx * s(y0, x1)) + fy * ((1 - fx) * s(y1, x0) + fx * s(y1, x1));
        out.at(c, y, x) = static_cast<float>(v);
      }
    }
  }
  out.clip();
  return out;
}

Image jpeg_roundtrip(const Image& img, int quality) {
  const auto bytes = encode_jpeg(img, quality);
  return decode_jpeg(bytes);
}

Image apply_distortion(const Image& img, const DistortionSpec& spec, std::uint64_t rng_seed) {
  validate_level(spec.kind, spec.level);
  if (!img.in_unit_range()) throw std::invalid_argument("apply_distortion: input pixels must lie in [0,1]");
  switch (spec.kind) {
    case DistortionKind::kIdentity:
      return img;
    case DistortionKind::kGaussianBlur: {
      Image out = gaussian_blur(img, spec.level);
      out.clip();
      return out;
    }
    case DistortionKind::kWhiteNoise: {
      if (spec.level == 0.0) return img;
      Image out = img;
      std::mt19937_64 rng(rng_seed);
      std::normal_distribution<double> noise(0.0, spec.level);
      for (auto& v : out.pixels()) v = static_cast<float>(v + noise(rng));
      out.clip();
      return out;
    }
    case DistortionKind::kJpeg:
      return jpeg_roundtrip(img, static_cast<int>(std::lround(spec.level)));
    case DistortionKind::kJp2kLike:
      return wavelet_quantize(img, spec.level);
    case DistortionKind::kDownsample:
      return down_up_sample(img, static_cast<int>(spec.level));
  }
  return img;
}

}  // namespace daiqa::forge
