#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "daiqa/core/tensor.hpp"

namespace daiqa {

/// RGB image with real-valued pixels, channel-planar (CHW). Pixel values are
/// nominally in [0,1]; quantization to 8 bits happens only at file boundaries.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int height, int width, float fill = 0.0f);

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  float& at(int c, int y, int x) { return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x]; }
  float at(int c, int y, int x) const { return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x]; }

  std::span<float> plane(int c) { return {data_.data() + static_cast<std::size_t>(c) * height_ * width_, plane_size()}; }
  std::span<const float> plane(int c) const {
    return {data_.data() + static_cast<std::size_t>(c) * height_ * width_, plane_size()};
  }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }

  std::vector<float>& pixels() { return data_; }
  const std::vector<float>& pixels() const { return data_; }

  bool same_shape(const Image& o) const { return height_ == o.height_ && width_ == o.width_; }
  bool operator==(const Image& o) const = default;

  /// True when every value lies in [0,1] (and is finite).
  bool in_unit_range() const;

  Image crop(int y, int x, int h, int w) const;

  /// Round to the nearest 8-bit level and back, as a PNG round trip would.
  Image quantized() const;

  /// Clamp every value into [0,1].
  void clip();

  /// 1 x 3 x H x W tensor.
  Tensorf to_tensor() const;
  static Image from_tensor(const Tensorf& t, int sample = 0);

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

/// Single-channel real image (row-major).
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool same_shape(const GrayImage& o) const { return height == o.height && width == o.width; }
};

/// Luma with fixed weights (0.299, 0.587, 0.114).
GrayImage to_gray(const Image& img);

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);
/// Writes a grayscale 8-bit PNG; values are clamped into [0,1] first.
void write_png_gray(const std::filesystem::path& path, const GrayImage& img);

std::vector<std::uint8_t> encode_jpeg(const Image& img, int quality);
Image decode_jpeg(std::span<const std::uint8_t> bytes);

double mse(const Image& a, const Image& b);
/// PSNR in dB for unit peak; +inf for identical images.
double psnr(const Image& a, const Image& b);

}  // namespace daiqa
