#include "daiqa/core/image.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <limits>
#include <stdexcept>
#include <string>

#include "daiqa/core/errors.hpp"

namespace daiqa {

Image::Image(int height, int width, float fill) : height_(height), width_(width) {
  if (height < 0 || width < 0) throw std::invalid_argument("Image: negative size");
  data_.assign(static_cast<std::size_t>(kChannels) * height * width, fill);
}

bool Image::in_unit_range() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return v >= 0.0f && v <= 1.0f; });
}

Image Image::crop(int y, int x, int h, int w) const {
  if (y < 0 || x < 0 || h <= 0 || w <= 0 || y + h > height_ || x + w > width_)
    throw std::out_of_range("Image::crop: window outside image");
  Image out(h, w);
  for (int c = 0; c < kChannels; ++c)
    for (int r = 0; r < h; ++r)
      for (int q = 0; q < w; ++q) out.at(c, r, q) = at(c, y + r, x + q);
  return out;
}

Image Image::quantized() const {
  Image out = *this;
  for (auto& v : out.data_) v = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f;
  return out;
}

void Image::clip() {
  for (auto& v : data_) v = std::clamp(v, 0.0f, 1.0f);
}

Tensorf Image::to_tensor() const {
  Tensorf t(1, kChannels, height_, width_);
  std::copy(data_.begin(), data_.end(), t.vec().begin());
  return t;
}

Image Image::from_tensor(const Tensorf& t, int sample) {
  if (t.c() != kChannels) throw std::invalid_argument("Image::from_tensor: expected 3 channels, got " + t.shape_string());
  Image out(t.h(), t.w());
  auto s = t.sample(sample);
  std::copy(s.begin(), s.end(), out.data_.begin());
  return out;
}

GrayImage to_gray(const Image& img) {
  GrayImage g{img.height(), img.width(), std::vector<double>(img.plane_size())};
  auto r = img.plane(0), gr = img.plane(1), b = img.plane(2);
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = 0.299 * r[i] + 0.587 * gr[i] + 0.114 * b[i];
  return g;
}

Image read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    throw DataError("cannot read PNG " + path.string() + ": " + png.message);
  png.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&png);
    throw DataError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  const int h = static_cast<int>(png.height), w = static_cast<int>(png.width);
  Image img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = buf[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0f;
  return img;
}

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

void write_png_raw(const std::filesystem::path& path, int h, int w, png_uint_32 format, const std::vector<png_byte>& buf) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(w);
  png.height = static_cast<png_uint_32>(h);
  png.format = format;
  if (!png_image_write_to_file(&png, path.c_str(), 0, buf.data(), 0, nullptr))
    throw DataError("cannot write PNG " + path.string() + ": " + png.message);
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& img) {
  const int h = img.height(), w = img.width();
  std::vector<png_byte> buf(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) buf[(static_cast<std::size_t>(y) * w + x) * 3 + c] = to_byte(img.at(c, y, x));
  write_png_raw(path, h, w, PNG_FORMAT_RGB, buf);
}

void write_png_gray(const std::filesystem::path& path, const GrayImage& img) {
  std::vector<png_byte> buf(img.data.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = to_byte(img.data[i]);
  write_png_raw(path, img.height, img.width, PNG_FORMAT_GRAY, buf);
}

namespace {

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

}  // namespace

std::vector<std::uint8_t> encode_jpeg(const Image& img, int quality) {
  if (quality < 1 || quality > 100) throw std::out_of_range("encode_jpeg: quality must be in [1,100]");
  const int h = img.height(), w = img.width();
  std::vector<JSAMPLE> rgb(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) rgb[(static_cast<std::size_t>(y) * w + x) * 3 + c] = to_byte(img.at(c, y, x));

  jpeg_compress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  unsigned char* out = nullptr;
  unsigned long out_size = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(out);
    throw DataError(std::string("JPEG encode failed: ") + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &out, &out_size);
  cinfo.image_width = static_cast<JDIMENSION>(w);
  cinfo.image_height = static_cast<JDIMENSION>(h);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = rgb.data() + static_cast<std::size_t>(cinfo.next_scanline) * w * 3;
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::vector<std::uint8_t> bytes(out, out + out_size);
  jpeg_destroy_compress(&cinfo);
  std::free(out);
  return bytes;
}

Image decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw DataError(std::string("JPEG decode failed: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const int h = static_cast<int>(cinfo.output_height), w = static_cast<int>(cinfo.output_width);
  std::vector<JSAMPLE> row(static_cast<std::size_t>(w) * 3);
  Image img(h, w);
  while (cinfo.output_scanline < cinfo.output_height) {
    const int y = static_cast<int>(cinfo.output_scanline);
    JSAMPROW ptr = row.data();
    jpeg_read_scanlines(&cinfo, &ptr, 1);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = row[static_cast<std::size_t>(x) * 3 + c] / 255.0f;
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

double mse(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("mse: shape mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.pixels()[i]) - b.pixels()[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

double psnr(const Image& a, const Image& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

}  // namespace daiqa
