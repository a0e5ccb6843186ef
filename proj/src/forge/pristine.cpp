#include "daiqa/forge/pristine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "daiqa/forge/dataset.hpp"

namespace daiqa::forge {
namespace {

using Color = std::array<double, 3>;

double smoothstep(double edge, double x) {
  // 1 inside (x < -edge), 0 outside, linear ramp of width 2*edge.
  return std::clamp(0.5 - x / (2.0 * edge), 0.0, 1.0);
}

}  // namespace

Image generate_pristine(int height, int width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto color = [&] { return Color{0.1 + 0.8 * u(rng), 0.1 + 0.8 * u(rng), 0.1 + 0.8 * u(rng)}; };

  const double scale = std::min(height, width);
  std::vector<Color> px(static_cast<std::size_t>(height) * width);

  // Shaded background.
  const Color c0 = color(), c1 = color();
  const double angle = u(rng) * 2.0 * std::numbers::pi;
  const double dx = std::cos(angle), dy = std::sin(angle);
  const double wave_f = (1.0 + 2.0 * u(rng)) / scale, wave_phase = u(rng) * 6.28;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double t = std::clamp(0.5 + ((x - width / 2.0) * dx + (y - height / 2.0) * dy) / scale, 0.0, 1.0);
      const double wave = 0.05 * std::sin(2.0 * std::numbers::pi * wave_f * (x * dy - y * dx) + wave_phase);
      for (int c = 0; c < 3; ++c) px[static_cast<std::size_t>(y) * width + x][c] = (1 - t) * c0[c] + t * c1[c] + wave;
    }

  // Soft-edged shapes composited back to front.
  const int n_shapes = 5 + static_cast<int>(u(rng) * 8);
  for (int s = 0; s < n_shapes; ++s) {
    const int type = static_cast<int>(u(rng) * 3);
    const double cx = u(rng) * width, cy = u(rng) * height;
    const double rx = scale * (0.08 + 0.3 * u(rng)), ry = scale * (0.08 + 0.3 * u(rng));
    const double rot = u(rng) * std::numbers::pi;
    const double cr = std::cos(rot), sr = std::sin(rot);
    const Color fill = color(), fill2 = color();
    const bool stripes = u(rng) < 0.35;
    const double stripe_f = (0.08 + 0.25 * u(rng));
    const double edge = 0.6 + 0.8 * u(rng);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double lx = (x - cx) * cr + (y - cy) * sr;
        const double ly = -(x - cx) * sr + (y - cy) * cr;
        double dist;  // signed distance-like value in pixels, negative inside
        if (type == 0) {
          dist = (std::sqrt((lx * lx) / (rx * rx) + (ly * ly) / (ry * ry)) - 1.0) * std::min(rx, ry);
        } else if (type == 1) {
          dist = std::max(std::abs(lx) - rx, std::abs(ly) - ry);
        } else {
          // triangle-ish: intersection of three half planes
          const double a = ly - ry * 0.5;
          const double b = -ly * 0.5 + lx * 0.866 - rx * 0.5;
          const double c = -ly * 0.5 - lx * 0.866 - rx * 0.5;
          dist = std::max({a, b, c});
        }
        const double alpha = smoothstep(edge, dist);
        if (alpha <= 0.0) continue;
        double t = std::clamp(0.5 + lx / (2.0 * rx), 0.0, 1.0);
        if (stripes) t = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * stripe_f * ly);
        auto& p = px[static_cast<std::size_t>(y) * width + x];
        for (int c = 0; c < 3; ++c) p[c] = (1 - alpha) * p[c] + alpha * ((1 - t) * fill[c] + t * fill2[c]);
      }
  }

  // Fine texture: a few mid/high-frequency gratings with small amplitude.
  const int n_gratings = 3;
  for (int g = 0; g < n_gratings; ++g) {
    const double f = 0.15 + 0.25 * u(rng);
    const double a = u(rng) * std::numbers::pi;
    const double ph = u(rng) * 6.28;
    const double amp = 0.01 + 0.025 * u(rng);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double v = amp * std::sin(2.0 * std::numbers::pi * f * (x * std::cos(a) + y * std::sin(a)) + ph);
        for (int c = 0; c < 3; ++c) px[static_cast<std::size_t>(y) * width + x][c] += v;
      }
  }

  Image img(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(c, y, x) = static_cast<float>(std::clamp(px[static_cast<std::size_t>(y) * width + x][c], 0.0, 1.0));
  return img.quantized();
}

void write_pristine_set(const std::filesystem::path& dir, int count, int size, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "pristine_%04d.png", i);
    write_png(dir / name, generate_pristine(size, size, mix_seed(seed, static_cast<std::uint64_t>(i))));
  }
}

}  // namespace daiqa::forge
