#include "daiqa/forge/patches.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace daiqa::forge {

std::vector<int> grid_offsets(int extent, int patch_size, int stride) {
  if (stride <= 0) throw std::invalid_argument("grid stride must be positive");
  std::vector<int> out;
  int pos = 0;
  for (; pos + patch_size <= extent; pos += stride) out.push_back(pos);
  if (out.back() + patch_size < extent) out.push_back(extent - patch_size);
  return out;
}

std::vector<PatchCoord> patch_coords(int height, int width, int patch_size, const PatchMode& mode) {
  if (patch_size <= 0 || patch_size > height || patch_size > width)
    throw std::invalid_argument("patch size " + std::to_string(patch_size) + " does not fit a " + std::to_string(height) +
                                "x" + std::to_string(width) + " image");
  std::vector<PatchCoord> coords;
  if (const auto* grid = std::get_if<GridMode>(&mode)) {
    const auto ys = grid_offsets(height, patch_size, grid->stride);
    const auto xs = grid_offsets(width, patch_size, grid->stride);
    for (int y : ys)
      for (int x : xs) coords.push_back({y, x});
    return coords;
  }
  const auto& rnd = std::get<RandomMode>(mode);
  if (rnd.align <= 0) throw std::invalid_argument("patch alignment must be positive");
  std::mt19937_64 rng(rnd.seed);
  std::uniform_int_distribution<int> ry(0, (height - patch_size) / rnd.align);
  std::uniform_int_distribution<int> rx(0, (width - patch_size) / rnd.align);
  for (int i = 0; i < rnd.count; ++i) {
    const int y = ry(rng) * rnd.align;
    const int x = rx(rng) * rnd.align;
    coords.push_back({y, x});
  }
  return coords;
}

std::vector<Patch> sample_patches(const Image& img, int patch_size, const PatchMode& mode) {
  std::vector<Patch> out;
  for (const auto& c : patch_coords(img.height(), img.width(), patch_size, mode))
    out.push_back({img.crop(c.y, c.x, patch_size, patch_size), c});
  return out;
}

}  // namespace daiqa::forge
