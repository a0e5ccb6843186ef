#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "daiqa/core/image.hpp"

namespace daiqa::forge {

struct PatchCoord {
  int y = 0;
  int x = 0;
  bool operator==(const PatchCoord&) const = default;
};

struct GridMode {
  int stride = 1;
};

struct RandomMode {
  int count = 1;
  std::uint64_t seed = 0;
  /// Top-left coordinates are multiples of `align` (keeps codec block grids in phase).
  int align = 1;
};

using PatchMode = std::variant<GridMode, RandomMode>;

struct Patch {
  Image pixels;
  PatchCoord coord;
};

/// Start offsets along one axis; the final window is aligned to the far edge
/// when the stride does not tile exactly.
std::vector<int> grid_offsets(int extent, int patch_size, int stride);

/// Throws std::invalid_argument when the patch does not fit the image.
std::vector<PatchCoord> patch_coords(int height, int width, int patch_size, const PatchMode& mode);

std::vector<Patch> sample_patches(const Image& img, int patch_size, const PatchMode& mode);

}  // namespace daiqa::forge
