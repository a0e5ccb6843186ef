#pragma once

#include <cstdint>
#include <filesystem>

#include "daiqa/core/image.hpp"

namespace daiqa::forge {

/// Procedural stand-in for natural photographs: shaded background, soft-edged
/// shapes with gradients and stripes, and fine texture. Deterministic in seed.
Image generate_pristine(int height, int width, std::uint64_t seed);

/// Writes `count` images named pristine_NNNN.png into dir.
void write_pristine_set(const std::filesystem::path& dir, int count, int size, std::uint64_t seed);

}  // namespace daiqa::forge
