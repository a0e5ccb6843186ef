#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "daiqa/core/image.hpp"

namespace daiqa::metrics {

enum class Oracle { kPsnrMapped, kSsimLike, kPlugin };

std::string_view to_string(Oracle oracle);
Oracle parse_oracle(std::string_view name);

using OracleFn = std::function<double(const Image& distorted, const Image& reference)>;

/// PSNR (unit peak) divided by 50 and clamped to [0,1]; identical images give 1.
double psnr_mapped(const Image& distorted, const Image& reference);

/// Mean SSIM over 7x7 windows of the luma channel, clamped to [0,1].
double ssim_like(const Image& distorted, const Image& reference);

/// Deterministic full-reference score in [0,1], higher = better. `plugin` is
/// required for Oracle::kPlugin. Throws std::invalid_argument on shape mismatch.
double pseudo_label(const Image& distorted, const Image& reference, Oracle oracle, const OracleFn& plugin = {});

}  // namespace daiqa::metrics
