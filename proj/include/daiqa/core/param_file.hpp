#pragma once

// Binary parameter files: 8-byte magic, u32 version, u64 header length, a JSON
// header (kind, caller metadata, tensor names and shapes), then the float32
// tensor data in header order. Little-endian hosts only.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "daiqa/core/nn.hpp"
#include "json.hpp"

namespace daiqa {

struct ParamFile {
  std::string kind;
  nlohmann::json meta;
  std::vector<std::pair<std::string, Tensorf>> tensors;
};

void write_param_file(const std::filesystem::path& path, const std::string& kind, const nlohmann::json& meta,
                      const nn::NamedParams<float>& params);

/// Throws DataError for unreadable or truncated files and ConfigError when the
/// kind differs from `expected_kind`.
ParamFile read_param_file(const std::filesystem::path& path, const std::string& expected_kind);

/// Copies tensors into `params`. Names and shapes must match one-to-one,
/// otherwise ConfigError.
void assign_params(const ParamFile& file, const nn::NamedParams<float>& params);

}  // namespace daiqa
