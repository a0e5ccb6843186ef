#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "daiqa/forge/distortion.hpp"

namespace daiqa::forge {

enum class Split { kUnassigned, kTrain, kVal, kTest };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

/// One distorted image and its pristine reference. Paths are relative to the
/// manifest root. `score` is the canonical quality in [0,1], higher = better.
struct SampleRecord {
  std::string image_path;
  std::string ref_path;
  int domain_id = 0;
  DistortionKind kind = DistortionKind::kIdentity;
  double level = 0.0;
  std::optional<double> score;
  Split split = Split::kUnassigned;

  bool operator==(const SampleRecord&) const = default;
};

struct Manifest {
  static constexpr int kVersion = 1;

  std::string root;
  std::uint64_t seed = 0;
  std::vector<DistortionSpec> domains;
  std::vector<SampleRecord> records;
  /// Full-reference oracle that produced the scores, empty when unlabeled.
  std::string oracle;
  /// Hash of the configuration that produced this manifest (hex), may be empty.
  std::string config_hash;

  bool operator==(const Manifest&) const = default;

  /// Throws DataError when a record names an unknown domain or domain ids repeat.
  void validate() const;

  std::filesystem::path resolve(const std::string& relative) const { return std::filesystem::path(root) / relative; }

  const DistortionSpec& domain(int domain_id) const;
  int n_domains() const { return static_cast<int>(domains.size()); }
  /// Domain ids are dense in [0, n) when this holds.
  bool dense_domain_ids() const;
  bool labeled() const;

  std::vector<const SampleRecord*> in_split(Split split) const;
};

/// JSON-lines: a header object, then one object per record.
std::string serialize_manifest(const Manifest& m);
Manifest parse_manifest(std::string_view text);

/// A root equal to the manifest's directory is written as "."; on read, relative
/// roots are resolved against the manifest's directory. Datasets can thus be moved.
void write_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& path);

/// Canonical score mappings: MOS on [0,9] (higher better) and DMOS on
/// [0,100] (higher worse) both land in [0,1] with higher = better.
double canonical_from_mos(double mos);
double canonical_from_dmos(double dmos);

}  // namespace daiqa::forge
