#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "daiqa/forge/manifest.hpp"

namespace daiqa::forge {

/// One entry of the synthesis schedule: a domain and the levels rendered for
/// it. An empty `levels` list means just `spec.level`.
struct DomainSchedule {
  DistortionSpec spec;
  std::vector<double> levels;

  std::vector<double> effective_levels() const { return levels.empty() ? std::vector<double>{spec.level} : levels; }
};

/// Full-reference scorer: (distorted, reference) -> canonical score in [0,1].
using ScoreOracle = std::function<double(const Image&, const Image&)>;

struct BuildOptions {
  /// Labels every record when set; `oracle_name` is recorded in the manifest.
  ScoreOracle oracle;
  std::string oracle_name;
  std::string config_hash;
};

/// Renders every (pristine, domain, level) combination into out_dir and
/// writes out_dir/manifest.jsonl. Unreadable images are skipped with a
/// warning; an empty or fully unreadable pristine_dir throws DataError.
Manifest build_dataset(const std::filesystem::path& pristine_dir, const std::vector<DomainSchedule>& schedule,
                       const std::filesystem::path& out_dir, std::uint64_t seed, const BuildOptions& options = {});

/// Per-kind levels as in Waterloo-style synthesis. With `domain_per_level`
/// each (kind, level) pair becomes its own domain, otherwise one domain per kind.
std::vector<DomainSchedule> waterloo_schedule(const std::vector<DistortionKind>& kinds,
                                              const std::vector<std::vector<double>>& levels, bool domain_per_level);

/// Reads a schedule file: {"domains":[{"domain_id":0,"kind":"jpeg","level":10,"levels":[...]}]}.
std::vector<DomainSchedule> read_schedule(const std::filesystem::path& path);

/// Stable per-sample seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace daiqa::forge
