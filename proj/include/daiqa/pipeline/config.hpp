#pragma once

// Experiment configuration: an INI file with one section per module. Every key
// is validated; unknown sections or keys raise ConfigError.
//
//   [experiment]  seed, repeats, train_fraction, val_fraction, test_fraction,
//                 device, data_root
//   [dataset]     pristine_dir, pristine_count, pristine_size, domains, oracle
//   [restore]     restoration network / training keys
//   [regressor]   regressor keys
//   [ablations]   perceptual, adversarial, semantic_fusion, domain_classification
//
// `domains` lists one domain per comma-separated entry, `kind:level` or
// `kind:level1|level2|...` for several levels grouped into one domain.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "daiqa/forge/dataset.hpp"
#include "daiqa/quality/regressor.hpp"
#include "daiqa/restore/networks.hpp"

namespace daiqa::pipeline {

struct Ablations {
  bool perceptual = true;
  bool adversarial = true;
  bool semantic_fusion = true;
  bool domain_classification = true;
};

struct DatasetConfig {
  /// Directory of pristine PNGs. Empty: generate `pristine_count` procedural images.
  std::string pristine_dir;
  int pristine_count = 60;
  int pristine_size = 96;
  std::vector<forge::DomainSchedule> domains;
  /// psnr_mapped, ssim_like or none.
  std::string oracle = "psnr_mapped";
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  int repeats = 10;
  std::array<double, 3> splits{0.6, 0.2, 0.2};
  std::string device = "cpu";
  std::string data_root;
  DatasetConfig dataset;
  restore::RestoreConfig restore;
  quality::RegressorConfig regressor;
  Ablations ablations;

  /// Copies the ablation switches into the module configs.
  void apply_ablations();
  /// Throws ConfigError.
  void validate() const;
};

ExperimentConfig default_experiment();

ExperimentConfig parse_experiment_ini(std::string_view text);
ExperimentConfig read_experiment_config(const std::filesystem::path& path);
/// Canonical INI rendering; parse_experiment_ini(to_ini(c)) reproduces c.
std::string to_ini(const ExperimentConfig& cfg);

/// FNV-1a 64 of the canonical rendering, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);
std::uint64_t fnv1a64(std::string_view bytes);

std::vector<forge::DomainSchedule> parse_domains(std::string_view spec);
std::string format_domains(const std::vector<forge::DomainSchedule>& domains);

/// Environment overrides, applied only when the value was not given on the
/// command line: DAIQA_DEVICE and DAIQA_DATA_ROOT.
inline constexpr const char* kDeviceEnv = "DAIQA_DEVICE";
inline constexpr const char* kDataRootEnv = "DAIQA_DATA_ROOT";

/// Flag value, else the environment variable, else `fallback`.
std::string resolve_setting(const std::string& flag_value, const char* env_name, const std::string& fallback);
/// Only the CPU backend exists; anything else is a ConfigError.
void require_supported_device(const std::string& device);
/// Relative paths are taken under data_root when one is set.
std::filesystem::path under_data_root(const std::filesystem::path& p, const std::string& data_root);

}  // namespace daiqa::pipeline
