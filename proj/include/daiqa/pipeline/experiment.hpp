#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "daiqa/forge/manifest.hpp"
#include "daiqa/metrics/report.hpp"
#include "daiqa/pipeline/config.hpp"
#include "daiqa/quality/regressor.hpp"
#include "daiqa/restore/model.hpp"

namespace daiqa::pipeline {

/// Assigns train/val/test by pristine reference so that no content is shared
/// across splits. Reference groups are shuffled with `seed`; the train and val
/// counts are the rounded fractions of the group count, test takes the rest.
/// Throws DataError for fewer than 3 groups, ConfigError for bad fractions.
forge::Manifest make_splits(const forge::Manifest& manifest, const std::array<double, 3>& fractions,
                            std::uint64_t seed);

/// Writes `count` procedural pristine images when `dataset.pristine_dir` is
/// empty, then renders and labels the schedule. Returns the written manifest
/// (unsplit); out_dir/manifest.jsonl.
forge::Manifest synthesize(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Scores every record of `split`.
std::vector<metrics::PredictionRow> score_manifest(const forge::Manifest& manifest, forge::Split split,
                                                   restore::RestoreModel& restorer,
                                                   quality::QualityRegressor& regressor);

struct StageFailure {
  int repeat = 0;
  std::string stage;
  std::string message;
};

struct ExperimentSummary {
  int repeats_ok = 0;
  double srocc_mean = 0, srocc_std = 0;
  double plcc_mean = 0, plcc_std = 0;
  double accuracy_mean = 0, accuracy_std = 0;
  std::vector<metrics::EvalReport> reports;
  std::vector<StageFailure> failures;
};

/// synth once, then per repeat r (seed + r): split, train-restore,
/// train-regressor, score the test split, evaluate. Each repeat writes to
/// out_dir/repeat_<r>; a failing stage is recorded and later repeats go on.
/// Writes out_dir/config.ini and out_dir/summary.json.
ExperimentSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

std::string summary_to_json(const ExperimentSummary& s, const std::string& config_hash, std::uint64_t seed);

}  // namespace daiqa::pipeline
