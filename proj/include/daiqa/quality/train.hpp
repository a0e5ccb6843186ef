#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>

#include "daiqa/forge/manifest.hpp"
#include "daiqa/quality/regressor.hpp"

namespace daiqa::quality {

struct RegressorTrainOptions {
  std::filesystem::path out_dir;
  std::function<void(std::int64_t, double)> on_iteration;
  int log_every = 100;
  std::string config_hash;
};

struct RegressorTrainResult {
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  std::int64_t iterations = 0;
  int n_patches = 0;
};

/// Grid patches (stride = test stride) of every labeled train record are run
/// once through the frozen restoration network; the regressor is then fitted
/// with Adam on the mean absolute patch error. Writes out_dir/regressor_log.csv
/// ("iter,L_R"), regressor_iter_<k>.ckpt (including k = 0) and regressor.ckpt.
/// Unlabeled manifests raise DataError, a non-finite loss NumericalError.
RegressorTrainResult train_regressor(const RegressorConfig& cfg, const forge::Manifest& manifest,
                                     restore::RestoreModel& restorer, const RegressorTrainOptions& options);

}  // namespace daiqa::quality
