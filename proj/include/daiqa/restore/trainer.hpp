#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>

#include "daiqa/forge/manifest.hpp"
#include "daiqa/restore/model.hpp"

namespace daiqa::restore {

/// One optimization step per call: image discriminator, then domain
/// discriminator, then encoder and decoder.
class RestoreTrainer {
 public:
  RestoreTrainer(RestoreModel& model, std::uint64_t seed);

  /// x: distorted batch, gt: pristine batch, labels: domain ids.
  /// Throws NumericalError on any non-finite loss.
  TotalLosses step(const Tensorf& x, const Tensorf& gt, std::span<const int> labels);

 private:
  RestoreModel& model_;
  nn::NamedParams<float> enc_params_, dec_params_, disc_params_, dom_params_;
  nn::Adam<float> opt_enc_, opt_dec_, opt_disc_, opt_dom_;
  std::mt19937_64 noise_rng_;
};

struct TrainOptions {
  std::filesystem::path out_dir;
  /// Called after every iteration with the 1-based iteration count.
  std::function<void(std::int64_t, const TotalLosses&)> on_iteration;
  int log_every = 100;
  /// Stored in every checkpoint written.
  std::string config_hash;
};

struct TrainResult {
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  std::int64_t iterations = 0;
};

/// Trains on the manifest's train split with random aligned crops. Writes
/// out_dir/train_log.csv, periodic checkpoints restore_iter_<k>.ckpt (including
/// k = 0) and the final out_dir/restore.ckpt.
TrainResult train_restore(const RestoreConfig& cfg, const forge::Manifest& manifest, const TrainOptions& options);

inline constexpr const char* kTrainLogHeader = "iter,L_E,L_G,L_D,L_Dc,L_kl,L_P,L_adv,L_cls";

}  // namespace daiqa::restore
