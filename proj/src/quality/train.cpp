#include "daiqa/quality/train.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "daiqa/core/errors.hpp"
#include "daiqa/forge/dataset.hpp"
#include "daiqa/metrics/pseudo_label.hpp"
#include "daiqa/quality/aggregate.hpp"

namespace daiqa::quality {

namespace {

struct PatchSet {
  RegressionInput input;
  std::vector<double> targets;
};

// Stacks per-chunk tensors along the batch axis with a single allocation.
Tensorf stack(const std::vector<Tensorf>& parts) {
  int n = 0;
  for (const auto& t : parts) n += t.n();
  Tensorf out(n, parts[0].c(), parts[0].h(), parts[0].w());
  auto dst = out.vec().begin();
  for (const auto& t : parts) dst = std::copy(t.vec().begin(), t.vec().end(), dst);
  return out;
}

PatchSet precompute(const RegressorConfig& cfg, const forge::Manifest& manifest, restore::RestoreModel& restorer) {
  std::optional<metrics::Oracle> oracle;
  if (cfg.patch_labels == PatchLabels::kOracle) {
    if (manifest.oracle.empty()) throw ConfigError("oracle patch labels requested but the manifest names no oracle");
    oracle = metrics::parse_oracle(manifest.oracle);
    if (*oracle == metrics::Oracle::kPlugin) throw ConfigError("plugin oracles cannot relabel patches");
  }
  PatchSet set;
  std::vector<Image> pending;
  std::vector<Tensorf> distorted, discrepancy, features;
  auto flush = [&] {
    if (pending.empty()) return;
    RegressionInput in = make_regression_input(pending, restorer);
    distorted.push_back(std::move(in.distorted));
    discrepancy.push_back(std::move(in.discrepancy));
    features.push_back(std::move(in.features));
    pending.clear();
  };
  for (const auto* r : manifest.in_split(forge::Split::kTrain)) {
    const Image img = read_png(manifest.resolve(r->image_path));
    if (img.height() < cfg.patch_size || img.width() < cfg.patch_size)
      throw DataError(r->image_path + " is smaller than the regression patch");
    const auto patches = forge::sample_patches(img, cfg.patch_size, forge::GridMode{cfg.stride()});
    std::vector<forge::Patch> refs;
    if (oracle) refs = forge::sample_patches(read_png(manifest.resolve(r->ref_path)), cfg.patch_size,
                                             forge::GridMode{cfg.stride()});
    for (std::size_t i = 0; i < patches.size(); ++i) {
      set.targets.push_back(oracle ? metrics::pseudo_label(patches[i].pixels, refs.at(i).pixels, *oracle) : *r->score);
      pending.push_back(patches[i].pixels);
      if (pending.size() == 32) flush();
    }
  }
  flush();
  if (set.targets.empty()) throw DataError("manifest has no training records");
  set.input.distorted = stack(distorted);
  set.input.discrepancy = stack(discrepancy);
  set.input.features = stack(features);
  return set;
}

void gather(const Tensorf& src, const std::vector<std::size_t>& rows, Tensorf& dst) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto s = src.sample(static_cast<int>(rows[i]));
    std::copy(s.begin(), s.end(), dst.sample(static_cast<int>(i)).begin());
  }
}

}  // namespace

RegressorTrainResult train_regressor(const RegressorConfig& cfg, const forge::Manifest& manifest,
                                     restore::RestoreModel& restorer, const RegressorTrainOptions& options) {
  cfg.validate();
  if (cfg.patch_size % restorer.config().size_multiple() != 0)
    throw ConfigError("patch_size " + std::to_string(cfg.patch_size) + " is not a multiple of " +
                      std::to_string(restorer.config().size_multiple()));
  if (!manifest.labeled()) throw DataError("regressor training needs a labeled manifest");
  std::filesystem::create_directories(options.out_dir);

  spdlog::info("precomputing restoration outputs for regression patches");
  const PatchSet data = precompute(cfg, manifest, restorer);
  const int total = static_cast<int>(data.targets.size());
  spdlog::info("{} training patches", total);

  QualityRegressor model(cfg, restore_feature_dim(restorer.config()));
  model.config_hash = options.config_hash;
  const auto named = model.params();
  nn::Adam<float> opt(nn::param_ptrs(named), cfg.lr, 0.9, 0.999);
  std::mt19937_64 rng(forge::mix_seed(cfg.seed, 0x72656772));

  RegressorTrainResult result;
  result.n_patches = total;
  result.log = options.out_dir / "regressor_log.csv";
  std::ofstream log(result.log);
  if (!log) throw DataError("cannot write " + result.log.string());
  log << "iter,L_R\n";
  auto checkpoint = [&](std::int64_t it) {
    save_regressor(options.out_dir / ("regressor_iter_" + std::to_string(it) + ".ckpt"), model);
  };
  checkpoint(0);

  const int b = std::min(cfg.batch_size, total);
  const auto& d = data.input;
  RegressionInput batch{Tensorf(b, 3, d.distorted.h(), d.distorted.w()),
                        Tensorf(b, 3, d.distorted.h(), d.distorted.w()), Tensorf(b, d.features.c(), 1, 1), {}};
  std::vector<std::size_t> order(total), rows(b);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  std::vector<double> target(b);

  for (std::int64_t it = 1; it <= cfg.iterations; ++it) {
    for (int i = 0; i < b; ++i) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      rows[i] = order[cursor++];
      target[i] = data.targets[rows[i]];
    }
    gather(d.distorted, rows, batch.distorted);
    gather(d.discrepancy, rows, batch.discrepancy);
    gather(d.features, rows, batch.features);

    opt.zero_grad();
    const RegressorOutput out = model.forward(batch);
    const RegressionLoss loss = loss_regression(out.s, target);
    if (!std::isfinite(loss.value))
      throw NumericalError("non-finite regression loss at iteration " + std::to_string(it));
    model.backward(loss.grad, {});
    opt.step();
    ++model.iteration;

    log << it << ',' << loss.value << '\n';
    if (options.on_iteration) options.on_iteration(it, loss.value);
    if (options.log_every > 0 && it % options.log_every == 0)
      spdlog::info("regressor iter {}/{}: L_R={:.4f}", it, cfg.iterations, loss.value);
    if (it % cfg.checkpoint_every == 0) checkpoint(it);
  }
  log.flush();
  result.checkpoint = options.out_dir / "regressor.ckpt";
  save_regressor(result.checkpoint, model);
  result.iterations = model.iteration;
  return result;
}

}  // namespace daiqa::quality
