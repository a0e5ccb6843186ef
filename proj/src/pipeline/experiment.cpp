#include "daiqa/pipeline/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include <spdlog/spdlog.h>

#include "daiqa/core/errors.hpp"
#include "daiqa/forge/dataset.hpp"
#include "daiqa/forge/pristine.hpp"
#include "daiqa/metrics/pseudo_label.hpp"
#include "daiqa/quality/predict.hpp"
#include "daiqa/quality/train.hpp"
#include "daiqa/restore/trainer.hpp"
#include "json.hpp"

namespace daiqa::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

forge::Manifest make_splits(const forge::Manifest& manifest, const std::array<double, 3>& fractions,
                            std::uint64_t seed) {
  for (double f : fractions)
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("split fractions must lie in [0,1]");
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
    throw ConfigError("split fractions must sum to 1");

  std::vector<std::string> refs;
  for (const auto& r : manifest.records) refs.push_back(r.ref_path);
  std::sort(refs.begin(), refs.end());
  refs.erase(std::unique(refs.begin(), refs.end()), refs.end());
  if (refs.size() < 3)
    throw DataError("need at least 3 reference images to split, have " + std::to_string(refs.size()));

  std::mt19937_64 rng(forge::mix_seed(seed, 0x73706c74));
  // Fisher-Yates with our own index draw: std::shuffle's output is library-specific.
  for (std::size_t i = refs.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(refs[i], refs[j]);
  }

  const auto g = static_cast<double>(refs.size());
  const auto n_train = static_cast<std::size_t>(std::llround(fractions[0] * g));
  const auto n_val = std::min(refs.size() - n_train, static_cast<std::size_t>(std::llround(fractions[1] * g)));
  std::map<std::string, forge::Split> assign;
  for (std::size_t i = 0; i < refs.size(); ++i)
    assign[refs[i]] = i < n_train ? forge::Split::kTrain : i < n_train + n_val ? forge::Split::kVal : forge::Split::kTest;

  forge::Manifest out = manifest;
  for (auto& r : out.records) r.split = assign.at(r.ref_path);
  return out;
}

forge::Manifest synthesize(const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  fs::path pristine = under_data_root(cfg.dataset.pristine_dir, cfg.data_root);
  if (cfg.dataset.pristine_dir.empty()) {
    pristine = out_dir / "pristine";
    forge::write_pristine_set(pristine, cfg.dataset.pristine_count, cfg.dataset.pristine_size,
                              forge::mix_seed(cfg.seed, 0x70726973));
  }
  forge::BuildOptions options;
  options.config_hash = config_hash(cfg);
  if (cfg.dataset.oracle != "none") {
    const metrics::Oracle oracle = metrics::parse_oracle(cfg.dataset.oracle);
    options.oracle = [oracle](const Image& d, const Image& r) { return metrics::pseudo_label(d, r, oracle); };
    options.oracle_name = cfg.dataset.oracle;
  }
  return forge::build_dataset(pristine, cfg.dataset.domains, out_dir / "data", cfg.seed, options);
}

std::vector<metrics::PredictionRow> score_manifest(const forge::Manifest& manifest, forge::Split split,
                                                   restore::RestoreModel& restorer,
                                                   quality::QualityRegressor& regressor) {
  std::vector<metrics::PredictionRow> rows;
  for (const auto* r : manifest.in_split(split)) {
    const auto report = quality::predict_image(read_png(manifest.resolve(r->image_path)), restorer, regressor);
    rows.push_back({r->image_path, report.score, r->score.value_or(0.0), report.predicted_domain, r->domain_id});
  }
  return rows;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

// The split manifest lives in the repeat directory but points at the shared data.
void write_split_manifest(const fs::path& repeat_dir, forge::Manifest m) {
  m.root = fs::relative(fs::absolute(m.root), fs::absolute(repeat_dir)).generic_string();
  forge::write_manifest(repeat_dir / "manifest.jsonl", m);
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& input, const fs::path& out_dir) {
  ExperimentConfig cfg = input;
  cfg.apply_ablations();
  cfg.validate();
  const std::string hash = config_hash(cfg);
  fs::create_directories(out_dir);
  write_text(out_dir / "config.ini", to_ini(cfg));

  const forge::Manifest data = synthesize(cfg, out_dir);
  if (!data.labeled()) throw ConfigError("experiments need a labeling oracle ([dataset] oracle)");

  ExperimentSummary summary;
  for (int r = 0; r < cfg.repeats; ++r) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(r);
    const fs::path dir = out_dir / ("repeat_" + std::to_string(r));
    std::string stage = "split";
    try {
      fs::create_directories(dir);
      const forge::Manifest split = make_splits(data, cfg.splits, seed);
      write_split_manifest(dir, split);

      stage = "train-restore";
      restore::RestoreConfig rc = cfg.restore;
      rc.seed = seed;
      restore::TrainOptions ro;
      ro.out_dir = dir / "restore";
      ro.config_hash = hash;
      const auto restored = restore::train_restore(rc, split, ro);
      auto restorer = restore::load_checkpoint(restored.checkpoint);

      stage = "train-regressor";
      quality::RegressorConfig qc = cfg.regressor;
      qc.seed = seed;
      qc.restore_checkpoint = restored.checkpoint.string();
      quality::RegressorTrainOptions qo;
      qo.out_dir = dir / "regressor";
      qo.config_hash = hash;
      const auto trained = quality::train_regressor(qc, split, *restorer, qo);
      auto regressor = quality::load_regressor(trained.checkpoint);

      stage = "evaluate";
      const auto rows = score_manifest(split, forge::Split::kTest, *restorer, *regressor);
      metrics::write_prediction_csv(dir / "predictions.csv", rows);
      auto report = metrics::evaluate_predictions(rows, split.n_domains());
      metrics::write_scatter_csv(dir / "scatter.csv", report);
      write_text(dir / "report.json", metrics::report_to_json(report, hash, static_cast<long long>(seed)));
      summary.reports.push_back(std::move(report));
      ++summary.repeats_ok;
    } catch (const std::exception& e) {
      spdlog::error("repeat {} failed in {}: {}", r, stage, e.what());
      summary.failures.push_back({r, stage, e.what()});
    }
  }

  std::vector<double> s, p, a;
  for (const auto& rep : summary.reports) {
    s.push_back(rep.srocc);
    p.push_back(rep.plcc);
    a.push_back(rep.accuracy);
  }
  std::tie(summary.srocc_mean, summary.srocc_std) = mean_std(s);
  std::tie(summary.plcc_mean, summary.plcc_std) = mean_std(p);
  std::tie(summary.accuracy_mean, summary.accuracy_std) = mean_std(a);
  write_text(out_dir / "summary.json", summary_to_json(summary, hash, cfg.seed));
  return summary;
}

std::string summary_to_json(const ExperimentSummary& s, const std::string& config_hash, std::uint64_t seed) {
  json failures = json::array();
  for (const auto& f : s.failures) failures.push_back({{"repeat", f.repeat}, {"stage", f.stage}, {"message", f.message}});
  json j{{"config_hash", config_hash},
         {"seed", seed},
         {"repeats_ok", s.repeats_ok},
         {"srocc", {{"mean", s.srocc_mean}, {"std", s.srocc_std}}},
         {"plcc", {{"mean", s.plcc_mean}, {"std", s.plcc_std}}},
         {"accuracy", {{"mean", s.accuracy_mean}, {"std", s.accuracy_std}}},
         {"failures", failures}};
  return j.dump(2) + "\n";
}

}  // namespace daiqa::pipeline
