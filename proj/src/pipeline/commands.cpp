#include "daiqa/pipeline/commands.hpp"

#include <algorithm>
#include <fstream>
#include <optional>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "daiqa/core/errors.hpp"
#include "daiqa/fingerprint/embedding.hpp"
#include "daiqa/fingerprint/fingerprint.hpp"
#include "daiqa/forge/dataset.hpp"
#include "daiqa/forge/pristine.hpp"
#include "daiqa/metrics/pseudo_label.hpp"
#include "daiqa/metrics/report.hpp"
#include "daiqa/pipeline/experiment.hpp"
#include "daiqa/quality/predict.hpp"
#include "daiqa/quality/train.hpp"
#include "daiqa/restore/trainer.hpp"
#include "json.hpp"

namespace daiqa::pipeline {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const DataError*>(&e)) return kExitData;
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  return kExitFailure;
}

namespace {

struct Globals {
  std::string device;
  std::string data_root;
  std::string log_level = "info";
};

fs::path rooted(const Globals& g, const std::string& p) { return under_data_root(p, g.data_root); }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

forge::Split parse_split_or_throw(const std::string& name) {
  try {
    return forge::parse_split(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

// Records of `split`, or all of them for "all".
forge::Manifest restrict_to(const forge::Manifest& m, const std::string& split) {
  if (split == "all") {
    forge::Manifest copy = m;
    for (auto& r : copy.records) r.split = forge::Split::kTest;
    return copy;
  }
  forge::Manifest copy = m;
  const forge::Split want = parse_split_or_throw(split);
  copy.records.clear();
  for (const auto& r : m.records)
    if (r.split == want) copy.records.push_back(r);
  for (auto& r : copy.records) r.split = forge::Split::kTest;
  return copy;
}

// Module sections of an experiment INI, with the manifest deciding the domain count.
ExperimentConfig module_config(const Globals& g, const std::string& path, int n_domains) {
  ExperimentConfig cfg = path.empty() ? default_experiment() : read_experiment_config(rooted(g, path));
  if (cfg.restore.n_domains != n_domains)
    throw ConfigError("config has n_domains = " + std::to_string(cfg.restore.n_domains) + " but the manifest has " +
                      std::to_string(n_domains) + " domains");
  return cfg;
}

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> f;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      f.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad split fraction '" + item + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (f.size() != 3) throw ConfigError("--splits needs three comma-separated fractions");
  return f;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Domain-aware no-reference image quality assessment"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--device", g.device, "compute device (env DAIQA_DEVICE, default cpu)");
  app.add_option("--data-root", g.data_root, "prefix for relative input paths (env DAIQA_DATA_ROOT)");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error, off");

  std::function<void()> action;

  // make-pristine
  auto* mp = app.add_subcommand("make-pristine", "write procedural pristine images");
  std::string mp_out;
  int mp_count = 60, mp_size = 96;
  std::uint64_t mp_seed = 0;
  mp->add_option("--out", mp_out)->required();
  mp->add_option("--count", mp_count);
  mp->add_option("--size", mp_size);
  mp->add_option("--seed", mp_seed);
  mp->callback([&] {
    action = [&] {
      if (mp_count < 1 || mp_size < 8) throw ConfigError("--count must be >= 1 and --size >= 8");
      forge::write_pristine_set(mp_out, mp_count, mp_size, mp_seed);
      out << "wrote " << mp_count << " images to " << mp_out << '\n';
    };
  });

  // synth
  auto* sy = app.add_subcommand("synth", "render and label a multi-domain dataset");
  std::string sy_pristine, sy_spec, sy_out, sy_oracle = "psnr_mapped", sy_splits = "0.6,0.2,0.2";
  std::uint64_t sy_seed = 0;
  bool sy_no_split = false;
  sy->add_option("--pristine", sy_pristine)->required();
  sy->add_option("--spec", sy_spec, "domain schedule (JSON)")->required();
  sy->add_option("--out", sy_out)->required();
  sy->add_option("--seed", sy_seed);
  sy->add_option("--oracle", sy_oracle, "psnr_mapped, ssim_like or none");
  sy->add_option("--splits", sy_splits, "train,val,test fractions, grouped by reference");
  sy->add_flag("--no-split", sy_no_split);
  sy->callback([&] {
    action = [&] {
      forge::BuildOptions options;
      if (sy_oracle != "none") {
        metrics::Oracle oracle;
        try {
          oracle = metrics::parse_oracle(sy_oracle);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
        if (oracle == metrics::Oracle::kPlugin) throw ConfigError("the plugin oracle is only available from code");
        options.oracle = [oracle](const Image& d, const Image& r) { return metrics::pseudo_label(d, r, oracle); };
        options.oracle_name = sy_oracle;
      }
      const auto fractions = parse_fractions(sy_splits);
      forge::Manifest m =
          forge::build_dataset(rooted(g, sy_pristine), forge::read_schedule(rooted(g, sy_spec)), sy_out, sy_seed, options);
      if (!sy_no_split) {
        m = make_splits(m, {fractions[0], fractions[1], fractions[2]}, sy_seed);
        forge::write_manifest(fs::path(sy_out) / "manifest.jsonl", m);
      }
      out << m.records.size() << " records in " << (fs::path(sy_out) / "manifest.jsonl").string() << '\n';
    };
  });

  // train-restore
  auto* tr = app.add_subcommand("train-restore", "train the restoration network");
  std::string tr_manifest, tr_config, tr_out;
  std::optional<std::uint64_t> tr_seed;
  tr->add_option("--manifest", tr_manifest)->required();
  tr->add_option("--config", tr_config, "experiment INI; its [restore] and [ablations] sections are used");
  tr->add_option("--out", tr_out)->required();
  tr->add_option("--seed", tr_seed);
  tr->callback([&] {
    action = [&] {
      const auto m = forge::read_manifest(rooted(g, tr_manifest));
      ExperimentConfig cfg = module_config(g, tr_config, m.n_domains());
      if (tr_seed) cfg.restore.seed = *tr_seed;
      restore::TrainOptions o;
      o.out_dir = tr_out;
      o.config_hash = config_hash(cfg);
      const auto result = restore::train_restore(cfg.restore, m, o);
      out << "checkpoint " << result.checkpoint.string() << '\n';
    };
  });

  // train-regressor
  auto* tq = app.add_subcommand("train-regressor", "train the quality regressor on a frozen restorer");
  std::string tq_manifest, tq_config, tq_out, tq_restore;
  std::optional<std::uint64_t> tq_seed;
  tq->add_option("--manifest", tq_manifest)->required();
  tq->add_option("--restore-ckpt", tq_restore)->required();
  tq->add_option("--config", tq_config, "experiment INI; its [regressor] and [ablations] sections are used");
  tq->add_option("--out", tq_out)->required();
  tq->add_option("--seed", tq_seed);
  tq->callback([&] {
    action = [&] {
      const auto m = forge::read_manifest(rooted(g, tq_manifest));
      ExperimentConfig cfg = module_config(g, tq_config, m.n_domains());
      auto restorer = restore::load_checkpoint(rooted(g, tq_restore));
      if (tq_seed) cfg.regressor.seed = *tq_seed;
      cfg.regressor.restore_checkpoint = rooted(g, tq_restore).string();
      quality::RegressorTrainOptions o;
      o.out_dir = tq_out;
      o.config_hash = config_hash(cfg);
      const auto result = quality::train_regressor(cfg.regressor, m, *restorer, o);
      out << "checkpoint " << result.checkpoint.string() << '\n';
    };
  });

  // score
  auto* sc = app.add_subcommand("score", "predict the quality of one image");
  std::string sc_image, sc_restore, sc_regressor;
  bool sc_json = false;
  sc->add_option("--image", sc_image)->required();
  sc->add_option("--restore-ckpt", sc_restore)->required();
  sc->add_option("--regressor-ckpt", sc_regressor)->required();
  sc->add_flag("--json", sc_json);
  sc->callback([&] {
    action = [&] {
      auto restorer = restore::load_checkpoint(rooted(g, sc_restore));
      auto regressor = quality::load_regressor(rooted(g, sc_regressor));
      const auto report = quality::predict_image(read_png(rooted(g, sc_image)), *restorer, *regressor);
      if (sc_json)
        out << quality::report_to_json(report) << '\n';
      else
        out << metrics::format_number(report.score) << " domain " << report.predicted_domain << '\n';
    };
  });

  // score-batch
  auto* sb = app.add_subcommand("score-batch", "predict every image of a manifest split");
  std::string sb_manifest, sb_restore, sb_regressor, sb_out, sb_split = "test";
  sb->add_option("--manifest", sb_manifest)->required();
  sb->add_option("--restore-ckpt", sb_restore)->required();
  sb->add_option("--regressor-ckpt", sb_regressor)->required();
  sb->add_option("--split", sb_split, "train, val, test, unassigned or all");
  sb->add_option("--out", sb_out, "CSV path (default: standard output)");
  sb->callback([&] {
    action = [&] {
      const auto m = restrict_to(forge::read_manifest(rooted(g, sb_manifest)), sb_split);
      auto restorer = restore::load_checkpoint(rooted(g, sb_restore));
      auto regressor = quality::load_regressor(rooted(g, sb_regressor));
      const auto rows = score_manifest(m, forge::Split::kTest, *restorer, *regressor);
      if (sb_out.empty())
        metrics::write_prediction_csv(out, rows);
      else
        metrics::write_prediction_csv(sb_out, rows);
    };
  });

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "correlations, logistic fit and confusion of a prediction CSV");
  std::string ev_pred, ev_out, ev_scatter;
  int ev_domains = 0;
  ev->add_option("--pred", ev_pred)->required();
  ev->add_option("--out", ev_out)->required();
  ev->add_option("--scatter", ev_scatter, "scatter CSV (default: <out>.scatter.csv)");
  ev->add_option("--n-domains", ev_domains, "default: inferred from the largest domain id");
  ev->callback([&] {
    action = [&] {
      const auto rows = metrics::read_prediction_csv(rooted(g, ev_pred));
      int n = ev_domains;
      if (n <= 0)
        for (const auto& r : rows) n = std::max({n, r.domain_gt + 1, r.domain_pred + 1});
      const auto report = metrics::evaluate_predictions(rows, n);
      write_text(ev_out, metrics::report_to_json(report) + "\n");
      metrics::write_scatter_csv(ev_scatter.empty() ? fs::path(ev_out + ".scatter.csv") : fs::path(ev_scatter), report);
      out << "srocc " << metrics::format_number(report.srocc) << " plcc " << metrics::format_number(report.plcc)
          << " accuracy " << metrics::format_number(report.accuracy) << '\n';
    };
  });

  // fingerprint
  auto* fp = app.add_subcommand("fingerprint", "model fingerprints and the response matrix");
  std::string fp_manifest, fp_ckpt, fp_out;
  int fp_k = 8;
  std::uint64_t fp_seed = 0;
  fp->add_option("--manifest", fp_manifest)->required();
  fp->add_option("--ckpt", fp_ckpt)->required();
  fp->add_option("--out", fp_out)->required();
  fp->add_option("--k", fp_k, "images averaged per domain fingerprint");
  fp->add_option("--seed", fp_seed);
  fp->callback([&] {
    action = [&] {
      if (fp_k < 1) throw ConfigError("--k must be positive");
      const auto m = forge::read_manifest(rooted(g, fp_manifest));
      auto model = restore::load_checkpoint(rooted(g, fp_ckpt));
      const auto set = fingerprint::build_fingerprint_set(m, *model, fp_k, fp_seed);
      fs::create_directories(fp_out);
      for (const auto& [id, f] : set.model_fps) {
        const std::string stem = "domain_" + std::to_string(id);
        fingerprint::write_fingerprint_png(fs::path(fp_out) / (stem + ".png"), f);
        fingerprint::write_fingerprint_grid(fs::path(fp_out) / (stem + ".grid"), f.pixels);
      }
      const auto rm = fingerprint::response_matrix(m, set, *model);
      write_text(fs::path(fp_out) / "response_matrix.csv", fingerprint::response_matrix_csv(rm));
      out << "own-domain rate " << metrics::format_number(rm.own_domain_rate) << '\n';
    };
  });

  // embed
  auto* em = app.add_subcommand("embed", "2-D embedding of degradation latents");
  std::string em_manifest, em_ckpt, em_out, em_method = "tsne", em_split = "test";
  std::uint64_t em_seed = 0;
  em->add_option("--manifest", em_manifest)->required();
  em->add_option("--ckpt", em_ckpt)->required();
  em->add_option("--out", em_out)->required();
  em->add_option("--method", em_method, "tsne or pca");
  em->add_option("--split", em_split, "train, val, test, unassigned or all");
  em->add_option("--seed", em_seed);
  em->callback([&] {
    action = [&] {
      fingerprint::EmbedOptions options;
      try {
        options.method = fingerprint::parse_embed_method(em_method);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      options.seed = em_seed;
      const auto m = restrict_to(forge::read_manifest(rooted(g, em_manifest)), em_split);
      auto model = restore::load_checkpoint(rooted(g, em_ckpt));
      std::vector<std::vector<double>> latents;
      std::vector<int> labels;
      for (const auto& r : m.records) {
        const auto result = restore::restore(read_png(m.resolve(r.image_path)), *model);
        latents.emplace_back(result.deg_mu.begin(), result.deg_mu.end());
        labels.push_back(r.domain_id);
      }
      if (latents.size() < 2) throw DataError("need at least two images to embed");
      const auto points = fingerprint::embed_2d(latents, labels, options);
      fingerprint::write_embedding_csv(em_out, points);
      out << "silhouette " << metrics::format_number(fingerprint::silhouette(points)) << '\n';
    };
  });

  // experiment
  auto* ex = app.add_subcommand("experiment", "synthesize, then train and evaluate each repeat");
  std::string ex_config, ex_out;
  ex->add_option("--config", ex_config)->required();
  ex->add_option("--out", ex_out)->required();
  ex->callback([&] {
    action = [&] {
      ExperimentConfig cfg = read_experiment_config(rooted(g, ex_config));
      if (!g.data_root.empty()) cfg.data_root = g.data_root;
      const auto s = run_experiment(cfg, ex_out);
      out << "repeats ok " << s.repeats_ok << "/" << cfg.repeats << ", srocc " << metrics::format_number(s.srocc_mean)
          << " +- " << metrics::format_number(s.srocc_std) << '\n';
      if (s.repeats_ok == 0) throw std::runtime_error("every repeat failed; see summary.json");
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const auto level = spdlog::level::from_str(g.log_level);
    if (level == spdlog::level::off && g.log_level != "off") throw ConfigError("unknown log level " + g.log_level);
    spdlog::set_level(level);
    g.device = resolve_setting(g.device, kDeviceEnv, "cpu");
    g.data_root = resolve_setting(g.data_root, kDataRootEnv, "");
    require_supported_device(g.device);
    action();
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace daiqa::pipeline
