#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "daiqa/core/errors.hpp"
#include "daiqa/pipeline/commands.hpp"
#include "daiqa/pipeline/experiment.hpp"
#include "fixtures.hpp"
#include "json.hpp"

using namespace daiqa;
using namespace daiqa::pipeline;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_experiment() {
  return parse_experiment_ini(
      "[experiment]\nseed = 5\nrepeats = 2\n"
      "[dataset]\npristine_count = 6\npristine_size = 32\ndomains = white_noise:0.1, gaussian_blur:1.5\n"
      "[restore]\ndepth = 2\nbase_channels = 4\ndegradation_dim = 3\nn_domains = 2\ncrop_size = 16\n"
      "batch_size = 2\niterations = 3\ncheckpoint_every = 100\nextractor_channels = 4,4\nperceptual_layers = 0,1\n"
      "[regressor]\npatch_size = 16\ntrunk_channels = 4,8\nfusion_dim = 6\nhidden = 12\nbranch_dim = 5\n"
      "batch_size = 8\niterations = 5\ncheckpoint_every = 100\n");
}

forge::Manifest manifest_with_refs(int n_refs) {
  forge::Manifest m;
  m.root = "/x";
  m.domains = {{0, forge::DistortionKind::kWhiteNoise, 0.1}, {1, forge::DistortionKind::kGaussianBlur, 1.0}};
  for (int i = 0; i < n_refs; ++i)
    for (int d = 0; d < 2; ++d) {
      forge::SampleRecord r;
      r.ref_path = "reference/r" + std::to_string(i) + ".png";
      r.image_path = "distorted/r" + std::to_string(i) + "_" + std::to_string(d) + ".png";
      r.domain_id = d;
      r.kind = m.domains[d].kind;
      r.level = m.domains[d].level;
      m.records.push_back(r);
    }
  return m;
}

}  // namespace

TEST(Splits, TenReferencesGiveSixTwoTwo) {
  const auto m = make_splits(manifest_with_refs(10), {0.6, 0.2, 0.2}, 1);
  std::map<forge::Split, std::set<std::string>> groups;
  for (const auto& r : m.records) groups[r.split].insert(r.ref_path);
  EXPECT_EQ(groups[forge::Split::kTrain].size(), 6u);
  EXPECT_EQ(groups[forge::Split::kVal].size(), 2u);
  EXPECT_EQ(groups[forge::Split::kTest].size(), 2u);
  EXPECT_EQ(groups.count(forge::Split::kUnassigned), 0u);
}

TEST(Splits, NoReferenceCrossesSplits) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = make_splits(manifest_with_refs(13), {0.5, 0.25, 0.25}, seed);
    std::map<std::string, forge::Split> seen;
    for (const auto& r : m.records) {
      const auto [it, fresh] = seen.emplace(r.ref_path, r.split);
      if (!fresh) {
        EXPECT_EQ(it->second, r.split) << r.ref_path;
      }
    }
  }
}

TEST(Splits, SeedDeterminesAssignment) {
  const auto base = manifest_with_refs(12);
  EXPECT_EQ(make_splits(base, {0.6, 0.2, 0.2}, 4), make_splits(base, {0.6, 0.2, 0.2}, 4));
  bool differs = false;
  for (std::uint64_t s = 5; s < 10 && !differs; ++s)
    differs = !(make_splits(base, {0.6, 0.2, 0.2}, 4) == make_splits(base, {0.6, 0.2, 0.2}, s));
  EXPECT_TRUE(differs);
}

TEST(Splits, RejectsTooFewGroupsAndBadFractions) {
  EXPECT_THROW(make_splits(manifest_with_refs(2), {0.6, 0.2, 0.2}, 0), DataError);
  EXPECT_NO_THROW(make_splits(manifest_with_refs(3), {0.6, 0.2, 0.2}, 0));
  EXPECT_THROW(make_splits(manifest_with_refs(5), {0.6, 0.3, 0.2}, 0), ConfigError);
  EXPECT_THROW(make_splits(manifest_with_refs(5), {1.2, -0.1, -0.1}, 0), ConfigError);
}

TEST(Synthesize, ByteIdenticalAcrossOutputDirectories) {
  daiqa::testing::TempDir dir;
  const auto cfg = tiny_experiment();
  const auto a = synthesize(cfg, dir / "a");
  synthesize(cfg, dir / "b");
  EXPECT_EQ(slurp(dir / "a/data/manifest.jsonl"), slurp(dir / "b/data/manifest.jsonl"));
  EXPECT_EQ(a.records.size(), 12u);
  EXPECT_TRUE(a.labeled());
  EXPECT_EQ(a.oracle, "psnr_mapped");
  EXPECT_EQ(a.config_hash, config_hash(cfg));
  EXPECT_EQ(a.seed, 5u);
}

TEST(Synthesize, UsesGivenPristineDirUnderDataRoot) {
  daiqa::testing::TempDir dir;
  forge::write_pristine_set(dir / "imgs", 3, 32, 1);
  auto cfg = tiny_experiment();
  cfg.data_root = dir.path().string();
  cfg.dataset.pristine_dir = "imgs";
  cfg.dataset.oracle = "none";
  const auto m = synthesize(cfg, dir / "out");
  EXPECT_EQ(m.records.size(), 6u);
  EXPECT_FALSE(m.labeled());
  EXPECT_FALSE(std::filesystem::exists(dir / "out/pristine"));
}

TEST(Experiment, RunsRepeatsAndSummarizes) {
  daiqa::testing::TempDir dir;
  const auto cfg = tiny_experiment();
  const auto s = run_experiment(cfg, dir.path());
  ASSERT_TRUE(s.failures.empty()) << s.failures.front().stage << ": " << s.failures.front().message;
  EXPECT_EQ(s.repeats_ok, 2);
  ASSERT_EQ(s.reports.size(), 2u);
  for (int r = 0; r < 2; ++r) {
    const auto rd = dir / ("repeat_" + std::to_string(r));
    for (const char* f : {"manifest.jsonl", "restore/restore.ckpt", "restore/train_log.csv",
                          "regressor/regressor.ckpt", "regressor/regressor_log.csv", "predictions.csv",
                          "scatter.csv", "report.json"})
      EXPECT_TRUE(std::filesystem::exists(rd / f)) << rd / f;
    const auto m = forge::read_manifest(rd / "manifest.jsonl");
    EXPECT_TRUE(std::filesystem::exists(m.resolve(m.records.front().image_path)));
    const auto report = nlohmann::json::parse(slurp(rd / "report.json"));
    EXPECT_EQ(report.at("seed").get<long long>(), 5 + r);
    EXPECT_EQ(report.at("config_hash").get<std::string>(), config_hash(cfg));
  }
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary.at("repeats_ok").get<int>(), 2);
  EXPECT_NEAR(summary.at("srocc").at("mean").get<double>(), (s.reports[0].srocc + s.reports[1].srocc) / 2, 1e-12);
  EXPECT_EQ(parse_experiment_ini(slurp(dir / "config.ini")).seed, 5u);
}

TEST(Experiment, SingleRepeatSummaryEqualsItsReport) {
  daiqa::testing::TempDir dir;
  auto cfg = tiny_experiment();
  cfg.repeats = 1;
  const auto s = run_experiment(cfg, dir.path());
  ASSERT_EQ(s.reports.size(), 1u);
  EXPECT_EQ(s.srocc_mean, s.reports[0].srocc);
  EXPECT_EQ(s.plcc_mean, s.reports[0].plcc);
  EXPECT_EQ(s.accuracy_mean, s.reports[0].accuracy);
  EXPECT_EQ(s.srocc_std, 0.0);
}

TEST(Experiment, DomainClassificationAblationZeroesItsColumn) {
  daiqa::testing::TempDir dir;
  auto cfg = tiny_experiment();
  cfg.repeats = 1;
  cfg.ablations.domain_classification = false;
  run_experiment(cfg, dir.path());
  std::istringstream log(slurp(dir / "repeat_0/restore/train_log.csv"));
  std::string line;
  std::getline(log, line);
  EXPECT_EQ(line.substr(line.rfind(',') + 1), "L_cls");
  int rows = 0;
  while (std::getline(log, line)) {
    ++rows;
    EXPECT_EQ(std::stod(line.substr(line.rfind(',') + 1)), 0.0) << line;
  }
  EXPECT_GT(rows, 0);
}

TEST(Experiment, StageFailuresAreRecordedAndLaterRepeatsRun) {
  daiqa::testing::TempDir dir;
  auto cfg = tiny_experiment();
  cfg.regressor.lr = 1e30;
  const auto s = run_experiment(cfg, dir.path());
  EXPECT_EQ(s.repeats_ok, 0);
  ASSERT_EQ(s.failures.size(), 2u);
  for (int r = 0; r < 2; ++r) {
    EXPECT_EQ(s.failures[r].repeat, r);
    EXPECT_EQ(s.failures[r].stage, "train-regressor");
  }
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary.at("failures").size(), 2u);
}

// ------------------------------------------------------------------ CLI

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

const char* kTinyIni =
    "[experiment]\nseed = 5\nrepeats = 1\n"
    "[dataset]\ndomains = white_noise:0.1, gaussian_blur:1.5\n"
    "[restore]\ndepth = 2\nbase_channels = 4\ndegradation_dim = 3\nn_domains = 2\ncrop_size = 16\n"
    "batch_size = 2\niterations = 3\ncheckpoint_every = 100\nextractor_channels = 4,4\nperceptual_layers = 0,1\n"
    "[regressor]\npatch_size = 16\ntrunk_channels = 4,8\nfusion_dim = 6\nhidden = 12\nbranch_dim = 5\n"
    "batch_size = 8\niterations = 5\ncheckpoint_every = 100\n";

const char* kTinySchedule = R"({"domains": [
  {"domain_id": 0, "kind": "white_noise", "level": 0.1},
  {"domain_id": 1, "kind": "gaussian_blur", "level": 1.5}]})";

}  // namespace

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
  EXPECT_EQ(cli({}).code, kExitConfig);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitConfig);
  EXPECT_EQ(cli({"evaluate", "--pred", "x.csv"}).code, kExitConfig);  // --out missing
  EXPECT_EQ(cli({"--device", "cuda", "evaluate", "--pred", "x.csv", "--out", "r.json"}).code, kExitConfig);
  const auto missing = cli({"evaluate", "--pred", "/nonexistent/pred.csv", "--out", "/tmp/r.json"});
  EXPECT_EQ(missing.code, kExitData);
  EXPECT_NE(missing.err.find("error:"), std::string::npos);
  EXPECT_EQ(exit_code_for(NumericalError("x")), kExitNumerical);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), kExitFailure);
}

TEST(Cli, DeviceFromEnvironment) {
  ::setenv(kDeviceEnv, "tpu", 1);
  EXPECT_EQ(cli({"evaluate", "--pred", "x.csv", "--out", "r.json"}).code, kExitConfig);
  // The flag wins over the environment.
  EXPECT_EQ(cli({"--device", "cpu", "evaluate", "--pred", "/nonexistent.csv", "--out", "r.json"}).code, kExitData);
  ::unsetenv(kDeviceEnv);
}

TEST(Cli, EndToEnd) {
  daiqa::testing::TempDir dir;
  std::ofstream(dir / "tiny.ini") << kTinyIni;
  std::ofstream(dir / "schedule.json") << kTinySchedule;
  ASSERT_EQ(cli({"make-pristine", "--out", (dir / "p").string(), "--count", "6", "--size", "32"}).code, kExitOk);

  // Relative paths resolve under the data root given in the environment.
  ::setenv(kDataRootEnv, dir.path().c_str(), 1);
  const auto synth = cli({"synth", "--pristine", "p", "--spec", "schedule.json", "--out", (dir / "ds").string(),
                          "--seed", "2"});
  ::unsetenv(kDataRootEnv);
  ASSERT_EQ(synth.code, kExitOk) << synth.err;
  const auto m = forge::read_manifest(dir / "ds/manifest.jsonl");
  EXPECT_EQ(m.records.size(), 12u);
  EXPECT_TRUE(m.labeled());
  EXPECT_FALSE(m.in_split(forge::Split::kTest).empty());
  EXPECT_TRUE(m.in_split(forge::Split::kUnassigned).empty());

  const std::string ini = (dir / "tiny.ini").string(), manifest = (dir / "ds/manifest.jsonl").string();
  ASSERT_EQ(cli({"train-restore", "--manifest", manifest, "--config", ini, "--out", (dir / "r").string()}).code,
            kExitOk);
  const std::string rckpt = (dir / "r/restore.ckpt").string();
  ASSERT_EQ(cli({"train-regressor", "--manifest", manifest, "--restore-ckpt", rckpt, "--config", ini, "--out",
                 (dir / "q").string()})
                .code,
            kExitOk);
  const std::string qckpt = (dir / "q/regressor.ckpt").string();

  const auto score = cli({"score", "--image", m.resolve(m.records.front().image_path).string(), "--restore-ckpt",
                          rckpt, "--regressor-ckpt", qckpt, "--json"});
  ASSERT_EQ(score.code, kExitOk) << score.err;
  const auto j = nlohmann::json::parse(score.out);
  for (const char* key : {"score", "predicted_domain", "domain_confidence", "n_patches"})
    EXPECT_TRUE(j.contains(key)) << key;

  const auto batch = cli({"score-batch", "--manifest", manifest, "--restore-ckpt", rckpt, "--regressor-ckpt", qckpt});
  ASSERT_EQ(batch.code, kExitOk);
  EXPECT_EQ(batch.out.substr(0, batch.out.find('\n')), "image,score_pred,score_gt,domain_pred,domain_gt");
  ASSERT_EQ(cli({"score-batch", "--manifest", manifest, "--restore-ckpt", rckpt, "--regressor-ckpt", qckpt, "--out",
                 (dir / "pred.csv").string()})
                .code,
            kExitOk);
  EXPECT_EQ(slurp(dir / "pred.csv"), batch.out);

  const auto eval = cli({"evaluate", "--pred", (dir / "pred.csv").string(), "--out", (dir / "report.json").string()});
  EXPECT_EQ(eval.code, kExitOk) << eval.err;
  EXPECT_TRUE(nlohmann::json::parse(slurp(dir / "report.json")).contains("srocc"));
  EXPECT_EQ(slurp(dir / "report.json.scatter.csv").substr(0, 14), "yhat,y,fitted\n");

  const auto fp = cli({"fingerprint", "--manifest", manifest, "--ckpt", rckpt, "--out", (dir / "fp").string(), "--k",
                       "1"});
  EXPECT_EQ(fp.code, kExitOk) << fp.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "fp/domain_0.png"));
  EXPECT_TRUE(std::filesystem::exists(dir / "fp/domain_1.grid"));
  EXPECT_TRUE(std::filesystem::exists(dir / "fp/response_matrix.csv"));
  // More images per fingerprint than the split holds.
  EXPECT_EQ(cli({"fingerprint", "--manifest", manifest, "--ckpt", rckpt, "--out", (dir / "fp2").string(), "--k",
                 "50"})
                .code,
            kExitData);

  const auto em = cli({"embed", "--ckpt", rckpt, "--manifest", manifest, "--out", (dir / "coords.csv").string(),
                       "--method", "pca", "--split", "all"});
  EXPECT_EQ(em.code, kExitOk) << em.err;
  EXPECT_EQ(slurp(dir / "coords.csv").substr(0, 10), "x,y,label\n");
  EXPECT_EQ(cli({"embed", "--ckpt", rckpt, "--manifest", manifest, "--out", "c.csv", "--method", "umap"}).code,
            kExitConfig);

  // A config whose domain count disagrees with the manifest.
  std::ofstream(dir / "three.ini") << "[restore]\niterations = 1\n";
  EXPECT_EQ(cli({"train-restore", "--manifest", manifest, "--config", (dir / "three.ini").string(), "--out",
                 (dir / "r3").string()})
                .code,
            kExitConfig);
}

TEST(Cli, ExperimentVerb) {
  daiqa::testing::TempDir dir;
  std::string ini = kTinyIni;
  ini.replace(ini.find("[dataset]\n"), 10, "[dataset]\npristine_count = 6\npristine_size = 32\n");
  std::ofstream(dir / "tiny.ini", std::ios::trunc) << ini;
  const auto r = cli({"experiment", "--config", (dir / "tiny.ini").string(), "--out", (dir / "run").string()});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "run/summary.json"));
  EXPECT_NE(r.out.find("repeats ok 1/1"), std::string::npos) << r.out;
}
