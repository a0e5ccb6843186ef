#include "daiqa/metrics/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "daiqa/core/errors.hpp"
#include "daiqa/metrics/confusion.hpp"
#include "daiqa/metrics/correlation.hpp"
#include "daiqa/metrics/logistic.hpp"
#include "json.hpp"

namespace daiqa::metrics {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

EvalReport evaluate_predictions(const std::vector<PredictionRow>& rows, int n_domains) {
  EvalReport r;
  r.n = static_cast<int>(rows.size());
  std::vector<double> pred, gt;
  std::vector<int> dpred, dgt;
  for (const auto& row : rows) {
    pred.push_back(row.score_pred);
    gt.push_back(row.score_gt);
    dpred.push_back(row.domain_pred);
    dgt.push_back(row.domain_gt);
  }
  r.srocc = srocc(gt, pred);
  r.plcc_raw = plcc(gt, pred);
  if (rows.size() >= 5) {
    const auto fit = logistic_fit(pred, gt);
    r.logistic_params = fit.beta;
    r.logistic_converged = fit.converged;
    r.plcc = plcc(gt, fit.fitted);
    for (std::size_t i = 0; i < rows.size(); ++i) r.scatter.push_back({pred[i], gt[i], fit.fitted[i]});
  } else {
    r.plcc = r.plcc_raw;
    for (std::size_t i = 0; i < rows.size(); ++i) r.scatter.push_back({pred[i], gt[i], pred[i]});
  }
  const auto conf = confusion(dgt, dpred, n_domains);
  r.confusion = conf.matrix;
  r.empty_rows = conf.empty_rows;
  r.accuracy = conf.accuracy;
  return r;
}

std::vector<PredictionRow> read_prediction_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read predictions " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "image,score_pred,score_gt,domain_pred,domain_gt")
    throw DataError("unexpected prediction CSV header in " + path.string());
  std::vector<PredictionRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    PredictionRow row;
    std::string field;
    try {
      std::getline(ss, row.image, ',');
      std::getline(ss, field, ',');
      row.score_pred = std::stod(field);
      std::getline(ss, field, ',');
      row.score_gt = std::stod(field);
      std::getline(ss, field, ',');
      row.domain_pred = std::stoi(field);
      std::getline(ss, field, ',');
      row.domain_gt = std::stoi(field);
    } catch (const std::exception&) {
      throw DataError("malformed prediction row: " + line);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_prediction_csv(std::ostream& out, const std::vector<PredictionRow>& rows) {
  out << "image,score_pred,score_gt,domain_pred,domain_gt\n";
  for (const auto& r : rows)
    out << r.image << ',' << format_number(r.score_pred) << ',' << format_number(r.score_gt) << ',' << r.domain_pred
        << ',' << r.domain_gt << '\n';
}

void write_prediction_csv(const std::filesystem::path& path, const std::vector<PredictionRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_prediction_csv(out, rows);
}

std::string report_to_json(const EvalReport& r, const std::string& config_hash, long long seed) {
  nlohmann::json j;
  j["srocc"] = r.srocc;
  j["plcc"] = r.plcc;
  j["plcc_raw"] = r.plcc_raw;
  j["n"] = r.n;
  j["confusion"] = r.confusion;
  j["empty_rows"] = r.empty_rows;
  j["accuracy"] = r.accuracy;
  j["logistic_params"] = r.logistic_params;
  j["logistic_converged"] = r.logistic_converged;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  if (seed >= 0) j["seed"] = seed;
  return j.dump(2) + "\n";
}

void write_scatter_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "yhat,y,fitted\n";
  for (const auto& s : report.scatter)
    out << format_number(s[0]) << ',' << format_number(s[1]) << ',' << format_number(s[2]) << '\n';
}

}  // namespace daiqa::metrics
