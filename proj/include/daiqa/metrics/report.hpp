#pragma once

#include <array>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace daiqa::metrics {

/// One row of a score-batch prediction CSV.
struct PredictionRow {
  std::string image;
  double score_pred = 0.0;
  double score_gt = 0.0;
  int domain_pred = 0;
  int domain_gt = 0;
};

struct EvalReport {
  double srocc = 0.0;
  /// PLCC after the 4-parameter logistic mapping of predictions.
  double plcc = 0.0;
  /// PLCC of raw predictions.
  double plcc_raw = 0.0;
  int n = 0;
  std::vector<std::vector<double>> confusion;
  std::vector<int> empty_rows;
  double accuracy = 0.0;
  std::array<double, 4> logistic_params{};
  bool logistic_converged = false;
  /// (yhat, y, fitted) per sample, in input order.
  std::vector<std::array<double, 3>> scatter;
};

/// Computes correlations, logistic mapping, and the domain confusion matrix.
EvalReport evaluate_predictions(const std::vector<PredictionRow>& rows, int n_domains);

std::vector<PredictionRow> read_prediction_csv(const std::filesystem::path& path);
void write_prediction_csv(const std::filesystem::path& path, const std::vector<PredictionRow>& rows);
void write_prediction_csv(std::ostream& out, const std::vector<PredictionRow>& rows);

std::string report_to_json(const EvalReport& report, const std::string& config_hash = {}, long long seed = -1);
void write_scatter_csv(const std::filesystem::path& path, const EvalReport& report);

/// Fixed-format number rendering used by every CSV writer (byte-stable output).
std::string format_number(double v);

}  // namespace daiqa::metrics
