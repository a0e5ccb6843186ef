#include "daiqa/fingerprint/embedding.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>
#include <string>

#include "daiqa/core/errors.hpp"
#include "daiqa/metrics/report.hpp"

namespace daiqa::fingerprint {

std::string_view to_string(EmbedMethod m) { return m == EmbedMethod::kPca ? "pca" : "tsne"; }

EmbedMethod parse_embed_method(std::string_view name) {
  if (name == "tsne") return EmbedMethod::kTsne;
  if (name == "pca") return EmbedMethod::kPca;
  throw std::invalid_argument("unknown embedding method '" + std::string(name) + "'");
}

namespace {

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) throw std::invalid_argument("embedding needs at least 2 points");
  const std::size_t d = rows[0].size();
  if (d < 2) throw std::invalid_argument("embedding needs latent dimension >= 2");
  Eigen::MatrixXd x(rows.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) throw std::invalid_argument("embedding: latents differ in dimension");
    for (std::size_t j = 0; j < d; ++j) x(i, j) = rows[i][j];
  }
  return x;
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x) {
  const Eigen::VectorXd norms = x.rowwise().squaredNorm();
  Eigen::MatrixXd d = (-2.0 * x * x.transpose()).colwise() + norms;
  d.rowwise() += norms.transpose();
  return d.cwiseMax(0.0);
}

// Conditional affinities with per-point bandwidths matched to the perplexity,
// symmetrized and normalized.
Eigen::MatrixXd joint_affinities(const Eigen::MatrixXd& dist, double perplexity) {
  const int n = static_cast<int>(dist.rows());
  const double target = std::log(perplexity);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double beta = 1.0, lo = -INFINITY, hi = INFINITY;
    for (int iter = 0; iter < 100; ++iter) {
      double sum = 0, dot = 0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double v = std::exp(-dist(i, j) * beta);
        p(i, j) = v;
        sum += v;
        dot += v * dist(i, j);
      }
      sum = std::max(sum, 1e-300);
      const double entropy = std::log(sum) + beta * dot / sum;
      p.row(i) /= sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2 : (beta + hi) / 2;
      } else {
        hi = beta;
        beta = std::isinf(lo) ? beta / 2 : (beta + lo) / 2;
      }
    }
  }
  Eigen::MatrixXd joint = (p + p.transpose()) / (2.0 * n);
  return joint.cwiseMax(1e-12);
}

std::vector<std::array<double, 2>> tsne(const Eigen::MatrixXd& x, const EmbedOptions& opt) {
  const int n = static_cast<int>(x.rows());
  const double perplexity = std::clamp(opt.perplexity, 1.0, (n - 1) / 3.0);
  const Eigen::MatrixXd p = joint_affinities(squared_distances(x), perplexity);

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1e-4);
  Eigen::MatrixXd y(n, 2), update = Eigen::MatrixXd::Zero(n, 2), gains = Eigen::MatrixXd::Ones(n, 2);
  for (int i = 0; i < n; ++i) y(i, 0) = normal(rng), y(i, 1) = normal(rng);

  constexpr int kExaggerationIters = 250;
  Eigen::MatrixXd num(n, n), grad(n, 2);
  for (int it = 0; it < opt.iterations; ++it) {
    const double exaggeration = it < kExaggerationIters ? 12.0 : 1.0;
    const double momentum = it < kExaggerationIters ? 0.5 : 0.8;
    num = (1.0 + squared_distances(y).array()).inverse().matrix();
    num.diagonal().setZero();
    const double qsum = std::max(num.sum(), 1e-300);
    grad.setZero();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const double w = (exaggeration * p(i, j) - num(i, j) / qsum) * num(i, j);
        grad.row(i) += 4.0 * w * (y.row(i) - y.row(j));
      }
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < 2; ++k) {
        const bool same_sign = (grad(i, k) > 0) == (update(i, k) > 0);
        gains(i, k) = std::max(0.01, same_sign ? gains(i, k) * 0.8 : gains(i, k) + 0.2);
      }
    update = momentum * update - opt.learning_rate * gains.cwiseProduct(grad);
    y += update;
    y.rowwise() -= y.colwise().mean();
  }
  std::vector<std::array<double, 2>> out(n);
  for (int i = 0; i < n; ++i) out[i] = {y(i, 0), y(i, 1)};
  return out;
}

}  // namespace

std::vector<std::array<double, 2>> pca_2d(const std::vector<std::vector<double>>& latents) {
  Eigen::MatrixXd x = to_matrix(latents);
  x.rowwise() -= x.colwise().mean();
  const Eigen::MatrixXd cov = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const int d = static_cast<int>(cov.rows());
  Eigen::MatrixXd v(d, 2);
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd axis = eig.eigenvectors().col(d - 1 - k);  // eigenvalues ascend
    Eigen::Index arg;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0) axis = -axis;
    v.col(k) = axis;
  }
  const Eigen::MatrixXd scores = x * v;
  std::vector<std::array<double, 2>> out(latents.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {scores(i, 0), scores(i, 1)};
  return out;
}

std::vector<EmbeddedPoint> embed_2d(const std::vector<std::vector<double>>& latents, const std::vector<int>& labels,
                                    const EmbedOptions& options) {
  if (labels.size() != latents.size()) throw std::invalid_argument("embed_2d: label count mismatch");
  const Eigen::MatrixXd x = to_matrix(latents);
  constexpr int kMinTsnePoints = 5;
  const auto coords = options.method == EmbedMethod::kPca || x.rows() < kMinTsnePoints ? pca_2d(latents)
                                                                                         : tsne(x, options);
  std::vector<EmbeddedPoint> out(latents.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {coords[i][0], coords[i][1], labels[i]};
  return out;
}

double silhouette(const std::vector<std::vector<double>>& points, const std::vector<int>& labels) {
  if (points.size() != labels.size()) throw std::invalid_argument("silhouette: label count mismatch");
  std::map<int, int> sizes;
  for (int l : labels) ++sizes[l];
  if (sizes.size() < 2) throw std::invalid_argument("silhouette needs at least 2 distinct labels");
  const std::size_t n = points.size();
  auto dist = [&](std::size_t a, std::size_t b) {
    double s = 0;
    for (std::size_t k = 0; k < points[a].size(); ++k) s += (points[a][k] - points[b][k]) * (points[a][k] - points[b][k]);
    return std::sqrt(s);
  };
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (sizes[labels[i]] == 1) continue;
    std::map<int, double> sum;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sum[labels[j]] += dist(i, j);
    const double a = sum[labels[i]] / (sizes[labels[i]] - 1);
    double b = INFINITY;
    for (const auto& [label, s] : sum)
      if (label != labels[i]) b = std::min(b, s / sizes[label]);
    const double m = std::max(a, b);
    if (m > 0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

double silhouette(const std::vector<EmbeddedPoint>& points) {
  std::vector<std::vector<double>> xy;
  std::vector<int> labels;
  for (const auto& p : points) {
    xy.push_back({p.x, p.y});
    labels.push_back(p.label);
  }
  return silhouette(xy, labels);
}

void write_embedding_csv(const std::filesystem::path& path, const std::vector<EmbeddedPoint>& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "x,y,label\n";
  for (const auto& p : points)
    out << metrics::format_number(p.x) << ',' << metrics::format_number(p.y) << ',' << p.label << '\n';
}

}  // namespace daiqa::fingerprint
