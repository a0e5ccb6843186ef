#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace daiqa::fingerprint {

enum class EmbedMethod { kTsne, kPca };

std::string_view to_string(EmbedMethod m);
EmbedMethod parse_embed_method(std::string_view name);

struct EmbedOptions {
  EmbedMethod method = EmbedMethod::kTsne;
  double perplexity = 30.0;  // clamped to (n - 1) / 3
  int iterations = 1000;
  double learning_rate = 200.0;
  std::uint64_t seed = 0;
};

struct EmbeddedPoint {
  double x = 0.0;
  double y = 0.0;
  int label = 0;
};

/// Deterministic 2-D embedding. t-SNE is exact (O(n^2) per iteration) with
/// early exaggeration; fewer than 5 points fall back to principal components.
/// Throws std::invalid_argument for fewer than 2 points, dimension < 2,
/// ragged input or a label count mismatch.
std::vector<EmbeddedPoint> embed_2d(const std::vector<std::vector<double>>& latents, const std::vector<int>& labels,
                                    const EmbedOptions& options = {});

/// Top-2 principal component scores of the centered data; each axis is signed
/// so that its largest-magnitude loading is positive.
std::vector<std::array<double, 2>> pca_2d(const std::vector<std::vector<double>>& latents);

/// Mean silhouette coefficient (Euclidean). Points in singleton clusters score
/// 0. Throws std::invalid_argument unless there are at least 2 distinct labels.
double silhouette(const std::vector<std::vector<double>>& points, const std::vector<int>& labels);
double silhouette(const std::vector<EmbeddedPoint>& points);

/// "x,y,label" rows.
void write_embedding_csv(const std::filesystem::path& path, const std::vector<EmbeddedPoint>& points);

}  // namespace daiqa::fingerprint
