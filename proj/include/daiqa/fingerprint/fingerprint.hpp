#pragma once

// Restoration-residual fingerprints: per-image signed residuals in gray,
// standardized to zero mean and unit variance, averaged per domain, and
// compared through the mean of their pixel-wise product.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "daiqa/core/image.hpp"
#include "daiqa/forge/manifest.hpp"
#include "daiqa/restore/model.hpp"

namespace daiqa::fingerprint {

/// Variances below this are treated as zero: the input is flagged degenerate
/// and normalizes to all zeros instead of dividing by ~0.
inline constexpr double kVarianceFloor = 1e-12;

struct Fingerprint {
  GrayImage pixels;
  bool degenerate = false;
};

/// Zero mean, unit (population) variance.
Fingerprint normalize(const GrayImage& img);

/// Signed residual img - restored, converted with the fixed luma weights.
GrayImage residual_gray(const Image& img, const Image& restored);

Fingerprint image_fingerprint(const Image& img, restore::RestoreModel& model);

struct Response {
  GrayImage image;  // pixel-wise product
  double scalar = 0.0;  // its mean: the correlation of the two fingerprints
};

/// Throws std::invalid_argument on a shape mismatch.
Response response(const Fingerprint& a, const Fingerprint& b);

/// Elementwise mean of equally sized fingerprints, renormalized.
Fingerprint average(const std::vector<Fingerprint>& fps);

struct FingerprintSet {
  std::map<int, Fingerprint> model_fps;
  int source_count = 0;
};

/// Mean of k normalized fingerprints of `domain_id` images drawn from `split`
/// (seeded selection), renormalized. Throws DataError naming the shortfall when
/// fewer than k images exist, or when their sizes differ.
Fingerprint model_fingerprint(int domain_id, const forge::Manifest& manifest, restore::RestoreModel& model, int k,
                              std::uint64_t seed, forge::Split split = forge::Split::kTrain);

FingerprintSet build_fingerprint_set(const forge::Manifest& manifest, restore::RestoreModel& model, int k,
                                     std::uint64_t seed, forge::Split split = forge::Split::kTrain);

struct ImageAssignment {
  std::string image_path;
  int domain_gt = 0;
  int domain_pred = 0;  // argmax over model fingerprints
  std::vector<double> responses;
  bool degenerate = false;
};

struct ResponseMatrix {
  std::vector<int> domain_ids;  // row/column order
  /// (r, c): mean response of domain-r image fingerprints to the domain-c model fingerprint.
  std::vector<std::vector<double>> matrix;
  std::vector<int> empty_rows;       // domains without evaluation images
  std::vector<int> degenerate_rows;  // rows touching a degenerate fingerprint
  std::vector<ImageAssignment> assignments;
  /// Fraction of images whose row-argmax is their own domain.
  double own_domain_rate = 0.0;
};

ResponseMatrix response_matrix(const forge::Manifest& manifest, const FingerprintSet& set,
                               restore::RestoreModel& model, forge::Split split = forge::Split::kTest);

/// Min-max scaled 8-bit grayscale PNG (constant images render mid-gray).
void write_fingerprint_png(const std::filesystem::path& path, const Fingerprint& fp);

/// Raw grid: "DAIQAFG\0", u32 version, u32 dtype tag (1 = float64), u32 height,
/// u32 width, then row-major little-endian values.
void write_fingerprint_grid(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_fingerprint_grid(const std::filesystem::path& path);

std::string response_matrix_csv(const ResponseMatrix& rm);

}  // namespace daiqa::fingerprint
