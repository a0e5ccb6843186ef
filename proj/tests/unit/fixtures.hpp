#pragma once

// Temporary directories and tiny synthetic datasets for tests.

#include <filesystem>
#include <random>
#include <string>

#include "daiqa/forge/dataset.hpp"
#include "daiqa/forge/pristine.hpp"

namespace daiqa::testing {

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("daiqa_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

/// Noise + blur domains over `n_images` procedural pristine images; the first
/// ~60% of references go to train, the next 20% to val, the rest to test.
inline forge::Manifest tiny_dataset(const std::filesystem::path& dir, int n_images = 5, int size = 32,
                                    std::uint64_t seed = 3, const forge::BuildOptions& options = {}) {
  forge::write_pristine_set(dir / "pristine", n_images, size, seed);
  const std::vector<forge::DomainSchedule> schedule{
      {{0, forge::DistortionKind::kWhiteNoise, 0.1}, {}},
      {{1, forge::DistortionKind::kGaussianBlur, 1.5}, {}},
  };
  forge::Manifest m = forge::build_dataset(dir / "pristine", schedule, dir / "data", seed, options);
  for (auto& r : m.records) {
    const int k = std::stoi(r.ref_path.substr(r.ref_path.find('_') + 1, 4));
    r.split = k < 0.6 * n_images ? forge::Split::kTrain : (k < 0.8 * n_images ? forge::Split::kVal : forge::Split::kTest);
  }
  return m;
}

}  // namespace daiqa::testing
