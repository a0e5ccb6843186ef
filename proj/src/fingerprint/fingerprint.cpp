#include "daiqa/fingerprint/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "daiqa/core/errors.hpp"
#include "daiqa/forge/dataset.hpp"
#include "daiqa/metrics/report.hpp"

namespace daiqa::fingerprint {

Fingerprint normalize(const GrayImage& img) {
  if (img.data.empty()) throw std::invalid_argument("normalize: empty image");
  const double n = static_cast<double>(img.data.size());
  const double mean = std::accumulate(img.data.begin(), img.data.end(), 0.0) / n;
  double var = 0;
  for (double v : img.data) var += (v - mean) * (v - mean);
  var /= n;
  Fingerprint fp;
  fp.pixels = img;
  fp.degenerate = var < kVarianceFloor;
  const double inv = fp.degenerate ? 0.0 : 1.0 / std::sqrt(var);
  for (double& v : fp.pixels.data) v = (v - mean) * inv;
  return fp;
}

GrayImage residual_gray(const Image& img, const Image& restored) {
  if (!img.same_shape(restored)) throw std::invalid_argument("residual_gray: shape mismatch");
  GrayImage g{img.height(), img.width(), std::vector<double>(img.plane_size())};
  const auto r = img.plane(0), gr = img.plane(1), b = img.plane(2);
  const auto rr = restored.plane(0), rg = restored.plane(1), rb = restored.plane(2);
  for (std::size_t i = 0; i < g.data.size(); ++i)
    g.data[i] = 0.299 * (static_cast<double>(r[i]) - rr[i]) + 0.587 * (static_cast<double>(gr[i]) - rg[i]) +
                0.114 * (static_cast<double>(b[i]) - rb[i]);
  return g;
}

Fingerprint image_fingerprint(const Image& img, restore::RestoreModel& model) {
  return normalize(residual_gray(img, restore::restore(img, model).restored));
}

Response response(const Fingerprint& a, const Fingerprint& b) {
  if (!a.pixels.same_shape(b.pixels))
    throw std::invalid_argument("response: fingerprint shapes differ (" + std::to_string(a.pixels.height) + "x" +
                                std::to_string(a.pixels.width) + " vs " + std::to_string(b.pixels.height) + "x" +
                                std::to_string(b.pixels.width) + ")");
  Response r;
  r.image = a.pixels;
  double sum = 0;
  for (std::size_t i = 0; i < r.image.data.size(); ++i) {
    r.image.data[i] *= b.pixels.data[i];
    sum += r.image.data[i];
  }
  r.scalar = sum / static_cast<double>(r.image.data.size());
  return r;
}

Fingerprint average(const std::vector<Fingerprint>& fps) {
  if (fps.empty()) throw std::invalid_argument("average: no fingerprints");
  GrayImage sum = fps[0].pixels;
  for (std::size_t k = 1; k < fps.size(); ++k) {
    if (!fps[k].pixels.same_shape(sum)) throw std::invalid_argument("average: fingerprint shapes differ");
    for (std::size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += fps[k].pixels.data[i];
  }
  for (double& v : sum.data) v /= static_cast<double>(fps.size());
  return normalize(sum);
}

Fingerprint model_fingerprint(int domain_id, const forge::Manifest& manifest, restore::RestoreModel& model, int k,
                              std::uint64_t seed, forge::Split split) {
  if (k < 1) throw std::invalid_argument("model_fingerprint: k must be positive");
  std::vector<const forge::SampleRecord*> pool;
  for (const auto* r : manifest.in_split(split))
    if (r->domain_id == domain_id) pool.push_back(r);
  if (static_cast<int>(pool.size()) < k)
    throw DataError("domain " + std::to_string(domain_id) + " has " + std::to_string(pool.size()) + " " +
                    std::string(forge::to_string(split)) + " images, " + std::to_string(k) + " requested (short by " +
                    std::to_string(k - static_cast<int>(pool.size())) + ")");
  std::mt19937_64 rng(forge::mix_seed(seed, 0x66707269, static_cast<std::uint64_t>(domain_id)));
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(k);

  std::vector<Fingerprint> fps;
  for (const auto* r : pool) {
    fps.push_back(image_fingerprint(read_png(manifest.resolve(r->image_path)), model));
    if (!fps.back().pixels.same_shape(fps.front().pixels))
      throw DataError("model_fingerprint: " + r->image_path + " differs in size from the other domain images");
  }
  return average(fps);
}

FingerprintSet build_fingerprint_set(const forge::Manifest& manifest, restore::RestoreModel& model, int k,
                                     std::uint64_t seed, forge::Split split) {
  FingerprintSet set;
  set.source_count = k;
  for (const auto& d : manifest.domains)
    set.model_fps.emplace(d.domain_id, model_fingerprint(d.domain_id, manifest, model, k, seed, split));
  return set;
}

ResponseMatrix response_matrix(const forge::Manifest& manifest, const FingerprintSet& set,
                               restore::RestoreModel& model, forge::Split split) {
  ResponseMatrix rm;
  for (const auto& [id, fp] : set.model_fps) rm.domain_ids.push_back(id);
  const std::size_t n = rm.domain_ids.size();
  if (n == 0) throw std::invalid_argument("response_matrix: empty fingerprint set");
  auto index_of = [&](int id) -> int {
    const auto it = std::find(rm.domain_ids.begin(), rm.domain_ids.end(), id);
    return it == rm.domain_ids.end() ? -1 : static_cast<int>(it - rm.domain_ids.begin());
  };
  rm.matrix.assign(n, std::vector<double>(n, 0.0));
  std::vector<int> counts(n, 0);
  std::vector<bool> degenerate(n, false);
  for (std::size_t c = 0; c < n; ++c)
    if (set.model_fps.at(rm.domain_ids[c]).degenerate) degenerate.assign(n, true);

  int own = 0;
  for (const auto* r : manifest.in_split(split)) {
    const int row = index_of(r->domain_id);
    if (row < 0) continue;
    const Fingerprint fp = image_fingerprint(read_png(manifest.resolve(r->image_path)), model);
    ImageAssignment a{r->image_path, r->domain_id, 0, {}, fp.degenerate};
    for (std::size_t c = 0; c < n; ++c) {
      const double s = response(fp, set.model_fps.at(rm.domain_ids[c])).scalar;
      a.responses.push_back(s);
      rm.matrix[row][c] += s;
    }
    a.domain_pred = rm.domain_ids[std::max_element(a.responses.begin(), a.responses.end()) - a.responses.begin()];
    if (fp.degenerate) degenerate[row] = true;
    own += a.domain_pred == a.domain_gt;
    ++counts[row];
    rm.assignments.push_back(std::move(a));
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (counts[r] == 0) {
      rm.empty_rows.push_back(rm.domain_ids[r]);
      continue;
    }
    for (double& v : rm.matrix[r]) v /= counts[r];
    if (degenerate[r]) rm.degenerate_rows.push_back(rm.domain_ids[r]);
  }
  rm.own_domain_rate = rm.assignments.empty() ? 0.0 : static_cast<double>(own) / rm.assignments.size();
  return rm;
}

void write_fingerprint_png(const std::filesystem::path& path, const Fingerprint& fp) {
  const auto [lo, hi] = std::minmax_element(fp.pixels.data.begin(), fp.pixels.data.end());
  GrayImage scaled = fp.pixels;
  const double range = *hi - *lo;
  for (double& v : scaled.data) v = range > 0 ? (v - *lo) / range : 0.5;
  write_png_gray(path, scaled);
}

namespace {
constexpr char kGridMagic[8] = {'D', 'A', 'I', 'Q', 'A', 'F', 'G', '\0'};
constexpr std::uint32_t kGridVersion = 1;
constexpr std::uint32_t kFloat64Tag = 1;
}  // namespace

void write_fingerprint_grid(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const std::uint32_t header[4] = {kGridVersion, kFloat64Tag, static_cast<std::uint32_t>(img.height),
                                   static_cast<std::uint32_t>(img.width)};
  out.write(kGridMagic, sizeof(kGridMagic));
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size() * sizeof(double)));
  if (!out) throw DataError("short write to " + path.string());
}

GrayImage read_fingerprint_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  char magic[8];
  std::uint32_t header[4];
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || std::memcmp(magic, kGridMagic, sizeof(magic)) != 0) throw DataError(path.string() + " is not a fingerprint grid");
  if (header[0] != kGridVersion || header[1] != kFloat64Tag)
    throw DataError(path.string() + ": unsupported grid version or dtype");
  GrayImage img{static_cast<int>(header[2]), static_cast<int>(header[3]), {}};
  img.data.resize(static_cast<std::size_t>(img.height) * img.width);
  in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size() * sizeof(double)));
  if (!in) throw DataError(path.string() + " is truncated");
  return img;
}

std::string response_matrix_csv(const ResponseMatrix& rm) {
  std::ostringstream out;
  out << "domain";
  for (int id : rm.domain_ids) out << ",fp_" << id;
  out << '\n';
  for (std::size_t r = 0; r < rm.domain_ids.size(); ++r) {
    out << rm.domain_ids[r];
    for (double v : rm.matrix[r]) out << ',' << metrics::format_number(v);
    out << '\n';
  }
  return out.str();
}

}  // namespace daiqa::fingerprint
