#include "daiqa/forge/dataset.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "daiqa/core/errors.hpp"
#include "json.hpp"

namespace daiqa::forge {

namespace fs = std::filesystem;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  // splitmix64 finalizer over a running combination
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  h = mix(h ^ a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  return h;
}

std::vector<DomainSchedule> waterloo_schedule(const std::vector<DistortionKind>& kinds,
                                              const std::vector<std::vector<double>>& levels, bool domain_per_level) {
  if (kinds.size() != levels.size()) throw std::invalid_argument("waterloo_schedule: one level list per kind");
  std::vector<DomainSchedule> out;
  int next_id = 0;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    if (levels[k].empty()) throw std::invalid_argument("waterloo_schedule: empty level list");
    if (domain_per_level) {
      for (double l : levels[k]) out.push_back({{next_id++, kinds[k], l}, {}});
    } else {
      out.push_back({{next_id++, kinds[k], levels[k].back()}, levels[k]});
    }
  }
  return out;
}

std::vector<DomainSchedule> read_schedule(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read schedule " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    std::vector<DomainSchedule> out;
    for (const auto& d : j.at("domains")) {
      DomainSchedule s;
      s.spec.domain_id = d.at("domain_id").get<int>();
      s.spec.kind = parse_kind(d.at("kind").get<std::string>());
      s.spec.level = d.at("level").get<double>();
      if (d.contains("levels")) s.levels = d.at("levels").get<std::vector<double>>();
      for (double l : s.effective_levels()) validate_level(s.spec.kind, l);
      out.push_back(std::move(s));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("schedule " + path.string() + ": " + e.what());
  } catch (const std::logic_error& e) {
    throw ConfigError("schedule " + path.string() + ": " + e.what());
  }
}

Manifest build_dataset(const fs::path& pristine_dir, const std::vector<DomainSchedule>& schedule,
                       const fs::path& out_dir, std::uint64_t seed, const BuildOptions& options) {
  if (!fs::is_directory(pristine_dir)) throw DataError("pristine directory " + pristine_dir.string() + " not found");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(pristine_dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("pristine directory " + pristine_dir.string() + " is empty");

  std::set<int> ids;
  for (const auto& s : schedule) {
    if (!ids.insert(s.spec.domain_id).second)
      throw ConfigError("duplicate domain id " + std::to_string(s.spec.domain_id));
    for (double l : s.effective_levels()) validate_level(s.spec.kind, l);
  }

  fs::create_directories(out_dir / "reference");
  fs::create_directories(out_dir / "distorted");

  Manifest m;
  m.root = out_dir.string();
  m.seed = seed;
  for (const auto& s : schedule) m.domains.push_back(s.spec);
  m.oracle = options.oracle ? options.oracle_name : std::string();
  m.config_hash = options.config_hash;

  std::size_t decoded = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    Image ref;
    try {
      ref = read_png(files[i]);
    } catch (const DataError& e) {
      spdlog::warn("skipping {}: {}", files[i].string(), e.what());
      continue;
    }
    ++decoded;
    const std::string stem = files[i].stem().string();
    const std::string ref_rel = "reference/" + stem + ".png";
    write_png(out_dir / ref_rel, ref);

    for (const auto& s : schedule) {
      const auto levels = s.effective_levels();
      for (std::size_t l = 0; l < levels.size(); ++l) {
        DistortionSpec spec = s.spec;
        spec.level = levels[l];
        char name[256];
        std::snprintf(name, sizeof(name), "%s_d%02d_l%zu", stem.c_str(), spec.domain_id, l);
        const std::string img_rel = std::string("distorted/") + name + ".png";
        const std::uint64_t sample_seed = mix_seed(seed, i, static_cast<std::uint64_t>(spec.domain_id), l);
        Image dist = apply_distortion(ref, spec, sample_seed).quantized();
        if (spec.kind == DistortionKind::kJpeg) {
          const auto bytes = encode_jpeg(ref, static_cast<int>(std::lround(spec.level)));
          std::ofstream(out_dir / "distorted" / (std::string(name) + ".jpg"), std::ios::binary)
              .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        }
        write_png(out_dir / img_rel, dist);

        SampleRecord rec;
        rec.image_path = img_rel;
        rec.ref_path = ref_rel;
        rec.domain_id = spec.domain_id;
        rec.kind = spec.kind;
        rec.level = spec.level;
        if (options.oracle) rec.score = options.oracle(dist, ref);
        m.records.push_back(std::move(rec));
      }
    }
  }
  if (decoded == 0) throw DataError("no decodable images in " + pristine_dir.string());
  m.validate();
  write_manifest(out_dir / "manifest.jsonl", m);
  return m;
}

}  // namespace daiqa::forge
