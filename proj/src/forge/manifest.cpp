#include "daiqa/forge/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "daiqa/core/errors.hpp"
#include "json.hpp"

namespace daiqa::forge {

using nlohmann::json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kUnassigned: return "unassigned";
  }
  return "unassigned";
}

Split parse_split(std::string_view name) {
  for (auto s : {Split::kTrain, Split::kVal, Split::kTest, Split::kUnassigned})
    if (to_string(s) == name) return s;
  throw DataError("unknown split '" + std::string(name) + "'");
}

void Manifest::validate() const {
  std::set<int> ids;
  for (const auto& d : domains) {
    if (d.domain_id < 0) throw DataError("negative domain id");
    if (!ids.insert(d.domain_id).second) throw DataError("duplicate domain id " + std::to_string(d.domain_id));
  }
  for (const auto& r : records) {
    if (!ids.count(r.domain_id))
      throw DataError("record " + r.image_path + " names unknown domain " + std::to_string(r.domain_id));
    if (r.score && (*r.score < 0.0 || *r.score > 1.0)) throw DataError("record " + r.image_path + " score outside [0,1]");
  }
}

const DistortionSpec& Manifest::domain(int domain_id) const {
  for (const auto& d : domains)
    if (d.domain_id == domain_id) return d;
  throw DataError("unknown domain id " + std::to_string(domain_id));
}

bool Manifest::dense_domain_ids() const {
  std::vector<int> ids;
  for (const auto& d : domains) ids.push_back(d.domain_id);
  std::sort(ids.begin(), ids.end());
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] != static_cast<int>(i)) return false;
  return true;
}

bool Manifest::labeled() const {
  return !records.empty() && std::all_of(records.begin(), records.end(), [](const auto& r) { return r.score.has_value(); });
}

std::vector<const SampleRecord*> Manifest::in_split(Split split) const {
  std::vector<const SampleRecord*> out;
  for (const auto& r : records)
    if (r.split == split) out.push_back(&r);
  return out;
}

std::string serialize_manifest(const Manifest& m) {
  json header;
  header["version"] = Manifest::kVersion;
  header["root"] = m.root;
  header["seed"] = m.seed;
  json domains = json::array();
  for (const auto& d : m.domains)
    domains.push_back({{"domain_id", d.domain_id}, {"kind", std::string(to_string(d.kind))}, {"level", d.level}});
  header["domains"] = std::move(domains);
  if (!m.oracle.empty()) header["oracle"] = m.oracle;
  if (!m.config_hash.empty()) header["config_hash"] = m.config_hash;

  std::ostringstream out;
  out << header.dump() << '\n';
  for (const auto& r : m.records) {
    json rec{{"image_path", r.image_path},
             {"ref_path", r.ref_path},
             {"domain_id", r.domain_id},
             {"kind", std::string(to_string(r.kind))},
             {"level", r.level},
             {"split", std::string(to_string(r.split))}};
    if (r.score) rec["score"] = *r.score;
    out << rec.dump() << '\n';
  }
  return out.str();
}

Manifest parse_manifest(std::string_view text) {
  Manifest m;
  std::istringstream in{std::string(text)};
  std::string line;
  bool have_header = false;
  int line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (!have_header) {
        if (j.at("version").get<int>() != Manifest::kVersion)
          throw DataError("unsupported manifest version " + j.at("version").dump());
        m.root = j.at("root").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& d : j.at("domains"))
          m.domains.push_back({d.at("domain_id").get<int>(), parse_kind(d.at("kind").get<std::string>()),
                               d.at("level").get<double>()});
        m.oracle = j.value("oracle", std::string());
        m.config_hash = j.value("config_hash", std::string());
        have_header = true;
        continue;
      }
      SampleRecord r;
      r.image_path = j.at("image_path").get<std::string>();
      r.ref_path = j.at("ref_path").get<std::string>();
      r.domain_id = j.at("domain_id").get<int>();
      r.kind = parse_kind(j.at("kind").get<std::string>());
      r.level = j.at("level").get<double>();
      if (j.contains("score")) r.score = j.at("score").get<double>();
      r.split = parse_split(j.value("split", std::string("unassigned")));
      m.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!have_header) throw DataError("manifest has no header line");
  m.validate();
  return m;
}

namespace {

// A manifest stored next to its data records its root as "." so that the file
// does not depend on where the dataset directory lives.
bool root_is_manifest_dir(const std::filesystem::path& manifest_path, const std::string& root) {
  std::error_code ec;
  const auto dir = manifest_path.parent_path().empty() ? std::filesystem::path(".") : manifest_path.parent_path();
  return std::filesystem::path(root).is_absolute() && std::filesystem::exists(root, ec) &&
         std::filesystem::equivalent(dir, root, ec);
}

}  // namespace

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest " + path.string());
  if (root_is_manifest_dir(path, m.root)) {
    Manifest local = m;
    local.root = ".";
    out << serialize_manifest(local);
  } else {
    out << serialize_manifest(m);
  }
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  Manifest m = parse_manifest(ss.str());
  // Relative roots are relative to the manifest's own directory.
  if (std::filesystem::path(m.root).is_relative()) {
    auto root = (path.parent_path() / m.root).lexically_normal();
    if (!root.has_filename() && root.has_parent_path() && root != root.root_path()) root = root.parent_path();
    m.root = root.empty() ? "." : root.string();
  }
  return m;
}

double canonical_from_mos(double mos) { return std::clamp(mos / 9.0, 0.0, 1.0); }
double canonical_from_dmos(double dmos) { return std::clamp(1.0 - dmos / 100.0, 0.0, 1.0); }

}  // namespace daiqa::forge
