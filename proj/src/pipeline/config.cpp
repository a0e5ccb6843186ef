#include "daiqa/pipeline/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "daiqa/core/errors.hpp"
#include "daiqa/restore/model.hpp"

namespace daiqa::pipeline {

namespace pt = boost::property_tree;

namespace {

// Switches that live in [ablations] rather than in the module sections.
const std::set<std::string> kRestoreFlags{"perceptual", "adversarial", "domain_classification"};
const std::set<std::string> kRegressorFlags{"semantic_fusion"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void bad_value(const std::string& where, const std::string& value, const char* expected) {
  throw ConfigError(where + ": '" + value + "' is not " + expected);
}

long long to_integer(const std::string& where, const std::string& s) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  bad_value(where, s, "an integer");
}

double to_real(const std::string& where, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  bad_value(where, s, "a finite number");
}

bool to_bool(const std::string& where, const std::string& s) {
  if (s == "true" || s == "on" || s == "1") return true;
  if (s == "false" || s == "off" || s == "0") return false;
  bad_value(where, s, "a boolean (true/false)");
}

// Converts INI text to the JSON type the module's defaults use for that key.
nlohmann::json typed_value(const std::string& where, const nlohmann::json& like, const std::string& text) {
  switch (like.type()) {
    case nlohmann::json::value_t::boolean: return to_bool(where, text);
    case nlohmann::json::value_t::number_unsigned: {
      const long long v = to_integer(where, text);
      if (v < 0) bad_value(where, text, "a non-negative integer");
      return static_cast<std::uint64_t>(v);
    }
    case nlohmann::json::value_t::number_integer: return to_integer(where, text);
    case nlohmann::json::value_t::number_float: return to_real(where, text);
    case nlohmann::json::value_t::array: {
      nlohmann::json arr = nlohmann::json::array();
      if (!trim(text).empty())
        for (const auto& item : split(text, ',')) arr.push_back(to_integer(where, item));
      return arr;
    }
    default: return text;
  }
}

nlohmann::json section_to_json(const std::string& name, const pt::ptree& section, const nlohmann::json& defaults,
                               const std::set<std::string>& reserved) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, node] : section) {
    const std::string where = "[" + name + "] " + key;
    if (reserved.contains(key)) throw ConfigError(where + ": set this switch in [ablations]");
    if (!defaults.contains(key)) throw ConfigError("unknown key " + where);
    j[key] = typed_value(where, defaults.at(key), trim(node.get_value<std::string>()));
  }
  return j;
}

std::string render(const nlohmann::json& v) {
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return fmt_double(v.get<double>());
  if (v.is_number()) return v.dump();
  if (v.is_string()) return v.get<std::string>();
  std::string out;
  for (const auto& item : v) out += (out.empty() ? "" : ",") + item.dump();
  return out;
}

void render_section(std::ostringstream& out, const char* name, const nlohmann::json& j,
                    const std::set<std::string>& skip) {
  out << '[' << name << "]\n";
  for (const auto& [key, v] : j.items())
    if (!skip.contains(key)) out << key << " = " << render(v) << '\n';
  out << '\n';
}

}  // namespace

void ExperimentConfig::apply_ablations() {
  restore.perceptual = ablations.perceptual;
  restore.adversarial = ablations.adversarial;
  restore.domain_classification = ablations.domain_classification;
  regressor.semantic_fusion = ablations.semantic_fusion;
}

void ExperimentConfig::validate() const {
  if (repeats < 1) throw ConfigError("[experiment] repeats must be at least 1");
  for (double f : splits)
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("[experiment] split fractions must lie in [0,1]");
  if (std::abs(splits[0] + splits[1] + splits[2] - 1.0) > 1e-9)
    throw ConfigError("[experiment] split fractions must sum to 1");
  require_supported_device(device);
  if (dataset.domains.empty()) throw ConfigError("[dataset] domains must not be empty");
  if (dataset.pristine_dir.empty() && (dataset.pristine_count < 1 || dataset.pristine_size < 8))
    throw ConfigError("[dataset] procedural pristine images need pristine_count >= 1 and pristine_size >= 8");
  if (dataset.oracle != "psnr_mapped" && dataset.oracle != "ssim_like" && dataset.oracle != "none")
    throw ConfigError("[dataset] oracle must be psnr_mapped, ssim_like or none");
  if (restore.n_domains != static_cast<int>(dataset.domains.size()))
    throw ConfigError("[restore] n_domains (" + std::to_string(restore.n_domains) + ") must equal the number of " +
                      "dataset domains (" + std::to_string(dataset.domains.size()) + ")");
  restore.validate();
  regressor.validate();
  if (regressor.patch_size % restore.size_multiple() != 0)
    throw ConfigError("[regressor] patch_size must be a multiple of 2^depth of the restoration network");
}

ExperimentConfig default_experiment() {
  ExperimentConfig c;
  c.dataset.domains = parse_domains("white_noise:0.098039215686274508, gaussian_blur:2, jpeg:10");
  return c;
}

std::vector<forge::DomainSchedule> parse_domains(std::string_view spec) {
  std::vector<forge::DomainSchedule> out;
  if (trim(spec).empty()) return out;
  for (const auto& entry : split(spec, ',')) {
    const auto colon = entry.find(':');
    if (colon == std::string::npos) throw ConfigError("domain entry '" + entry + "' is not kind:level");
    forge::DomainSchedule d;
    d.spec.domain_id = static_cast<int>(out.size());
    try {
      d.spec.kind = forge::parse_kind(trim(entry.substr(0, colon)));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    for (const auto& lvl : split(entry.substr(colon + 1), '|')) {
      const double level = to_real("domain '" + entry + "'", lvl);
      try {
        forge::validate_level(d.spec.kind, level);
      } catch (const std::out_of_range& e) {
        throw ConfigError(e.what());
      }
      d.levels.push_back(level);
    }
    d.spec.level = d.levels.front();
    if (d.levels.size() == 1) d.levels.clear();
    out.push_back(std::move(d));
  }
  return out;
}

std::string format_domains(const std::vector<forge::DomainSchedule>& domains) {
  std::string out;
  for (const auto& d : domains) {
    if (!out.empty()) out += ", ";
    out += std::string(forge::to_string(d.spec.kind)) + ':';
    const auto levels = d.effective_levels();
    for (std::size_t i = 0; i < levels.size(); ++i) out += (i ? "|" : "") + fmt_double(levels[i]);
  }
  return out;
}

ExperimentConfig parse_experiment_ini(std::string_view text) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  ExperimentConfig c = default_experiment();
  nlohmann::json restore_json = restore::config_to_json(c.restore);
  nlohmann::json regressor_json = quality::config_to_json(c.regressor);

  for (const auto& [name, section] : tree) {
    if (section.empty() && !section.data().empty()) throw ConfigError("key '" + name + "' outside of any section");
    if (name == "experiment") {
      for (const auto& [key, node] : section) {
        const std::string v = trim(node.get_value<std::string>()), where = "[experiment] " + key;
        if (key == "seed")
          c.seed = static_cast<std::uint64_t>(to_integer(where, v));
        else if (key == "repeats")
          c.repeats = static_cast<int>(to_integer(where, v));
        else if (key == "train_fraction")
          c.splits[0] = to_real(where, v);
        else if (key == "val_fraction")
          c.splits[1] = to_real(where, v);
        else if (key == "test_fraction")
          c.splits[2] = to_real(where, v);
        else if (key == "device")
          c.device = v;
        else if (key == "data_root")
          c.data_root = v;
        else
          throw ConfigError("unknown key " + where);
      }
    } else if (name == "dataset") {
      for (const auto& [key, node] : section) {
        const std::string v = trim(node.get_value<std::string>()), where = "[dataset] " + key;
        if (key == "pristine_dir")
          c.dataset.pristine_dir = v;
        else if (key == "pristine_count")
          c.dataset.pristine_count = static_cast<int>(to_integer(where, v));
        else if (key == "pristine_size")
          c.dataset.pristine_size = static_cast<int>(to_integer(where, v));
        else if (key == "domains")
          c.dataset.domains = parse_domains(v);
        else if (key == "oracle")
          c.dataset.oracle = v;
        else
          throw ConfigError("unknown key " + where);
      }
    } else if (name == "restore") {
      restore_json.update(section_to_json(name, section, restore_json, kRestoreFlags));
    } else if (name == "regressor") {
      regressor_json.update(section_to_json(name, section, regressor_json, kRegressorFlags));
    } else if (name == "ablations") {
      for (const auto& [key, node] : section) {
        const std::string v = trim(node.get_value<std::string>()), where = "[ablations] " + key;
        if (key == "perceptual")
          c.ablations.perceptual = to_bool(where, v);
        else if (key == "adversarial")
          c.ablations.adversarial = to_bool(where, v);
        else if (key == "semantic_fusion")
          c.ablations.semantic_fusion = to_bool(where, v);
        else if (key == "domain_classification")
          c.ablations.domain_classification = to_bool(where, v);
        else
          throw ConfigError("unknown key " + where);
      }
    } else {
      throw ConfigError("unknown section [" + name + "]");
    }
  }
  c.restore = restore::config_from_json(restore_json);
  c.regressor = quality::regressor_config_from_json(regressor_json);
  c.apply_ablations();
  c.validate();
  return c;
}

ExperimentConfig read_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_ini(ss.str());
}

std::string to_ini(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "[experiment]\nseed = " << c.seed << "\nrepeats = " << c.repeats
      << "\ntrain_fraction = " << fmt_double(c.splits[0]) << "\nval_fraction = " << fmt_double(c.splits[1])
      << "\ntest_fraction = " << fmt_double(c.splits[2]) << "\ndevice = " << c.device << "\ndata_root = " << c.data_root
      << "\n\n";
  out << "[dataset]\npristine_dir = " << c.dataset.pristine_dir << "\npristine_count = " << c.dataset.pristine_count
      << "\npristine_size = " << c.dataset.pristine_size << "\ndomains = " << format_domains(c.dataset.domains)
      << "\noracle = " << c.dataset.oracle << "\n\n";
  render_section(out, "restore", restore::config_to_json(c.restore), kRestoreFlags);
  render_section(out, "regressor", quality::config_to_json(c.regressor), kRegressorFlags);
  out << "[ablations]\nperceptual = " << (c.ablations.perceptual ? "true" : "false")
      << "\nadversarial = " << (c.ablations.adversarial ? "true" : "false")
      << "\nsemantic_fusion = " << (c.ablations.semantic_fusion ? "true" : "false")
      << "\ndomain_classification = " << (c.ablations.domain_classification ? "true" : "false") << '\n';
  return out.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(to_ini(cfg))));
  return buf;
}

std::string resolve_setting(const std::string& flag_value, const char* env_name, const std::string& fallback) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv(env_name); env != nullptr && *env != '\0') return env;
  return fallback;
}

void require_supported_device(const std::string& device) {
  if (device != "cpu") throw ConfigError("unsupported device '" + device + "' (only 'cpu' is available)");
}

std::filesystem::path under_data_root(const std::filesystem::path& p, const std::string& data_root) {
  if (data_root.empty() || p.empty() || p.is_absolute()) return p;
  return std::filesystem::path(data_root) / p;
}

}  // namespace daiqa::pipeline
