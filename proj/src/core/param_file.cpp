#include "daiqa/core/param_file.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "daiqa/core/errors.hpp"

namespace daiqa {

namespace {

static_assert(std::endian::native == std::endian::little, "parameter files assume a little-endian host");

constexpr std::array<char, 8> kMagic{'D', 'A', 'I', 'Q', 'A', 'P', 'F', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw DataError("truncated parameter file " + path.string());
  return v;
}

}  // namespace

void write_param_file(const std::filesystem::path& path, const std::string& kind, const nlohmann::json& meta,
                      const nn::NamedParams<float>& params) {
  nlohmann::json header{{"kind", kind}, {"meta", meta}, {"tensors", nlohmann::json::array()}};
  for (const auto& [name, p] : params) {
    const auto& s = p->value.shape();
    header["tensors"].push_back({{"name", name}, {"shape", {s[0], s[1], s[2], s[3]}}});
  }
  const std::string text = header.dump();

  // Write to a sibling temp file first so a crash never leaves a torn checkpoint.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(kMagic.data(), kMagic.size());
    put(out, kVersion);
    put(out, static_cast<std::uint64_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, p] : params)
      out.write(reinterpret_cast<const char*>(p->value.data()),
                static_cast<std::streamsize>(p->value.size() * sizeof(float)));
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ParamFile read_param_file(const std::filesystem::path& path, const std::string& expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open parameter file " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw DataError("not a parameter file: " + path.string());
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion) throw DataError("unsupported parameter file version " + std::to_string(version));
  const auto len = get<std::uint64_t>(in, path);
  if (len > (1u << 26)) throw DataError("corrupt header length in " + path.string());
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw DataError("truncated header in " + path.string());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad header in " + path.string() + ": " + e.what());
  }
  ParamFile file;
  file.kind = header.value("kind", "");
  if (file.kind != expected_kind)
    throw ConfigError("parameter file " + path.string() + " holds '" + file.kind + "', expected '" + expected_kind + "'");
  file.meta = header.value("meta", nlohmann::json::object());
  for (const auto& t : header.at("tensors")) {
    const auto s = t.at("shape").get<std::array<int, 4>>();
    Tensorf v(s[0], s[1], s[2], s[3]);
    if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float))))
      throw DataError("truncated tensor data in " + path.string());
    file.tensors.emplace_back(t.at("name").get<std::string>(), std::move(v));
  }
  return file;
}

void assign_params(const ParamFile& file, const nn::NamedParams<float>& params) {
  if (file.tensors.size() != params.size())
    throw ConfigError("checkpoint has " + std::to_string(file.tensors.size()) + " tensors, model expects " +
                      std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, value] = file.tensors[i];
    auto& [want, p] = params[i];
    if (name != want || !value.same_shape(p->value))
      throw ConfigError("checkpoint tensor " + name + " " + value.shape_string() + " does not match model tensor " +
                        want + " " + p->value.shape_string());
    p->value = value;
  }
}

}  // namespace daiqa
