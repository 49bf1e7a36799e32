#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "jscc/error.hpp"
#include "jscc/network.hpp"

namespace jscc {

// Weight files: "JSCW" u32 count, then per tensor
//   u32 name_len, name bytes, u64 element count, f32 values (little-endian).

template <typename T>
void write_params(const std::filesystem::path& path, const ParamStore<T>& p) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.write("JSCW", 4);
  const auto n = static_cast<std::uint32_t>(p.tensors.size());
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    const auto len = static_cast<std::uint32_t>(p.names[i].size());
    os.write(reinterpret_cast<const char*>(&len), sizeof len);
    os.write(p.names[i].data(), len);
    const auto count = static_cast<std::uint64_t>(p.tensors[i].size());
    os.write(reinterpret_cast<const char*>(&count), sizeof count);
    for (T v : p.tensors[i]) {
      const float f = static_cast<float>(v);
      os.write(reinterpret_cast<const char*>(&f), sizeof f);
    }
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

/// Reads into a store whose layout (names and sizes) must already match.
template <typename T>
void read_params(const std::filesystem::path& path, ParamStore<T>& p) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError("missing weight file " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "JSCW") throw LoadError(path.string() + ": bad magic");
  std::uint32_t n = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  if (n != p.tensors.size())
    throw LoadError(path.string() + ": expected " + std::to_string(p.tensors.size()) + " tensors, found " +
                    std::to_string(n));
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t len = 0;
    is.read(reinterpret_cast<char*>(&len), sizeof len);
    std::string name(len, '\0');
    is.read(name.data(), len);
    std::uint64_t count = 0;
    is.read(reinterpret_cast<char*>(&count), sizeof count);
    if (!is) throw LoadError(path.string() + ": truncated header for tensor " + std::to_string(i));
    if (name != p.names[i] || count != p.tensors[i].size())
      throw LoadError(path.string() + ": tensor '" + name + "' (" + std::to_string(count) +
                      " values) does not match expected '" + p.names[i] + "' (" +
                      std::to_string(p.tensors[i].size()) + " values)");
    for (auto& v : p.tensors[i]) {
      float f;
      is.read(reinterpret_cast<char*>(&f), sizeof f);
      v = static_cast<T>(f);
    }
    if (!is) throw LoadError(path.string() + ": truncated data for '" + name + "'");
  }
}

inline nlohmann::json read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream is(path);
  if (!is) throw LoadError("missing " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

/// Field accessor that reports which manifest key is missing or mistyped.
template <typename V>
V manifest_field(const nlohmann::json& m, const char* key) {
  if (!m.contains(key)) throw LoadError(std::string("manifest is missing field '") + key + "'");
  try {
    return m.at(key).get<V>();
  } catch (const nlohmann::json::exception&) {
    throw LoadError(std::string("manifest field '") + key + "' has the wrong type");
  }
}

}  // namespace jscc
