#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "jscc/error.hpp"
#include "jscc/pipeline.hpp"
#include "jscc/runspec.hpp"

namespace jscc {

/// Everything a run file can set. Keys absent from the file keep their defaults.
struct RunConfig {
  std::string dataset = "synthetic-200";
  Method method = Method::g_unet;
  TrainConfig train;
  double avg_power = 1.0;
};

/// Parses "1/12", "0.0833" or a JSON number.
inline double parse_ratio(const std::string& s) {
  try {
    const auto slash = s.find('/');
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    }
    const std::string a = s.substr(0, slash), b = s.substr(slash + 1);
    const double num = std::stod(a, &used);
    if (used != a.size()) throw std::invalid_argument(s);
    const double den = std::stod(b, &used);
    if (used != b.size() || den == 0.0) throw std::invalid_argument(s);
    return num / den;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse ratio '" + s + "'");
  }
}

namespace detail {
inline double ratio_value(const nlohmann::json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_ratio(v.get<std::string>());
  throw ConfigError("'" + key + "' must be a number or a string like \"1/12\"");
}

inline std::vector<double> ratio_list(const nlohmann::json& v, const std::string& key) {
  std::vector<double> out;
  if (v.is_array()) {
    for (const auto& e : v) out.push_back(ratio_value(e, key));
  } else {
    out.push_back(ratio_value(v, key));
  }
  if (out.empty()) throw ConfigError("'" + key + "' is empty");
  return out;
}

template <typename V>
V typed(const nlohmann::json& v, const std::string& key) {
  try {
    return v.get<V>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("'" + key + "' has the wrong type");
  }
}
}  // namespace detail

/// Applies one key to the config. Unknown keys are rejected.
inline void apply_config_key(RunConfig& c, const std::string& key, const nlohmann::json& v) {
  if (key == "dataset") c.dataset = detail::typed<std::string>(v, key);
  else if (key == "method") c.method = parse_method(detail::typed<std::string>(v, key));
  else if (key == "bcr") c.train.bcr_set = detail::ratio_list(v, key);
  else if (key == "snr_train_db") c.train.snr_set = detail::ratio_list(v, key);
  else if (key == "epochs") c.train.epochs = detail::typed<int>(v, key);
  else if (key == "batch_size") c.train.batch_size = detail::typed<int>(v, key);
  else if (key == "learning_rate") c.train.learning_rate = detail::typed<double>(v, key);
  else if (key == "lambda_mse") c.train.lambda_mse = detail::typed<double>(v, key);
  else if (key == "lambda_ssim") c.train.lambda_ssim = detail::typed<double>(v, key);
  else if (key == "lambda_l1") c.train.lambda_l1 = detail::typed<double>(v, key);
  else if (key == "seed") c.train.seed = detail::typed<std::uint64_t>(v, key);
  else if (key == "nonsaturating_gan") c.train.nonsaturating_gan = detail::typed<bool>(v, key);
  else if (key == "avg_power") c.avg_power = detail::typed<double>(v, key);
  else throw ConfigError("unknown config key '" + key + "'");
}

inline RunConfig parse_config(const nlohmann::json& j, RunConfig base = {}) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) apply_config_key(base, key, value);
  return base;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

/// "key=value" override; the value is read as JSON when possible, else as a string.
inline void apply_override(RunConfig& c, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must be key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq), text = kv.substr(eq + 1);
  nlohmann::json v = nlohmann::json::parse(text, nullptr, false);
  if (v.is_discarded()) v = text;
  apply_config_key(c, key, v);
}

}  // namespace jscc
