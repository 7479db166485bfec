#pragma once

// Flat key=value run configuration.

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "rescue_sfs/params.hpp"

namespace rescue_sfs {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, int line, const std::string& what)
      : std::runtime_error(format(key, line, what)), key(key), line(line) {}
  std::string key;
  int line;

 private:
  static std::string format(const std::string& key, int line, const std::string& what) {
    std::string where = line > 0 ? "line " + std::to_string(line) : "override";
    return "config " + where + (key.empty() ? "" : ", key '" + key + "'") + ": " + what;
  }
};

struct RunConfig {
  ModelParams params = reference_params();
  ObservationSpec observation;
  std::uint64_t replicates = 1000;
  std::uint64_t seed = 20240917;

  double t_obs() const { return observation_time(observation, params); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key, line, "expected a number, got '" + v + "'");
  }
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v, int line) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    const auto u = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return u;
  } catch (const std::exception&) {
    throw ConfigError(key, line, "expected a non-negative integer, got '" + v + "'");
  }
}

}  // namespace detail

/// Applies one key=value setting; line 0 means a command-line override.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value, int line = 0) {
  using detail::to_double;
  using detail::to_uint;
  auto& p = cfg.params;
  if (key == "b0") p.b0 = to_double(key, value, line);
  else if (key == "d0") p.d0 = to_double(key, value, line);
  else if (key == "b1") p.b1 = to_double(key, value, line);
  else if (key == "d1") p.d1 = to_double(key, value, line);
  else if (key == "omega") p.omega = to_double(key, value, line);
  else if (key == "gamma") p.gamma = to_double(key, value, line);
  else if (key == "alpha") p.alpha = to_double(key, value, line);
  else if (key == "n_init") p.n_init = static_cast<std::int64_t>(to_uint(key, value, line));
  else if (key == "mutation_law") {
    try {
      p.mutation_law = mutation_law_from_string(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(key, line, e.what());
    }
  } else if (key == "t_mode") {
    if (value == "log_scaled") cfg.observation.mode = ObservationSpec::Mode::log_scaled;
    else if (value == "absolute") cfg.observation.mode = ObservationSpec::Mode::absolute;
    else throw ConfigError(key, line, "expected 'log_scaled' or 'absolute', got '" + value + "'");
  } else if (key == "t_mult") cfg.observation.t_mult = to_double(key, value, line);
  else if (key == "t_abs") cfg.observation.t_abs = to_double(key, value, line);
  else if (key == "replicates") cfg.replicates = to_uint(key, value, line);
  else if (key == "seed") cfg.seed = to_uint(key, value, line);
  else throw ConfigError(key, line, "unknown key");
}

/// Parses '#'-commented key=value lines, then validates the model.
inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string raw;
  int line = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("", line, "expected key=value");
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError("", line, "empty key");
    if (auto it = seen.find(key); it != seen.end())
      throw ConfigError(key, line, "duplicate key (first set on line " + std::to_string(it->second) + ")");
    seen[key] = line;
    apply_setting(cfg, key, value, line);
  }
  try {
    validate(cfg.params);
    (void)cfg.t_obs();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("", 0, e.what());
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  return parse_config(in);
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline nlohmann::ordered_json to_json(const RunConfig& cfg) {
  const auto& p = cfg.params;
  nlohmann::ordered_json j;
  j["b0"] = p.b0;
  j["d0"] = p.d0;
  j["b1"] = p.b1;
  j["d1"] = p.d1;
  j["omega"] = p.omega;
  j["gamma"] = p.gamma;
  j["alpha"] = p.alpha;
  j["n_init"] = p.n_init;
  j["mutation_law"] = std::string(to_string(p.mutation_law));
  j["t_mode"] = cfg.observation.mode == ObservationSpec::Mode::absolute ? "absolute" : "log_scaled";
  j["t_mult"] = cfg.observation.t_mult;
  j["t_abs"] = cfg.observation.t_abs;
  j["replicates"] = cfg.replicates;
  j["seed"] = cfg.seed;
  j["t_obs_resolved"] = cfg.t_obs();
  j["gamma_n_resolved"] = p.gamma_n();
  return j;
}

}  // namespace rescue_sfs
