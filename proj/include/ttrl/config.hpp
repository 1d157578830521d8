#pragma once

// Plain-text `key = value` configuration files. Blank lines and lines
// starting with '#' are ignored.

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ttrl/sim.hpp"

namespace ttrl {

/// Raised for a config problem attributable to one key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what) : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

using KeyValues = std::map<std::string, std::string, std::less<>>;

inline KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(text), "line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key(detail::trim(text.substr(0, eq)));
    if (key.empty()) throw ConfigError("", "line " + std::to_string(lineno) + ": empty key");
    out[key] = std::string(detail::trim(text.substr(eq + 1)));
  }
  return out;
}

namespace detail {

template <typename T>
T parse_number(const std::string& key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) throw ConfigError(key, "invalid value for " + key + ": '" + std::string(text) + "'");
  return value;
}

}  // namespace detail

struct SimulationConfig {
  std::size_t vocab_size = 4;
  std::size_t skills = 2;
  std::size_t questions = 100;
  double bias_scale = 2.0;
  double truth_margin = sim::kDefaultTruthMargin;
  std::uint64_t task_seed = 0;
  sim::PolicyMode mode = sim::PolicyMode::shared;
  double temperature = 1.0;
  sim::TrainConfig train;
};

/// Unknown keys and bad values raise ConfigError naming the key.
inline SimulationConfig parse_simulation_config(const KeyValues& kv) {
  using detail::parse_number;
  SimulationConfig c;
  for (const auto& [key, value] : kv) {
    if (key == "vocab_size") c.vocab_size = parse_number<std::size_t>(key, value);
    else if (key == "skills") c.skills = parse_number<std::size_t>(key, value);
    else if (key == "questions") c.questions = parse_number<std::size_t>(key, value);
    else if (key == "bias_scale") c.bias_scale = parse_number<double>(key, value);
    else if (key == "truth_margin") c.truth_margin = parse_number<double>(key, value);
    else if (key == "task_seed") c.task_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "temperature") c.temperature = parse_number<double>(key, value);
    else if (key == "n_vote") c.train.n_vote = parse_number<std::size_t>(key, value);
    else if (key == "n_train") c.train.n_train = parse_number<std::size_t>(key, value);
    else if (key == "episodes") c.train.episodes = parse_number<std::size_t>(key, value);
    else if (key == "peak_lr") c.train.peak_lr = parse_number<double>(key, value);
    else if (key == "lr_floor") c.train.lr_floor = parse_number<double>(key, value);
    else if (key == "seed") c.train.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "advantage_epsilon") c.train.advantage_epsilon = parse_number<double>(key, value);
    else if (key == "mode") {
      if (value == "tabular") c.mode = sim::PolicyMode::tabular;
      else if (value == "shared") c.mode = sim::PolicyMode::shared;
      else throw ConfigError(key, "invalid value for mode: '" + value + "' (expected tabular or shared)");
    } else {
      throw ConfigError(key, "unknown config key: " + key);
    }
  }
  try {
    c.train.validate();
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    throw ConfigError(what.substr(0, what.find(' ')), what);
  }
  if (!(c.temperature > 0.0)) throw ConfigError("temperature", "temperature must be positive");
  if (c.vocab_size < 2) throw ConfigError("vocab_size", "vocab_size must be at least 2");
  if (c.skills < 1) throw ConfigError("skills", "skills must be at least 1");
  if (c.questions < 1) throw ConfigError("questions", "questions must be at least 1");
  if (!(c.bias_scale >= 0.0)) throw ConfigError("bias_scale", "bias_scale must be >= 0");
  return c;
}

enum class LogLevel { trace, debug, info, warn, error, off };

inline LogLevel parse_log_level(const std::string& key, std::string_view text) {
  static constexpr std::pair<std::string_view, LogLevel> kLevels[] = {
      {"trace", LogLevel::trace}, {"debug", LogLevel::debug}, {"info", LogLevel::info},
      {"warn", LogLevel::warn},   {"error", LogLevel::error}, {"off", LogLevel::off}};
  for (const auto& [name, level] : kLevels) {
    if (name == text) return level;
  }
  throw ConfigError(key, "invalid log level: '" + std::string(text) + "'");
}

inline constexpr std::size_t kDefaultMaxBatchOutputs = 4096;

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t max_batch_outputs = kDefaultMaxBatchOutputs;
  std::optional<LogLevel> log_level;  // unset: keep the --log-level flag
};

/// Precedence: environment (TTRL_LISTEN, TTRL_MAX_BATCH, TTRL_LOG_LEVEL) over
/// file keys (listen, max_batch_outputs, log_level) over defaults. `listen`
/// is host:port.
inline ServiceConfig resolve_service_config(const KeyValues& file, const KeyValues& env) {
  KeyValues merged = file;
  for (const auto& [env_key, file_key] : {std::pair{"TTRL_LISTEN", "listen"}, std::pair{"TTRL_MAX_BATCH", "max_batch_outputs"},
                                          std::pair{"TTRL_LOG_LEVEL", "log_level"}}) {
    if (auto it = env.find(env_key); it != env.end()) merged[file_key] = it->second;
  }
  ServiceConfig c;
  for (const auto& [key, value] : merged) {
    if (key == "listen") {
      const auto colon = value.rfind(':');
      if (colon == std::string::npos) throw ConfigError(key, "listen must be host:port");
      c.host = value.substr(0, colon);
      c.port = detail::parse_number<int>(key, std::string_view(value).substr(colon + 1));
      if (c.host.empty() || c.port < 0 || c.port > 65535) throw ConfigError(key, "invalid listen address: " + value);
    } else if (key == "max_batch_outputs") {
      c.max_batch_outputs = detail::parse_number<std::size_t>(key, value);
      if (c.max_batch_outputs == 0) throw ConfigError(key, "max_batch_outputs must be positive");
    } else if (key == "log_level") {
      c.log_level = parse_log_level(key, value);
    } else {
      throw ConfigError(key, "unknown config key: " + key);
    }
  }
  return c;
}

inline KeyValues service_environment() {
  KeyValues env;
  for (const char* name : {"TTRL_LISTEN", "TTRL_MAX_BATCH", "TTRL_LOG_LEVEL"}) {
    if (const char* v = std::getenv(name)) env[name] = v;
  }
  return env;
}

}  // namespace ttrl
