#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nearrat::harness {

enum class ValueType { Int, Real, Text, Flag, RealList, Path };

struct KeySpec {
  std::string key;
  ValueType type;
  std::string default_value;
  std::string help;
  // Choices for Text keys; empty means free text.
  std::vector<std::string> choices;
};

const std::vector<KeySpec>& config_schema();

// Values stay in the normalized text form they were validated in; typed
// accessors parse on demand.
class RunConfig {
 public:
  RunConfig();

  // ConfigError on unknown key or a value that does not parse as its type.
  void set(const std::string& key, const std::string& value, const std::string& origin);
  bool was_set(const std::string& key) const;
  const std::string& origin(const std::string& key) const;

  std::int64_t get_int(const std::string& key) const;
  double get_real(const std::string& key) const;
  const std::string& get_text(const std::string& key) const;
  bool get_flag(const std::string& key) const;
  std::vector<double> get_list(const std::string& key) const;

  // Cross-key checks: referenced files exist, grids nonempty, positive sizes.
  void validate() const;

  // Sorted key=value lines, excluding the keys reported separately in every
  // output (seed, workers, out, calibration, timing).
  std::string canonical() const;
  std::string hash() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> origins_;
};

// Lines "key = value"; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text,
                                                                   const std::string& origin = "config");

// NEARRAT_<KEY> environment variables, keys upper-cased.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

struct FlagValues {
  std::optional<std::string> config;
  std::optional<std::string> seed;
  std::optional<std::string> workers;
  std::optional<std::string> budget;
  std::optional<std::string> out;
  std::optional<std::string> calibration;
};

// Defaults, then the config file, then environment, then flags.
RunConfig resolve_config(const FlagValues& flags, const EnvLookup& env);

std::string env_name(const std::string& key);

}  // namespace nearrat::harness
