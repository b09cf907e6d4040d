#include "nearrat/harness/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "nearrat/errors.hpp"
#include "nearrat/harness/output.hpp"

namespace nearrat::harness {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<std::int64_t> parse_int(const std::string& s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_real(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

const KeySpec* find_spec(const std::string& key) {
  for (const auto& k : config_schema())
    if (k.key == key) return &k;
  return nullptr;
}

// Validates a value and rewrites it in canonical form (reals as fmt_real), so
// "0.5" and "5e-1" hash alike.
std::string normalize(const KeySpec& spec, const std::string& raw) {
  const std::string v = trim(raw);
  auto bad = [&](const char* what) {
    return ConfigError(fmt::format("key '{}': '{}' is not {}", spec.key, v, what));
  };
  switch (spec.type) {
    case ValueType::Int: {
      if (v.empty()) return v;
      auto x = parse_int(v);
      if (!x) throw bad("an integer");
      return std::to_string(*x);
    }
    case ValueType::Real: {
      auto x = parse_real(v);
      if (!x) throw bad("a finite real");
      return fmt_real(*x);
    }
    case ValueType::Flag: {
      if (v == "on" || v == "true" || v == "1") return "on";
      if (v == "off" || v == "false" || v == "0") return "off";
      throw bad("on/off");
    }
    case ValueType::RealList: {
      std::string out;
      for (const auto& item : split_list(v)) {
        auto x = parse_real(item);
        if (!x) throw bad("a comma-separated list of reals");
        if (!out.empty()) out += ",";
        out += fmt_real(*x);
      }
      return out;
    }
    case ValueType::Text:
      if (!spec.choices.empty() && std::find(spec.choices.begin(), spec.choices.end(), v) == spec.choices.end())
        throw bad(fmt::format("one of {}", fmt::join(spec.choices, "|")).c_str());
      return v;
    case ValueType::Path:
      return v;
  }
  return v;
}

const std::set<std::string>& stamp_keys() {
  static const std::set<std::string> keys{"seed", "workers", "out", "calibration", "timing"};
  return keys;
}

}  // namespace

const std::vector<KeySpec>& config_schema() {
  using V = ValueType;
  static const std::vector<KeySpec> schema{
      {"map", V::Text, "veronese:2", "veronese:N, paraboloid or file:PATH", {}},
      {"theta", V::RealList, "", "inhomogeneous shift, n reals; empty means 0", {}},
      {"ball_center", V::RealList, "", "center of B; empty means the domain center", {}},
      {"ball_radius", V::Real, "-1", "sup-norm radius of B; negative means the domain radius", {}},
      {"t_list", V::RealList, "6,7,8", "t values of a sweep", {}},
      {"eps", V::Real, "0.25", "fixed eps when eps_rho = 0", {}},
      {"eps_rho", V::Real, "0", "eps = eps_scale e^(-eps_rho t) when positive", {}},
      {"eps_scale", V::Real, "1", "", {}},
      {"l", V::Int, "0", "derivative order for alpha; 0 picks it at the ball center", {}},
      {"sampler", V::Text, "grid", "", {"grid", "mc"}},
      {"n_pts", V::Int, "100000", "sample points per measure estimate", {}},
      {"seed", V::Int, "", "required by Monte-Carlo runs", {}},
      {"workers", V::Int, "1", "", {}},
      {"budget", V::Int, "10000000", "evaluation budget per primitive call", {}},
      {"out", V::Path, "out", "output directory", {}},
      {"calibration", V::Path, "", "calibration manifest; empty means none", {}},
      {"timing", V::Flag, "off", "fill elapsed_s columns", {}},
      {"family", V::Text, "lower_bound", "qnd-measure parameter family", {"lower_bound", "inclusion", "s1"}},
      {"c", V::Real, "1", "family constant", {}},
      {"s1_poly", V::Text, "2:10", "exponent:coefficient terms of the 1-d function", {}},
      {"s1_k", V::Int, "2", "", {}},
      {"s1_delta", V::Real, "0.01", "", {}},
      {"s1_theta", V::Real, "1", "", {}},
      {"interval", V::RealList, "0,1", "lo,hi of the 1-d interval", {}},
      {"grid_n", V::Int, "1000000", "grid points of 1-d and coverage estimates", {}},
      {"v", V::Real, "0.25", "threshold of the G set", {}},
      {"c0", V::Real, "0", "radius constant of the lower bound; 0 takes it from the calibration", {}},
      {"tau", V::Real, "0.45", "psi(q) = q^-tau", {}},
      {"n_samples", V::Int, "200", "", {}},
      {"q_max", V::Int, "100000", "", {}},
      {"tail_threshold", V::Int, "1000", "", {}},
      {"window_lo", V::Int, "0", "exponent window start; 0 means ceil(sqrt(q_max))", {}},
      {"spectrum_lo", V::Real, "0.45", "", {}},
      {"spectrum_hi", V::Real, "0.6", "", {}},
      {"spectrum_min_share", V::Real, "0.9", "", {}},
      {"lattice_bases", V::Int, "500", "random bases per lattice check", {}},
      {"slope_tol", V::Real, "0.15", "", {}},
      {"band_max", V::Real, "100", "", {}},
      {"decay_tol", V::Real, "0.1", "", {}},
      {"special_tol", V::Real, "0.5", "", {}},
      {"coverage_min", V::Real, "0.5", "", {}},
      {"divergent_min", V::Real, "0.9", "least last-block hit fraction when sum psi^n diverges", {}},
      {"convergent_max", V::Real, "0.2", "largest tail hit fraction when sum psi^n converges", {}},
      {"calib_eps_rho_list", V::RealList, "0.5,0.75", "eps = eps_scale e^(-rho t) rules fitted by calibrate", {}},
      {"calib_t_list", V::RealList, "5,6,7", "t values fitted by calibrate", {}},
      {"inputs", V::Text, "", "comma-separated CSV files for report", {}},
  };
  return schema;
}

RunConfig::RunConfig() {
  for (const auto& k : config_schema()) {
    values_[k.key] = k.default_value.empty() ? "" : normalize(k, k.default_value);
    origins_[k.key] = "default";
  }
}

void RunConfig::set(const std::string& key, const std::string& value, const std::string& origin) {
  const KeySpec* spec = find_spec(key);
  if (!spec) throw ConfigError(fmt::format("{}: unknown key '{}'", origin, key));
  values_[key] = normalize(*spec, value);
  origins_[key] = origin;
}

bool RunConfig::was_set(const std::string& key) const {
  auto it = origins_.find(key);
  return it != origins_.end() && it->second != "default";
}

const std::string& RunConfig::origin(const std::string& key) const { return origins_.at(key); }

std::int64_t RunConfig::get_int(const std::string& key) const {
  const auto& v = get_text(key);
  auto x = parse_int(v);
  if (!x) throw ConfigError(fmt::format("key '{}' is not set", key));
  return *x;
}

double RunConfig::get_real(const std::string& key) const { return *parse_real(get_text(key)); }

const std::string& RunConfig::get_text(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(fmt::format("unknown key '{}'", key));
  return it->second;
}

bool RunConfig::get_flag(const std::string& key) const { return get_text(key) == "on"; }

std::vector<double> RunConfig::get_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(get_text(key))) out.push_back(*parse_real(item));
  return out;
}

void RunConfig::validate() const {
  if (get_list("t_list").empty()) throw ConfigError("t_list must be nonempty");
  if (get_int("workers") < 1) throw ConfigError("workers must be at least 1");
  if (get_int("budget") < 1) throw ConfigError("budget must be positive");
  if (get_int("n_pts") < 1 || get_int("grid_n") < 1) throw ConfigError("sample sizes must be positive");
  if (get_real("eps") <= 0 || get_real("eps_scale") <= 0) throw ConfigError("eps must be positive");
  if (get_text("sampler") == "mc" && get_text("seed").empty())
    throw ConfigError("a seed is required with the mc sampler");
  const auto& map = get_text("map");
  if (map.rfind("file:", 0) == 0 && !std::filesystem::exists(map.substr(5)))
    throw ConfigError(fmt::format("map file '{}' does not exist", map.substr(5)));
  const auto& cal = get_text("calibration");
  if (!cal.empty() && !std::filesystem::exists(cal))
    throw ConfigError(fmt::format("calibration manifest '{}' does not exist", cal));
  for (const auto& in : split_list(get_text("inputs")))
    if (!std::filesystem::exists(in)) throw ConfigError(fmt::format("input '{}' does not exist", in));
  if (get_list("interval").size() != 2) throw ConfigError("interval takes two values");
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    if (stamp_keys().count(k)) continue;
    out += k + "=" + v + "\n";
  }
  return out;
}

std::string RunConfig::hash() const { return sha1_hex(canonical()); }

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text,
                                                                   const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(fmt::format("{}:{}: expected key = value", origin, lineno));
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

std::string env_name(const std::string& key) {
  std::string s = "NEARRAT_";
  for (char c : key) s += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
}

RunConfig resolve_config(const FlagValues& flags, const EnvLookup& env) {
  RunConfig cfg;
  std::optional<std::string> path = flags.config;
  if (!path && env) path = env("NEARRAT_CONFIG");
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", *path));
    std::stringstream ss;
    ss << in.rdbuf();
    for (const auto& [k, v] : parse_config_text(ss.str(), *path)) cfg.set(k, v, *path);
  }
  if (env)
    for (const auto& spec : config_schema())
      if (auto v = env(env_name(spec.key))) cfg.set(spec.key, *v, "env");
  const std::pair<const char*, const std::optional<std::string>*> flag_keys[] = {
      {"seed", &flags.seed}, {"workers", &flags.workers},         {"budget", &flags.budget},
      {"out", &flags.out},   {"calibration", &flags.calibration},
  };
  for (const auto& [k, v] : flag_keys)
    if (*v) cfg.set(k, **v, "flag");
  cfg.validate();
  return cfg;
}

}  // namespace nearrat::harness
