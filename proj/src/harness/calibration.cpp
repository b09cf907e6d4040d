#include "nearrat/harness/calibration.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "nearrat/errors.hpp"
#include "nearrat/harness/output.hpp"

namespace nearrat::harness {

std::string CalibrationEntry::key() const {
  std::vector<std::string> parts;
  for (double v : theta) parts.push_back(fmt_real(v));
  return fmt::format("{}@{}", map, fmt::join(parts, ","));
}

double CalibrationEntry::at(const std::string& name) const {
  auto it = constants.find(name);
  if (it == constants.end()) throw ConfigError(fmt::format("calibration {}: no constant '{}'", key(), name));
  return it->second;
}

namespace {

bool same_theta(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double x = i < a.size() ? a[i] : 0.0, y = i < b.size() ? b[i] : 0.0;
    if (x != y) return false;
  }
  return true;
}

}  // namespace

const CalibrationEntry* CalibrationManifest::find(const std::string& map, const std::vector<double>& theta) const {
  for (const auto& e : entries)
    if (e.map == map && same_theta(e.theta, theta)) return &e;
  return nullptr;
}

void CalibrationManifest::upsert(CalibrationEntry e) {
  for (auto& old : entries)
    if (old.map == e.map && same_theta(old.theta, e.theta)) {
      old = std::move(e);
      return;
    }
  entries.push_back(std::move(e));
  std::sort(entries.begin(), entries.end(),
            [](const CalibrationEntry& a, const CalibrationEntry& b) { return a.key() < b.key(); });
}

void CalibrationManifest::check() const {
  for (const auto& e : entries)
    for (const auto& [name, v] : e.constants)
      if (!(v > 0) || !std::isfinite(v))
        throw SchemaError(fmt::format("calibration {}: constant {} = {} is not positive", e.key(), name, v));
  for (const auto& [k, band] : transference_band)
    if (!(band.first > 0) || band.first > band.second)
      throw SchemaError(fmt::format("calibration: malformed transference band for k = {}", k));
}

nlohmann::json CalibrationManifest::to_json() const {
  nlohmann::json j;
  j["schema"] = "v1";
  j["fit"] = {{"seed", seed}, {"t_list", t_list}, {"eps_rho_list", eps_rho_list}, {"grids", grids},
              {"lattice_bases", lattice_bases}};
  nlohmann::json band = nlohmann::json::object();
  for (const auto& [k, b] : transference_band) band[std::to_string(k)] = {b.first, b.second};
  j["transference_band"] = band;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json c = nlohmann::json::object();
    for (const auto& [name, v] : e.constants) c[name] = v;
    j["entries"].push_back({{"map", e.map},
                            {"theta", e.theta},
                            {"ball_center", e.ball_center},
                            {"ball_radius", e.ball_radius},
                            {"constants", c}});
  }
  return j;
}

CalibrationManifest CalibrationManifest::from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema") != "v1") throw SchemaError("calibration: unsupported schema");
    CalibrationManifest m;
    const auto& fit = j.at("fit");
    m.seed = fit.at("seed").get<std::string>();
    m.t_list = fit.at("t_list").get<std::vector<double>>();
    m.eps_rho_list = fit.at("eps_rho_list").get<std::vector<double>>();
    m.grids = fit.at("grids");
    m.lattice_bases = fit.at("lattice_bases").get<std::int64_t>();
    for (auto it = j.at("transference_band").begin(); it != j.at("transference_band").end(); ++it)
      m.transference_band[std::stoi(it.key())] = {it.value().at(0).get<double>(), it.value().at(1).get<double>()};
    for (const auto& e : j.at("entries")) {
      CalibrationEntry c;
      c.map = e.at("map").get<std::string>();
      c.theta = e.at("theta").get<std::vector<double>>();
      c.ball_center = e.at("ball_center").get<std::vector<double>>();
      c.ball_radius = e.at("ball_radius").get<double>();
      for (auto it = e.at("constants").begin(); it != e.at("constants").end(); ++it)
        c.constants[it.key()] = it.value().get<double>();
      m.entries.push_back(std::move(c));
    }
    m.check();
    return m;
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(fmt::format("calibration: {}", ex.what()));
  }
}

std::string CalibrationManifest::serialize() const { return dump_json(to_json()); }

CalibrationManifest load_calibration(const std::string& path) {
  const std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(fmt::format("calibration '{}': {}", path, ex.what()));
  }
  return CalibrationManifest::from_json(j);
}

std::string calibration_hash(const std::string& path) {
  if (path.empty()) return "none";
  return sha1_hex(read_file(path));
}

}  // namespace nearrat::harness
