#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace nearrat::harness {

// Stability margin applied to every frozen constant downstream.
inline constexpr double kCalibrationSlack = 1.2;

// Frozen constants for one (map, theta, ball).
struct CalibrationEntry {
  std::string map;
  std::vector<double> theta;
  std::vector<double> ball_center;
  double ball_radius = 0;
  // E_S, E_sharp, K0, C0, c_inclusion, C_lower plus the ratio ceilings used
  // by report: count_ratio_hi, generic_ratio, tile_ratio.
  std::map<std::string, double> constants;

  std::string key() const;
  double at(const std::string& name) const;  // ConfigError when absent
};

struct CalibrationManifest {
  std::string seed;
  std::vector<double> t_list;
  std::vector<double> eps_rho_list;
  nlohmann::json grids;
  std::int64_t lattice_bases = 0;
  // delta_1(g) delta_k(g*) over random integer bases, per k.
  std::map<int, std::pair<double, double>> transference_band;
  std::vector<CalibrationEntry> entries;

  const CalibrationEntry* find(const std::string& map, const std::vector<double>& theta) const;
  void upsert(CalibrationEntry e);
  // SchemaError when a constant is not positive or the band is malformed.
  void check() const;

  nlohmann::json to_json() const;
  static CalibrationManifest from_json(const nlohmann::json& j);
  // Pretty-printed JSON with 17-digit reals; the hashed bytes.
  std::string serialize() const;
};

CalibrationManifest load_calibration(const std::string& path);
// SHA-1 of the file bytes, or "none" for an empty path.
std::string calibration_hash(const std::string& path);

}  // namespace nearrat::harness
