#include "nearrat/harness/output.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "nearrat/errors.hpp"

namespace nearrat::harness {

std::string fmt_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

std::string sha1_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha1(), nullptr) != 1)
    throw Error("sha1: digest failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path));
  out << bytes;
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::add(std::vector<std::string> row) {
  if (row.size() != columns_.size()) throw InvalidArgument("csv: row width does not match the header");
  rows_.push_back(std::move(row));
}

std::string CsvTable::body() const {
  std::string out = fmt::format("{}\n", fmt::join(columns_, ","));
  for (const auto& r : rows_) out += fmt::format("{}\n", fmt::join(r, ","));
  return out;
}

std::string CsvTable::render(const RunStamp& s) const {
  std::string out = std::string(kSchemaLine) + "\n";
  out += fmt::format("#subcommand={}\n#config_hash={}\n#calibration_hash={}\n#seed={}\n#workers={}\n", s.subcommand,
                     s.config_hash, s.calibration_hash, s.seed, s.workers);
  return out + body();
}

std::string csv_body(const std::string& text) {
  std::stringstream ss(text);
  std::string line, out;
  while (std::getline(ss, line))
    if (line.empty() || line[0] != '#') out += line + "\n";
  return out;
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string ParsedCsv::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  return "";
}

int ParsedCsv::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

ParsedCsv parse_csv(const std::string& text) {
  ParsedCsv out;
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line) || line != kSchemaLine)
    throw SchemaError(fmt::format("expected '{}' on the first line", kSchemaLine));
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      out.meta.emplace_back(line.substr(1, eq - 1), line.substr(eq + 1));
      continue;
    }
    auto fields = split_commas(line);
    if (out.columns.empty()) {
      out.columns = std::move(fields);
      continue;
    }
    if (fields.size() != out.columns.size())
      throw SchemaError(fmt::format("row with {} fields under {} columns", fields.size(), out.columns.size()));
    out.rows.push_back(std::move(fields));
  }
  if (out.columns.empty()) throw SchemaError("missing column line");
  return out;
}

namespace {

void dump_into(const nlohmann::json& j, int depth, std::string& out) {
  const std::string pad(2 * (depth + 1), ' '), close(2 * depth, ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + nlohmann::json(it.key()).dump() + ": ";
        dump_into(it.value(), depth + 1, out);
      }
      out += "\n" + close + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        dump_into(j[i], depth + 1, out);
      }
      out += "\n" + close + "]";
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? fmt_real(v) : nlohmann::json(fmt_real(v)).dump();
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const nlohmann::json& j) {
  std::string out;
  dump_into(j, 0, out);
  return out + "\n";
}

nlohmann::json run_manifest(const RunStamp& s, const nlohmann::json& config, const std::string& csv_file) {
  nlohmann::json j;
  j["schema"] = "v1";
  j["subcommand"] = s.subcommand;
  j["config_hash"] = s.config_hash;
  j["calibration_hash"] = s.calibration_hash;
  j["seed"] = s.seed;
  j["workers"] = s.workers;
  j["config"] = config;
  j["csv"] = csv_file;
  return j;
}

}  // namespace nearrat::harness
