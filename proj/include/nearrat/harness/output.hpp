#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace nearrat::harness {

inline constexpr const char* kSchemaLine = "#schema=v1";

// 17 significant digits; "nan", "inf" and "-inf" for non-finite values.
std::string fmt_real(double v);

std::string sha1_hex(const std::string& bytes);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

struct RunStamp {
  std::string subcommand;
  std::string config_hash;
  std::string calibration_hash;
  std::string seed = "none";
  int workers = 1;
};

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return rows_.size(); }
  void add(std::vector<std::string> row);

  // Comment header with the run stamp, then the column line and the rows.
  std::string render(const RunStamp& stamp) const;
  // Column line and rows only.
  std::string body() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

// Non-comment lines of a rendered CSV.
std::string csv_body(const std::string& text);

struct ParsedCsv {
  std::vector<std::pair<std::string, std::string>> meta;  // "#key=value" lines
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string meta_value(const std::string& key) const;
  int column(const std::string& name) const;  // -1 when absent
};
// SchemaError unless the first line is the v1 schema line and every row has
// one field per column.
ParsedCsv parse_csv(const std::string& text);

// Two-space indented JSON with reals in fmt_real form.
std::string dump_json(const nlohmann::json& j);

nlohmann::json run_manifest(const RunStamp& stamp, const nlohmann::json& config, const std::string& csv_file);

}  // namespace nearrat::harness
