#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace fracns::harness {

using Json = nlohmann::ordered_json;

/// Identifier of the build that produced a record.
std::string build_id();
std::string hex64(std::uint64_t v);

/// Record skeleton with the fixed leading keys:
/// record, experiment, kind, config_hash, build, seed.
Json make_record(const ExperimentConfig& cfg, const std::string& record_type);

/// Optional numeric value as JSON (null when absent or non-finite).
Json number_or_null(std::optional<double> v);

/// Appends status and wall clock, the last two keys of every record.
void finish_record(Json& record, const std::string& status, double wall_clock_s);

/// NDJSON sink: one compact object per line, keys in insertion order.
class RecordWriter {
 public:
  /// Empty path writes nowhere; records are still collected.
  explicit RecordWriter(const std::string& path, std::ostream* echo = nullptr);
  void write(const Json& record);
  const std::vector<Json>& records() const { return records_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* echo_;
  std::vector<Json> records_;
};

/// Reads every record of an NDJSON file; throws ConfigError on malformed lines.
std::vector<Json> read_records(const std::string& path);

}  // namespace fracns::harness
