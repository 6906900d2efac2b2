#include "records.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fracns/errors.hpp"

#ifndef FRACNS_BUILD_ID
#define FRACNS_BUILD_ID "unknown"
#endif

namespace fracns::harness {

std::string build_id() { return FRACNS_BUILD_ID; }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json make_record(const ExperimentConfig& cfg, const std::string& record_type) {
  Json r;
  r["record"] = record_type;
  r["experiment"] = cfg.name;
  r["kind"] = to_string(cfg.kind);
  r["config_hash"] = hex64(cfg.hash);
  r["build"] = build_id();
  r["seed"] = cfg.seed;
  return r;
}

Json number_or_null(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

void finish_record(Json& record, const std::string& status, double wall_clock_s) {
  record["status"] = status;
  record["wall_clock_s"] = wall_clock_s;
}

RecordWriter::RecordWriter(const std::string& path, std::ostream* echo) : echo_(echo) {
  if (path.empty()) return;
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  file_ = std::make_unique<std::ofstream>(path, std::ios::trunc);
  if (!*file_) throw ConfigError("cannot write records to " + path);
}

void RecordWriter::write(const Json& record) {
  const std::string line = record.dump();
  if (file_) {
    *file_ << line << '\n';
    file_->flush();
  }
  if (echo_) *echo_ << line << '\n';
  records_.push_back(record);
}

std::vector<Json> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open records " + path);
  std::vector<Json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace fracns::harness
