#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "records.hpp"

namespace fracns::harness {

/// Records of one (kind, record type) flattened into rows. Columns are
/// experiment, config_hash, seed, status, then the params keys and the stats keys
/// in first-seen order. Nulls are written as "null", arrays space-separated.
struct SummaryTable {
  std::string kind;
  std::string record;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

std::vector<SummaryTable> summarize(const std::vector<Json>& records);
void write_csv(std::ostream& os, const SummaryTable& table);

/// Writes the primary table (point, check, trajectory, series, result, snapshot; the
/// first present) to `path` and every other table to "<stem>-<record>.csv" beside it.
std::vector<std::string> write_summary_file(const std::vector<Json>& records, const std::string& path);

}  // namespace fracns::harness
