#include "summary.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include "fracns/errors.hpp"

namespace fracns::harness {

namespace {

std::string cell(const Json& v) {
  if (v.is_null()) return "null";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& x : v) out += (out.empty() ? "" : " ") + cell(x);
    return out;
  }
  return v.dump();
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

const char* kLeading[] = {"experiment", "config_hash", "seed", "status"};
const char* kPreference[] = {"point", "check", "trajectory", "series", "result", "snapshot"};

}  // namespace

std::vector<SummaryTable> summarize(const std::vector<Json>& records) {
  std::vector<SummaryTable> tables;
  std::map<std::pair<std::string, std::string>, std::size_t> where;
  std::vector<std::vector<const Json*>> members;
  for (const auto& r : records) {
    const std::string kind = r.value("kind", ""), rec = r.value("record", "");
    auto [it, fresh] = where.try_emplace({kind, rec}, tables.size());
    if (fresh) {
      tables.push_back({kind, rec, {}, {}});
      members.emplace_back();
    }
    members[it->second].push_back(&r);
  }
  for (std::size_t t = 0; t < tables.size(); ++t) {
    auto& tab = tables[t];
    for (const char* c : kLeading) tab.columns.push_back(c);
    std::vector<std::string> params, stats;
    auto add_keys = [](std::vector<std::string>& keys, const Json& obj) {
      if (!obj.is_object()) return;
      for (const auto& [k, v] : obj.items())
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    };
    for (const Json* r : members[t]) {
      add_keys(params, r->value("params", Json::object()));
      add_keys(stats, r->value("stats", Json::object()));
    }
    tab.columns.insert(tab.columns.end(), params.begin(), params.end());
    tab.columns.insert(tab.columns.end(), stats.begin(), stats.end());
    for (const Json* r : members[t]) {
      std::vector<std::string> row;
      for (const char* c : kLeading) row.push_back(r->contains(c) ? cell((*r)[c]) : "null");
      const Json p = r->value("params", Json::object()), s = r->value("stats", Json::object());
      for (const auto& k : params) row.push_back(p.contains(k) ? cell(p[k]) : "null");
      for (const auto& k : stats) row.push_back(s.contains(k) ? cell(s[k]) : "null");
      tab.rows.push_back(std::move(row));
    }
  }
  return tables;
}

void write_csv(std::ostream& os, const SummaryTable& table) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << quote(table.columns[i]);
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << quote(row[i]);
    os << '\n';
  }
}

std::vector<std::string> write_summary_file(const std::vector<Json>& records, const std::string& path) {
  auto tables = summarize(records);
  if (tables.empty()) throw ConfigError("no records to summarize");
  std::size_t primary = tables.size();
  for (const char* pref : kPreference) {
    for (std::size_t i = 0; i < tables.size() && primary == tables.size(); ++i)
      if (tables[i].record == pref) primary = i;
    if (primary != tables.size()) break;
  }
  if (primary == tables.size()) primary = 0;
  const std::filesystem::path base(path);
  if (base.has_parent_path()) std::filesystem::create_directories(base.parent_path());
  std::vector<std::string> written;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    std::filesystem::path target = base;
    if (i != primary) target.replace_filename(base.stem().string() + "-" + tables[i].record + ".csv");
    std::ofstream out(target);
    if (!out) throw ConfigError("cannot write summary " + target.string());
    write_csv(out, tables[i]);
    written.push_back(target.string());
  }
  return written;
}

}  // namespace fracns::harness
