#include "config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <sstream>

#include "fracns/checkpoint.hpp"
#include "fracns/errors.hpp"

namespace fracns::harness {

namespace {

std::string where(const std::string& section, const std::string& key) { return "[" + section + "] " + key; }

template <class T>
T convert(const std::string& raw, const std::string& section, const std::string& key) {
  std::istringstream in(raw);
  T value{};
  in >> value;
  if (in.fail() || !(in >> std::ws).eof())
    throw ConfigError(where(section, key) + ": cannot parse '" + raw + "'");
  return value;
}

std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> parts;
  boost::split(parts, raw, boost::is_any_of(","));
  for (auto& p : parts) boost::trim(p);
  if (parts.size() == 1 && parts[0].empty()) parts.clear();
  return parts;
}

}  // namespace

IniConfig IniConfig::parse(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  IniConfig cfg;
  cfg.text_ = text;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' outside of a section");
    auto& out = cfg.values_[section];
    for (const auto& [key, value] : body) {
      if (!value.empty()) throw ConfigError(where(section, key) + ": nested values are not supported");
      out[key] = boost::trim_copy(value.data());
    }
  }
  return cfg;
}

IniConfig IniConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const std::string* IniConfig::raw(const std::string& section, const std::string& key) const {
  auto s = values_.find(section);
  if (s == values_.end()) return nullptr;
  auto k = s->second.find(key);
  if (k == s->second.end()) return nullptr;
  used_.insert({section, key});
  return &k->second;
}

bool IniConfig::has(const std::string& section, const std::string& key) const {
  auto s = values_.find(section);
  return s != values_.end() && s->second.count(key) > 0;
}

bool IniConfig::has_section(const std::string& section) const { return values_.count(section) > 0; }

std::vector<std::string> IniConfig::sections() const {
  std::vector<std::string> out;
  for (const auto& [name, body] : values_) out.push_back(name);
  return out;
}

std::string IniConfig::get_string(const std::string& section, const std::string& key,
                                  std::optional<std::string> fallback) const {
  if (const auto* r = raw(section, key)) return *r;
  if (fallback) return *fallback;
  throw ConfigError(where(section, key) + " is required");
}

double IniConfig::get_double(const std::string& section, const std::string& key, std::optional<double> fallback) const {
  if (const auto* r = raw(section, key)) return convert<double>(*r, section, key);
  if (fallback) return *fallback;
  throw ConfigError(where(section, key) + " is required");
}

long IniConfig::get_int(const std::string& section, const std::string& key, std::optional<long> fallback) const {
  if (const auto* r = raw(section, key)) return convert<long>(*r, section, key);
  if (fallback) return *fallback;
  throw ConfigError(where(section, key) + " is required");
}

bool IniConfig::get_bool(const std::string& section, const std::string& key, std::optional<bool> fallback) const {
  if (const auto* r = raw(section, key)) {
    const std::string v = boost::to_lower_copy(*r);
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    throw ConfigError(where(section, key) + ": expected a boolean, got '" + *r + "'");
  }
  if (fallback) return *fallback;
  throw ConfigError(where(section, key) + " is required");
}

std::vector<double> IniConfig::get_doubles(const std::string& section, const std::string& key,
                                           std::optional<std::vector<double>> fallback) const {
  if (const auto* r = raw(section, key)) {
    std::vector<double> out;
    for (const auto& p : split_list(*r)) out.push_back(convert<double>(p, section, key));
    return out;
  }
  if (fallback) return *fallback;
  throw ConfigError(where(section, key) + " is required");
}

std::vector<long> IniConfig::get_ints(const std::string& section, const std::string& key,
                                      std::optional<std::vector<long>> fallback) const {
  if (const auto* r = raw(section, key)) {
    std::vector<long> out;
    for (const auto& p : split_list(*r)) out.push_back(convert<long>(p, section, key));
    return out;
  }
  if (fallback) return *fallback;
  throw ConfigError(where(section, key) + " is required");
}

std::vector<std::string> IniConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [section, body] : values_)
    for (const auto& [key, value] : body)
      if (!used_.count({section, key})) out.push_back(where(section, key));
  return out;
}

namespace {

const std::pair<ExperimentKind, const char*> kKindNames[] = {
    {ExperimentKind::trajectory, "trajectory"},
    {ExperimentKind::invariance, "invariance"},
    {ExperimentKind::energy_identity, "energy-identity"},
    {ExperimentKind::operator_checks, "operator-checks"},
    {ExperimentKind::triviality_scan, "triviality-scan"},
    {ExperimentKind::diffusivity_scan, "diffusivity-scan"},
    {ExperimentKind::weak_coupling_2d, "weak-coupling-2d"},
    {ExperimentKind::noise_equivalence, "noise-equivalence"},
    {ExperimentKind::vartheta_limit, "vartheta-limit"},
    {ExperimentKind::ratio_bounds, "ratio-bounds"},
    {ExperimentKind::formulas, "formulas"},
};

}  // namespace

ExperimentKind parse_kind(const std::string& name) {
  for (const auto& [kind, label] : kKindNames)
    if (name == label) return kind;
  std::string known;
  for (const auto& [kind, label] : kKindNames) known += std::string(known.empty() ? "" : ", ") + label;
  throw ConfigError("unknown experiment kind '" + name + "' (known: " + known + ")");
}

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, label] : kKindNames)
    if (k == kind) return label;
  return "unknown";
}

GridPtr make_grid(const GridSpec& spec, double cutoff_radius) {
  if (spec.dim != 2 && spec.dim != 3) throw ConfigError("[grid] dim must be 2 or 3");
  if (!(spec.side > 0.0)) throw ConfigError("[grid] side must be positive");
  if (spec.points == 0 && spec.modes == 0) return WaveGrid::for_cutoff(spec.dim, spec.side, cutoff_radius);
  const int needed = CutoffProfile::sharp(cutoff_radius).max_axis_index(spec.side);
  const int modes = spec.modes > 0 ? spec.modes : 2 * needed + 1;
  const int points = spec.points > 0 ? spec.points : fft_friendly_size(3 * needed + 1);
  if (modes % 2 == 0) throw ConfigError("[grid] modes must be odd");
  if (points < modes) throw ConfigError("[grid] points must be at least the number of modes per axis");
  return std::make_shared<const WaveGrid>(spec.dim, spec.side, modes, points);
}

DynamicsConfig ExperimentConfig::dynamics_for(double cutoff_radius, double theta) const {
  DynamicsConfig out = dynamics;
  out.cutoff_radius = cutoff_radius;
  out.theta = theta;
  if (dynamics.dt == 0.0) out.dt = dt_scale * default_time_step(out);
  out.validate();
  return out;
}

NoiseParams ExperimentConfig::noise_for(double theta, std::uint32_t stream) const {
  NoiseParams out = noise;
  out.theta = theta;
  out.stream_id = stream;
  return out;
}

ExperimentConfig parse_experiment(const std::string& text) {
  ExperimentConfig cfg;
  cfg.ini = IniConfig::parse(text);
  const IniConfig& ini = cfg.ini;
  cfg.hash = config_hash(text);
  cfg.kind = parse_kind(ini.get_string("experiment", "kind"));
  cfg.name = ini.get_string("experiment", "name", to_string(cfg.kind));
  const long seed = ini.get_int("experiment", "seed");
  if (seed < 0) throw ConfigError("[experiment] seed must be non-negative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  const long ensemble = ini.get_int("experiment", "ensemble", 1);
  if (ensemble < 1) throw ConfigError("[experiment] ensemble must be at least 1");
  cfg.ensemble = static_cast<std::size_t>(ensemble);
  const long stride = ini.get_int("experiment", "snapshot_stride", 0);
  if (stride < 0) throw ConfigError("[experiment] snapshot_stride must be non-negative");
  cfg.snapshot_stride = static_cast<std::size_t>(stride);
  cfg.records_path = ini.get_string("output", "records", "");
  cfg.summary_path = ini.get_string("output", "summary", "");
  cfg.checkpoint_dir = ini.get_string("output", "checkpoint_dir", "checkpoints");

  cfg.grid.dim = static_cast<int>(ini.get_int("grid", "dim", 3));
  cfg.grid.side = ini.get_double("grid", "side", 1.0);
  cfg.grid.points = static_cast<int>(ini.get_int("grid", "points", 0));
  cfg.grid.modes = static_cast<int>(ini.get_int("grid", "modes", 0));
  if (cfg.grid.dim != 2 && cfg.grid.dim != 3) throw ConfigError("[grid] dim must be 2 or 3");
  if (!(cfg.grid.side > 0.0)) throw ConfigError("[grid] side must be positive");
  if (cfg.grid.points < 0 || cfg.grid.modes < 0) throw ConfigError("[grid] points and modes must be non-negative");

  DynamicsConfig& dyn = cfg.dynamics;
  dyn.theta = ini.get_double("dynamics", "theta", 1.0);
  dyn.lambda = ini.get_double("dynamics", "lambda", 1.0);
  dyn.lambda_hat = ini.get_double("dynamics", "lambda_hat", 0.0);
  dyn.mode = parse_coupling_mode(ini.get_string("dynamics", "coupling", "bare"));
  dyn.cutoff_radius = ini.get_double("dynamics", "cutoff", 4.0);
  dyn.cutoff_kind = parse_cutoff_kind(ini.get_string("dynamics", "cutoff_kind", "sharp"));
  dyn.dt = ini.get_double("dynamics", "dt", 0.0);
  cfg.dt_scale = ini.get_double("dynamics", "dt_scale", 1.0);
  dyn.horizon = ini.get_double("dynamics", "horizon", 1.0);
  dyn.mollify_noise = ini.get_bool("dynamics", "mollify_noise", false);
  dyn.noise = ini.get_bool("dynamics", "noise", true);
  if (!(cfg.dt_scale > 0.0)) throw ConfigError("[dynamics] dt_scale must be positive");
  if (dyn.dt != 0.0 && ini.has("dynamics", "dt_scale"))
    throw ConfigError("[dynamics] dt and dt_scale are mutually exclusive");
  dyn.validate();

  cfg.noise.theta = dyn.theta;
  cfg.noise.viscosity = ini.get_double("noise", "viscosity", 1.0);
  cfg.noise.thermal_energy = ini.get_double("noise", "thermal_energy", 1.0);
  cfg.noise.density = ini.get_double("noise", "density", 1.0);
  cfg.noise.seed = cfg.seed;
  cfg.noise.validate();
  return cfg;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str());
}

void reject_unused_keys(const ExperimentConfig& cfg) {
  const auto unused = cfg.ini.unused_keys();
  if (unused.empty()) return;
  std::string msg = "unknown config keys:";
  for (const auto& k : unused) msg += " " + k;
  throw ConfigError(msg);
}

}  // namespace fracns::harness
