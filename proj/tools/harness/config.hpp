#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fracns/dynamics.hpp"
#include "fracns/forcing.hpp"

namespace fracns::harness {

/// Parsed INI text. Every lookup is recorded; keys never looked up are reported by
/// unused_keys() so that typos surface as config errors.
class IniConfig {
 public:
  static IniConfig parse(const std::string& text);
  static IniConfig load(const std::string& path);

  const std::string& text() const { return text_; }
  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const;
  std::vector<std::string> sections() const;

  std::string get_string(const std::string& section, const std::string& key,
                         std::optional<std::string> fallback = std::nullopt) const;
  double get_double(const std::string& section, const std::string& key, std::optional<double> fallback = std::nullopt) const;
  long get_int(const std::string& section, const std::string& key, std::optional<long> fallback = std::nullopt) const;
  bool get_bool(const std::string& section, const std::string& key, std::optional<bool> fallback = std::nullopt) const;
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  std::optional<std::vector<double>> fallback = std::nullopt) const;
  std::vector<long> get_ints(const std::string& section, const std::string& key,
                             std::optional<std::vector<long>> fallback = std::nullopt) const;

  std::vector<std::string> unused_keys() const;

 private:
  std::string text_;
  std::map<std::string, std::map<std::string, std::string>> values_;
  mutable std::set<std::pair<std::string, std::string>> used_;
  const std::string* raw(const std::string& section, const std::string& key) const;
};

enum class ExperimentKind {
  trajectory,
  invariance,
  energy_identity,
  operator_checks,
  triviality_scan,
  diffusivity_scan,
  weak_coupling_2d,
  noise_equivalence,
  vartheta_limit,
  ratio_bounds,
  formulas,
};

ExperimentKind parse_kind(const std::string& name);
std::string to_string(ExperimentKind kind);

struct GridSpec {
  int dim = 3;
  double side = 1.0;
  int points = 0;  ///< 0 picks the smallest alias-free FFT size for the cutoff
  int modes = 0;   ///< 0 derives the mode box from the cutoff
};

GridPtr make_grid(const GridSpec& spec, double cutoff_radius);

/// One experiment: common sections plus the raw INI for kind-specific keys.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::trajectory;
  std::string name;
  std::uint64_t seed = 0;
  std::uint64_t hash = 0;
  std::size_t ensemble = 1;
  std::size_t snapshot_stride = 0;
  std::string records_path;   ///< empty: records go to stdout only
  std::string summary_path;   ///< optional CSV
  std::string checkpoint_dir = "checkpoints";
  GridSpec grid;
  DynamicsConfig dynamics;
  double dt_scale = 1.0;  ///< multiplies the default step when dynamics.dt is 0
  NoiseParams noise;
  IniConfig ini;

  /// The dynamics with the cutoff radius and theta replaced and the step resolved.
  DynamicsConfig dynamics_for(double cutoff_radius, double theta) const;
  NoiseParams noise_for(double theta, std::uint32_t stream) const;
};

/// Parses and validates the common sections; throws ConfigError naming the key.
/// Kind-specific keys are read later by the runner, after which reject_unused_keys()
/// catches misspelled entries.
ExperimentConfig parse_experiment(const std::string& text);
ExperimentConfig load_experiment(const std::string& path);
void reject_unused_keys(const ExperimentConfig& cfg);

}  // namespace fracns::harness
