#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "config.hpp"
#include "records.hpp"

namespace fracns::harness {

struct RunContext {
  std::size_t workers = 1;
  std::ostream* log = nullptr;  ///< progress lines; null for silence
};

class Experiment {
 public:
  virtual ~Experiment() = default;
  /// Writes records through `out` and returns the overall status string.
  virtual std::string run(const RunContext& ctx, RecordWriter& out) = 0;
};

/// Reads the kind-specific keys and rejects unknown ones; throws ConfigError.
std::unique_ptr<Experiment> make_experiment(const ExperimentConfig& cfg);

struct RunSummary {
  std::string status;
  std::vector<Json> records;
};

/// make_experiment + run, writing records and the optional CSV summary to the
/// configured paths. NumericalAbort propagates after its checkpoint is written.
RunSummary run_experiment(const ExperimentConfig& cfg, const RunContext& ctx, std::ostream* echo = nullptr);

/// Continues the trajectory stored in a checkpoint to its horizon.
RunSummary resume_from_checkpoint(const std::string& path, const RunContext& ctx, std::ostream* echo = nullptr,
                                  const std::string& records_path = "");

/// Configs of the exact-identity suite run by `check all`.
std::vector<std::string> builtin_check_configs();

}  // namespace fracns::harness
