// fracns: command-line front end of the experiment harness.
//
// Exit codes: 0 success, 1 failed checks or internal error, 2 configuration or
// input error, 3 numerical abort (a checkpoint of the last good state is written).

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "fracns/checkpoint.hpp"
#include "fracns/diffusivity.hpp"
#include "fracns/errors.hpp"
#include "harness/config.hpp"
#include "harness/experiments.hpp"
#include "harness/parallel.hpp"
#include "harness/summary.hpp"

namespace h = fracns::harness;

namespace {

constexpr int kExitFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAbort = 3;

h::RunContext context(bool quiet) {
  h::RunContext ctx;
  ctx.workers = h::worker_count();
  ctx.log = quiet ? nullptr : &std::cerr;
  return ctx;
}

int cmd_run(const std::string& path, const std::string& records, const std::string& summary, bool quiet) {
  h::ExperimentConfig cfg = h::load_experiment(path);
  if (!records.empty()) cfg.records_path = records;
  if (!summary.empty()) cfg.summary_path = summary;
  const auto ctx = context(quiet);
  const auto result = h::run_experiment(cfg, ctx, cfg.records_path.empty() ? &std::cout : nullptr);
  if (!quiet) std::cerr << cfg.name << ": status " << result.status << ", " << result.records.size() << " records\n";
  return 0;
}

int cmd_resume(const std::string& path, const std::string& records, bool quiet) {
  const auto ctx = context(quiet);
  const auto result = h::resume_from_checkpoint(path, ctx, records.empty() ? &std::cout : nullptr, records);
  if (!quiet) std::cerr << "resume: status " << result.status << "\n";
  return 0;
}

int cmd_summarize(const std::vector<std::string>& inputs, const std::string& out_dir) {
  std::vector<h::Json> all;
  for (const auto& p : inputs) {
    auto recs = h::read_records(p);
    all.insert(all.end(), recs.begin(), recs.end());
  }
  const auto tables = h::summarize(all);
  if (tables.empty()) throw fracns::ConfigError("no records found");
  if (out_dir.empty()) {
    for (std::size_t i = 0; i < tables.size(); ++i) {
      if (tables.size() > 1) std::cout << (i ? "\n" : "") << "# " << tables[i].kind << " " << tables[i].record << "\n";
      h::write_csv(std::cout, tables[i]);
    }
    return 0;
  }
  std::filesystem::create_directories(out_dir);
  for (const auto& t : tables) {
    const auto path = std::filesystem::path(out_dir) / (t.kind + "-" + t.record + ".csv");
    std::ofstream out(path);
    if (!out) throw fracns::ConfigError("cannot write " + path.string());
    h::write_csv(out, t);
    std::cerr << "wrote " << path.string() << "\n";
  }
  return 0;
}

int cmd_predict(int d, double lambda_hat) {
  if (d < 2) throw fracns::ConfigError("--d must be at least 2");
  h::Json out;
  out["d"] = d;
  out["lambda_hat"] = lambda_hat;
  out["nu_eff"] = fracns::nu_eff(d, lambda_hat);
  out["basis"] = fracns::nu_eff_is_conjecture(d) ? "conjecture" : "theorem";
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_check_all(bool quiet) {
  const auto ctx = context(true);
  bool all = true;
  for (const auto& text : h::builtin_check_configs()) {
    const h::ExperimentConfig cfg = h::parse_experiment(text);
    const auto result = h::run_experiment(cfg, ctx);
    for (const auto& r : result.records) {
      const bool pass = r["stats"]["pass"].get<bool>();
      all = all && pass;
      if (!quiet || !pass) {
        std::printf("%s  %-32s value=%.3e tol=%.1e  %s\n", pass ? "PASS" : "FAIL",
                    r["params"]["check"].get<std::string>().c_str(), r["stats"]["value"].get<double>(),
                    r["stats"]["tolerance"].get<double>(), r["stats"]["detail"].get<std::string>().c_str());
      }
    }
  }
  std::printf("check all: %s\n", all ? "PASS" : "FAIL");
  return all ? 0 : kExitFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fracns: truncated fractional stochastic Navier-Stokes experiments.\n"
               "Worker threads: FRACNS_WORKERS (default: hardware concurrency)."};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress progress output on stderr");

  std::string config, records, summary;
  auto* run = app.add_subcommand("run", "run the experiment described by an INI config");
  run->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("--records", records, "NDJSON output (default: [output] records, else stdout)");
  run->add_option("--summary", summary, "CSV summary (default: [output] summary, else none)");

  std::string checkpoint, resume_records;
  auto* resume = app.add_subcommand("resume", "continue a checkpointed trajectory to its horizon");
  resume->add_option("checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  resume->add_option("--records", resume_records, "NDJSON output (default: stdout)");

  std::vector<std::string> inputs;
  std::string out_dir;
  auto* summarize = app.add_subcommand("summarize", "flatten NDJSON records into CSV tables");
  summarize->add_option("records", inputs, "NDJSON record files")->required()->check(CLI::ExistingFile);
  summarize->add_option("--out", out_dir, "directory for <kind>-<record>.csv (default: stdout)");

  int dim = 3;
  double lambda_hat = 0.0;
  auto* predict = app.add_subcommand("predict", "closed-form predictions");
  predict->require_subcommand(1);
  auto* nu = predict->add_subcommand("nu-eff", "effective viscosity for dimension d and coupling lambda-hat");
  nu->add_option("--d", dim, "dimension")->required();
  nu->add_option("--lambda-hat", lambda_hat, "coupling lambda-hat")->required();

  auto* check = app.add_subcommand("check", "built-in verification suites");
  check->require_subcommand(1);
  auto* check_all = check->add_subcommand("all", "exact identities, generator structure and formulas");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config, records, summary, quiet);
    if (*resume) return cmd_resume(checkpoint, resume_records, quiet);
    if (*summarize) return cmd_summarize(inputs, out_dir);
    if (*nu) return cmd_predict(dim, lambda_hat);
    if (*check_all) return cmd_check_all(quiet);
  } catch (const fracns::NumericalAbort& e) {
    std::cerr << "numerical abort at step " << e.step() << ": " << e.what() << "\n";
    return kExitAbort;
  } catch (const fracns::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fracns::AliasingError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fracns::ShapeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fracns::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
  return kExitFailed;
}
