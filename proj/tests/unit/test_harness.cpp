#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <sys/wait.h>
#include <unistd.h>

#include "fracns/errors.hpp"
#include "harness/config.hpp"
#include "harness/experiments.hpp"
#include "harness/parallel.hpp"
#include "harness/records.hpp"
#include "harness/summary.hpp"

namespace h = fracns::harness;
namespace fs = std::filesystem;
using h::Json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fracns-harness-" + std::to_string(::getpid())) / name;
  fs::create_directories(p);
  return p;
}

std::string trajectory_ini(const fs::path& dir, int every) {
  std::ostringstream s;
  s << "[experiment]\nkind = trajectory\nname = traj\nseed = 99\n"
    << "[grid]\ndim = 3\nside = 1\n"
    << "[dynamics]\ntheta = 1\nlambda = 1\ncoupling = bare\ncutoff = 4\nhorizon = 0.02\n"
    << "[trajectory]\ncheckpoint_every = " << every << "\n"
    << "[output]\ncheckpoint_dir = " << (dir / "ckpt").string() << "\n";
  return s.str();
}

h::RunContext quiet(std::size_t workers = 1) {
  h::RunContext ctx;
  ctx.workers = workers;
  return ctx;
}

Json only(const std::vector<Json>& recs, const std::string& type) {
  for (const auto& r : recs)
    if (r["record"] == type) return r;
  ADD_FAILURE() << "no " << type << " record";
  return Json();
}

// Statistic values only; wall clock differs between runs.
std::string stat_values(const std::vector<Json>& recs) {
  std::string s;
  for (const auto& r : recs) s += r["params"].dump() + r["stats"].dump() + r["status"].dump() + "\n";
  return s;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(FRACNS_CLI) + " -q " + args + " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST(IniConfig, TypedGettersAndLists) {
  const auto ini = h::IniConfig::parse("[a]\nx = 2.5\nn = 7\nflag = true\nlist = 1, 2.5 ,3\nints = 4,5\n");
  EXPECT_DOUBLE_EQ(ini.get_double("a", "x"), 2.5);
  EXPECT_EQ(ini.get_int("a", "n"), 7);
  EXPECT_TRUE(ini.get_bool("a", "flag"));
  EXPECT_EQ(ini.get_doubles("a", "list"), (std::vector<double>{1.0, 2.5, 3.0}));
  EXPECT_EQ(ini.get_ints("a", "ints"), (std::vector<long>{4, 5}));
  EXPECT_DOUBLE_EQ(ini.get_double("a", "missing", 1.5), 1.5);
  EXPECT_THROW(ini.get_double("a", "missing"), fracns::ConfigError);
  EXPECT_THROW(ini.get_int("a", "x"), fracns::ConfigError);
  EXPECT_THROW(ini.get_double("a", "flag"), fracns::ConfigError);
}

TEST(IniConfig, UnusedKeysAreTracked) {
  const auto ini = h::IniConfig::parse("[a]\nx = 1\ny = 2\n");
  ini.get_double("a", "x");
  const auto unused = ini.unused_keys();
  ASSERT_EQ(unused.size(), 1u);
  EXPECT_NE(unused[0].find('y'), std::string::npos);
}

TEST(ExperimentConfig, RejectsBadInput) {
  const std::string base = "[experiment]\nkind = formulas\nname = f\nseed = 1\n";
  EXPECT_NO_THROW(h::make_experiment(h::parse_experiment(base)));
  EXPECT_THROW(h::parse_experiment("[experiment]\nkind = nope\nname = f\nseed = 1\n"), fracns::ConfigError);
  EXPECT_THROW(h::make_experiment(h::parse_experiment(base + "[formulas]\nconsistency_tupels = 3\n")),
               fracns::ConfigError);
  EXPECT_THROW(h::parse_experiment(base + "[dynamics]\ndt = 0.001\ndt_scale = 2\n"), fracns::ConfigError);
  EXPECT_THROW(h::parse_experiment(base + "[dynamics]\ntheta = -1\n"), fracns::ConfigError);
  EXPECT_THROW(h::parse_experiment(base + "[experiment]\nseed = x\n"), fracns::ConfigError);
}

TEST(ExperimentConfig, HashFollowsText) {
  const std::string a = "[experiment]\nkind = formulas\nname = f\nseed = 1\n";
  EXPECT_EQ(h::parse_experiment(a).hash, h::parse_experiment(a).hash);
  EXPECT_NE(h::parse_experiment(a).hash, h::parse_experiment(a + "\n; comment\n").hash);
}

TEST(Records, LeadingKeysInFixedOrder) {
  const auto cfg = h::parse_experiment("[experiment]\nkind = formulas\nname = f\nseed = 42\n");
  const auto recs = h::run_experiment(cfg, quiet()).records;
  ASSERT_FALSE(recs.empty());
  for (const auto& r : recs) {
    std::vector<std::string> keys;
    for (auto it = r.begin(); it != r.end(); ++it) keys.push_back(it.key());
    const std::vector<std::string> expected{"record", "experiment", "kind",   "config_hash", "build",
                                            "seed",   "params",     "stats",  "status",      "wall_clock_s"};
    EXPECT_EQ(keys, expected);
    EXPECT_EQ(r["seed"], 42);
    EXPECT_EQ(r["config_hash"], h::hex64(cfg.hash));
  }
}

TEST(Records, NdjsonRoundTrip) {
  const auto dir = scratch("roundtrip");
  auto cfg = h::parse_experiment("[experiment]\nkind = formulas\nname = f\nseed = 1\n");
  cfg.records_path = (dir / "r.ndjson").string();
  const auto recs = h::run_experiment(cfg, quiet()).records;
  const auto back = h::read_records(cfg.records_path);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(back[i].dump(), recs[i].dump());
}

TEST(Summary, SchemaAndNulls) {
  auto cfg = h::parse_experiment("[experiment]\nkind = formulas\nname = f\nseed = 1\n");
  std::vector<Json> recs;
  for (int i = 0; i < 2; ++i) {
    Json r = h::make_record(cfg, "point");
    r["params"] = Json{{"lambda_hat", i}};
    r["stats"] = Json{{"nu_hat", i ? Json(1.25) : Json(nullptr)}, {"list", Json::array({1, 2})}, {"note", "a,b"}};
    h::finish_record(r, "ok", 0.0);
    recs.push_back(r);
  }
  const auto tables = h::summarize(recs);
  ASSERT_EQ(tables.size(), 1u);
  std::ostringstream os;
  h::write_csv(os, tables[0]);
  std::istringstream is(os.str());
  std::string header, row0, row1;
  std::getline(is, header);
  std::getline(is, row0);
  std::getline(is, row1);
  EXPECT_EQ(header, "experiment,config_hash,seed,status,lambda_hat,nu_hat,list,note");
  EXPECT_NE(row0.find(",null,"), std::string::npos);
  EXPECT_NE(row1.find(",1.25,"), std::string::npos);
  EXPECT_NE(row1.find(",1 2,"), std::string::npos);
  EXPECT_NE(row1.find("\"a,b\""), std::string::npos);
}

TEST(Parallel, OrderedResultsAndLowestException) {
  const auto sq = h::parallel_map<int>(50, 3, [](std::size_t i) { return static_cast<int>(i * i); });
  for (std::size_t i = 0; i < sq.size(); ++i) EXPECT_EQ(sq[i], static_cast<int>(i * i));
  try {
    h::parallel_map<int>(20, 4, [](std::size_t i) -> int {
      if (i == 5 || i == 11) throw std::runtime_error(std::to_string(i));
      return 0;
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "5");
  }
}

TEST(Parallel, WorkerCountFromEnvironment) {
  ::setenv("FRACNS_WORKERS", "3", 1);
  EXPECT_EQ(h::worker_count(), 3u);
  ::setenv("FRACNS_WORKERS", "zero", 1);
  EXPECT_THROW(h::worker_count(), fracns::ConfigError);
  ::unsetenv("FRACNS_WORKERS");
  EXPECT_GE(h::worker_count(), 1u);
}

TEST(Harness, ResumeMatchesStraightRun) {
  const auto dir = scratch("resume");
  const auto straight = h::run_experiment(h::parse_experiment(trajectory_ini(dir / "a", 0)), quiet()).records;
  const auto chunked = h::run_experiment(h::parse_experiment(trajectory_ini(dir / "b", 7)), quiet()).records;
  const Json a = only(straight, "trajectory"), b = only(chunked, "trajectory");
  EXPECT_EQ(a["stats"]["state_digest"], b["stats"]["state_digest"]);
  ASSERT_FALSE(b["stats"]["checkpoints"].empty());
  const std::string mid = b["stats"]["checkpoints"][0].get<std::string>();
  const auto resumed = h::resume_from_checkpoint(mid, quiet()).records;
  const Json c = only(resumed, "trajectory");
  EXPECT_TRUE(c["params"]["resumed"].get<bool>());
  EXPECT_EQ(c["params"]["start_step"], 7);
  EXPECT_EQ(c["stats"]["steps"], a["stats"]["steps"]);
  EXPECT_EQ(c["stats"]["state_digest"], a["stats"]["state_digest"]);
  EXPECT_EQ(c["stats"]["energy"].get<double>(), a["stats"]["energy"].get<double>());
}

TEST(Harness, StatisticsIndependentOfWorkerCount) {
  const std::string ini =
      "[experiment]\nkind = invariance\nname = inv\nseed = 5\nensemble = 6\n"
      "[grid]\ndim = 2\nside = 1\n"
      "[dynamics]\ntheta = 1\nlambda = 1\ncoupling = bare\ncutoff = 4\nhorizon = 0.05\n";
  const auto cfg = h::parse_experiment(ini);
  const auto one = h::run_experiment(cfg, quiet(1)).records;
  const auto two = h::run_experiment(cfg, quiet(2)).records;
  const auto three = h::run_experiment(cfg, quiet(3)).records;
  EXPECT_EQ(stat_values(one), stat_values(two));
  EXPECT_EQ(stat_values(one), stat_values(three));
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  write_file(dir / "ok.ini", "[experiment]\nkind = formulas\nname = f\nseed = 1\n");
  write_file(dir / "typo.ini", "[experiment]\nkind = formulas\nname = f\nseed = 1\nsede = 2\n");
  write_file(dir / "alias.ini",
             "[experiment]\nkind = trajectory\nname = t\nseed = 1\n[grid]\ndim = 3\npoints = 8\n"
             "[dynamics]\ncutoff = 4\nhorizon = 0.01\n");
  write_file(dir / "blowup.ini",
             "[experiment]\nkind = trajectory\nname = boom\nseed = 1\n[grid]\ndim = 2\n"
             "[dynamics]\ntheta = 0.5\nlambda = 50\ncoupling = bare\ncutoff = 4\ndt = 0.05\nhorizon = 20\n"
             "[output]\ncheckpoint_dir = " + (dir / "ck").string() + "\n");
  write_file(dir / "bad.ckpt", "not a checkpoint");
  EXPECT_EQ(cli("run " + (dir / "ok.ini").string() + " --records " + (dir / "ok.ndjson").string()), 0);
  EXPECT_EQ(cli("run " + (dir / "typo.ini").string()), 2);
  EXPECT_EQ(cli("run " + (dir / "alias.ini").string()), 2);
  EXPECT_EQ(cli("run " + (dir / "missing.ini").string()), 2);
  EXPECT_EQ(cli("resume " + (dir / "bad.ckpt").string()), 2);
  EXPECT_EQ(cli("run " + (dir / "blowup.ini").string()), 3);
  bool wrote_abort = false;
  if (fs::exists(dir / "ck"))
    for (const auto& e : fs::directory_iterator(dir / "ck"))
      wrote_abort = wrote_abort || e.path().filename().string().find("abort") != std::string::npos;
  EXPECT_TRUE(wrote_abort);
  EXPECT_EQ(cli("summarize " + (dir / "ok.ndjson").string()), 0);
  EXPECT_EQ(cli("predict nu-eff --d 2 --lambda-hat 1"), 0);
  EXPECT_EQ(cli("predict nu-eff --d 1 --lambda-hat 1"), 2);
}
