#include "experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "fracns/chaos.hpp"
#include "fracns/checkpoint.hpp"
#include "fracns/covariance.hpp"
#include "fracns/diffusivity.hpp"
#include "fracns/errors.hpp"
#include "fracns/operators.hpp"
#include "fracns/ratio_bounds.hpp"
#include "fracns/statistics.hpp"
#include "fracns/vartheta.hpp"
#include "parallel.hpp"
#include "summary.hpp"

namespace fracns::harness {

namespace {

constexpr double kPi = std::numbers::pi;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void log_line(const RunContext& ctx, const std::string& msg) {
  if (ctx.log) *ctx.log << msg << std::endl;
}

std::string state_digest(const SpectralField& u) {
  const auto& d = u.data();
  return hex64(config_hash(std::string_view(reinterpret_cast<const char*>(d.data()), d.size() * sizeof(cplx))));
}

Json wavevector_json(const Index& n, int dim) {
  Json a = Json::array();
  for (int i = 0; i < dim; ++i) a.push_back(n[i]);
  return a;
}

/// Coordinates of u(k) along the divergence-free basis at k.
std::vector<cplx> basis_coordinates(const SpectralField& u, std::size_t idx) {
  const auto& g = u.grid();
  std::vector<cplx> out;
  for (const Vec& b : divfree_basis(g.wavevector(idx), g.dim())) {
    cplx s = 0.0;
    for (int l = 0; l < g.dim(); ++l) s += b[l] * u(l, idx);
    out.push_back(s);
  }
  return out;
}

/// Real test fields e cos(2 pi k.x), e sin(2 pi k.x) for unit integer k along each axis
/// and every divergence-free direction e at k.
std::vector<SpectralField> unit_shell_test_fields(const GridPtr& g) {
  std::vector<SpectralField> out;
  for (int axis = 0; axis < g->dim(); ++axis) {
    Index n{0, 0, 0};
    n[axis] = 1;
    const std::size_t idx = g->index(n);
    for (const Vec& e : divfree_basis(g->wavevector(idx), g->dim()))
      for (const cplx amp : {cplx(0.5, 0.0), cplx(0.0, -0.5)}) {
        SpectralField f(g);
        for (int l = 0; l < g->dim(); ++l) f.set(l, idx, amp * g->volume() * e[l]);
        out.push_back(std::move(f));
      }
  }
  return out;
}

/// Self-contained trajectory config for one ensemble member; stored in checkpoints.
std::string member_config_text(const ExperimentConfig& cfg, const WaveGrid& grid, const DynamicsConfig& dyn,
                               std::uint32_t stream, const std::string& trajectory_extra) {
  std::ostringstream s;
  s << "[experiment]\nkind = trajectory\nname = " << cfg.name << "-member-" << stream << "\nseed = " << cfg.seed;
  if (cfg.snapshot_stride > 0) s << "\nsnapshot_stride = " << cfg.snapshot_stride;
  s << "\n\n[grid]\ndim = " << grid.dim() << "\nside = " << fmt(grid.side()) << "\nmodes = " << grid.modes_per_axis()
    << "\npoints = " << grid.points_per_axis() << "\n\n[dynamics]\ntheta = " << fmt(dyn.theta)
    << "\nlambda = " << fmt(dyn.lambda) << "\nlambda_hat = " << fmt(dyn.lambda_hat)
    << "\ncoupling = " << to_string(dyn.mode) << "\ncutoff = " << fmt(dyn.cutoff_radius)
    << "\ncutoff_kind = " << to_string(dyn.cutoff_kind) << "\ndt = " << fmt(effective_time_step(dyn))
    << "\nhorizon = " << fmt(dyn.horizon) << "\nmollify_noise = " << (dyn.mollify_noise ? "true" : "false")
    << "\nnoise = " << (dyn.noise ? "true" : "false") << "\n\n[noise]\nviscosity = " << fmt(cfg.noise.viscosity)
    << "\nthermal_energy = " << fmt(cfg.noise.thermal_energy) << "\ndensity = " << fmt(cfg.noise.density)
    << "\n\n[trajectory]\nstream = " << stream << "\n" << trajectory_extra << "\n[output]\ncheckpoint_dir = " << cfg.checkpoint_dir << "\n";
  return s.str();
}

std::string save_checkpoint_file(const std::string& dir, const std::string& file, const Checkpoint& ck) {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / file).string();
  save_checkpoint(path, ck);
  return path;
}

/// One trajectory of an experiment with abort handling: on a non-finite state the
/// last good state is checkpointed and NumericalAbort is rethrown naming the file.
class Member {
 public:
  Member(const ExperimentConfig& cfg, GridPtr grid, const DynamicsConfig& dyn, std::uint32_t stream,
         InitialKind initial = InitialKind::white_noise)
      : cfg_(cfg),
        grid_(std::move(grid)),
        dyn_(dyn),
        stream_(stream),
        traj_(grid_, dyn, cfg.noise_for(dyn.theta, stream), initial) {
    traj_.set_keep_last_good(true);
  }
  Member(const ExperimentConfig& cfg, GridPtr grid, const DynamicsConfig& dyn, std::uint32_t stream,
         SpectralField state, std::uint64_t step)
      : cfg_(cfg),
        grid_(std::move(grid)),
        dyn_(dyn),
        stream_(stream),
        traj_(grid_, dyn, cfg.noise_for(dyn.theta, stream), std::move(state), step) {
    traj_.set_keep_last_good(true);
  }

  Trajectory& trajectory() { return traj_; }
  /// Extra [trajectory] lines stored in this member's checkpoints.
  void set_trajectory_extra(std::string lines) { extra_ = std::move(lines); }

  void advance(std::uint64_t steps, const StepObserver& obs = {}) {
    try {
      traj_.advance(steps, obs);
    } catch (const NumericalAbort& e) {
      const std::string path = save(std::to_string(e.step()) + "-abort");
      throw NumericalAbort(std::string(e.what()) + "; last good state checkpointed to " + path, e.step());
    }
  }

  std::string save(const std::string& tag, const std::string& explicit_path = "") const {
    Checkpoint ck;
    ck.config_hash = cfg_.hash;
    ck.config_text = member_config_text(cfg_, *grid_, dyn_, stream_, extra_);
    ck.seed = cfg_.seed;
    ck.stream = stream_;
    ck.step = traj_.step_index();
    ck.state = traj_.state();
    if (!explicit_path.empty()) {
      const auto parent = std::filesystem::path(explicit_path).parent_path();
      if (!parent.empty()) std::filesystem::create_directories(parent);
      save_checkpoint(explicit_path, ck);
      return explicit_path;
    }
    return save_checkpoint_file(cfg_.checkpoint_dir,
                                cfg_.name + "-stream" + std::to_string(stream_) + "-step" + tag + ".ckpt", ck);
  }

 private:
  const ExperimentConfig& cfg_;
  GridPtr grid_;
  DynamicsConfig dyn_;
  std::uint32_t stream_;
  Trajectory traj_;
  std::string extra_;
};

struct Check {
  std::string name;
  double value;
  double tolerance;
  std::string detail;
};

std::string emit_checks(const ExperimentConfig& cfg, const std::vector<Check>& checks, RecordWriter& out,
                        Clock::time_point t0) {
  bool all = true;
  for (const auto& c : checks) {
    const bool pass = std::isfinite(c.value) && c.value <= c.tolerance;
    all = all && pass;
    Json r = make_record(cfg, "check");
    r["params"] = Json{{"check", c.name}};
    r["stats"] = Json{{"value", c.value}, {"tolerance", c.tolerance}, {"pass", pass}, {"detail", c.detail}};
    finish_record(r, pass ? "ok" : "failed", seconds_since(t0));
    out.write(r);
  }
  return all ? "ok" : "failed";
}

double rel_diff(cplx a, cplx b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s > 0.0 ? std::abs(a - b) / s : 0.0;
}

// ---------------------------------------------------------------- trajectory

class TrajectoryExperiment : public Experiment {
 public:
  explicit TrajectoryExperiment(const ExperimentConfig& cfg) : cfg_(cfg) {
    const auto& ini = cfg.ini;
    stream_ = static_cast<std::uint32_t>(ini.get_int("trajectory", "stream", 0));
    every_ = static_cast<std::uint64_t>(ini.get_int("trajectory", "checkpoint_every", 0));
    final_path_ = ini.get_string("trajectory", "checkpoint", "");
    const std::string initial = ini.get_string("trajectory", "initial", "white_noise");
    if (initial == "white_noise")
      initial_ = InitialKind::white_noise;
    else if (initial == "zero")
      initial_ = InitialKind::zero;
    else
      throw ConfigError("[trajectory] initial must be white_noise or zero");
    dyn_ = cfg.dynamics_for(cfg.dynamics.cutoff_radius, cfg.dynamics.theta);
    grid_ = make_grid(cfg.grid, dyn_.cutoff_radius);
    check_dealiasing(*grid_, dyn_.cutoff());
  }

  void resume_from(Checkpoint ck) { resume_ = std::move(ck); }

  std::string run(const RunContext& ctx, RecordWriter& out) override {
    const auto t0 = Clock::now();
    std::unique_ptr<Member> m;
    std::uint64_t start_step = 0;
    if (resume_) {
      if (!resume_->state.grid().same_shape(*grid_)) throw CheckpointError("checkpoint grid does not match its config");
      start_step = resume_->step;
      m = std::make_unique<Member>(cfg_, grid_, dyn_, stream_, resume_->state, resume_->step);
    } else {
      m = std::make_unique<Member>(cfg_, grid_, dyn_, stream_, initial_);
    }
    std::string extra;
    if (every_ > 0) extra += "checkpoint_every = " + std::to_string(every_) + "\n";
    if (!final_path_.empty()) extra += "checkpoint = " + final_path_ + "\n";
    m->set_trajectory_extra(extra);
    Trajectory& tr = m->trajectory();
    tr.integrator().set_always_evaluate(true);
    const std::uint64_t horizon = tr.horizon_steps();
    std::vector<std::string> saved;
    auto snapshot = [&](const SpectralField& u, std::uint64_t step) {
      Json r = make_record(cfg_, "snapshot");
      r["params"] = Json{{"stream", stream_}, {"step", step}};
      r["stats"] = Json{{"time", static_cast<double>(step) * tr.integrator().dt()},
                        {"energy", inner(u, u)},
                        {"state_digest", state_digest(u)}};
      finish_record(r, "ok", seconds_since(t0));
      out.write(r);
    };
    while (tr.step_index() < horizon) {
      std::uint64_t chunk = horizon - tr.step_index();
      if (every_ > 0) chunk = std::min(chunk, every_ - tr.step_index() % every_);
      if (cfg_.snapshot_stride > 0) {
        const std::uint64_t s = cfg_.snapshot_stride;
        chunk = std::min(chunk, s - tr.step_index() % s);
        if (tr.step_index() % s == 0) snapshot(tr.state(), tr.step_index());
      }
      m->advance(chunk);
      if (every_ > 0 && tr.step_index() % every_ == 0 && tr.step_index() < horizon)
        saved.push_back(m->save(std::to_string(tr.step_index())));
    }
    if (cfg_.snapshot_stride > 0 && horizon % cfg_.snapshot_stride == 0) snapshot(tr.state(), tr.step_index());
    const std::string final_ckpt = m->save("final", final_path_);
    log_line(ctx, cfg_.name + ": reached step " + std::to_string(tr.step_index()));

    Json r = make_record(cfg_, "trajectory");
    r["params"] = Json{{"stream", stream_},
                       {"cutoff", dyn_.cutoff_radius},
                       {"theta", dyn_.theta},
                       {"dt", tr.integrator().dt()},
                       {"coupling", tr.integrator().coupling()},
                       {"start_step", start_step},
                       {"resumed", resume_.has_value()}};
    Json ck = Json::array();
    for (const auto& p : saved) ck.push_back(p);
    r["stats"] = Json{{"steps", tr.step_index()},
                      {"time", tr.time()},
                      {"energy", inner(tr.state(), tr.state())},
                      {"max_pairing", tr.max_pairing()},
                      {"cfl_violations", tr.cfl_violations()},
                      {"state_digest", state_digest(tr.state())},
                      {"checkpoints", ck},
                      {"final_checkpoint", final_ckpt}};
    finish_record(r, "ok", seconds_since(t0));
    out.write(r);
    return "ok";
  }

 private:
  const ExperimentConfig& cfg_;
  std::uint32_t stream_ = 0;
  std::uint64_t every_ = 0;
  std::string final_path_;
  InitialKind initial_ = InitialKind::white_noise;
  DynamicsConfig dyn_;
  GridPtr grid_;
  std::optional<Checkpoint> resume_;
};

// ---------------------------------------------------------------- energy identity

class EnergyIdentityExperiment : public Experiment {
 public:
  explicit EnergyIdentityExperiment(const ExperimentConfig& cfg) : cfg_(cfg) {
    const auto& ini = cfg.ini;
    fields_ = ini.get_int("energy_identity", "fields", 100);
    run_steps_ = ini.get_int("energy_identity", "run_steps", 200);
    leray_samples_ = ini.get_int("energy_identity", "leray_samples", 200);
    oracle_points_ = static_cast<int>(ini.get_int("energy_identity", "oracle_points", 8));
    oracle_cutoff_ = ini.get_double("energy_identity", "oracle_cutoff", 2.0);
    oracle_fields_ = ini.get_int("energy_identity", "oracle_fields", 4);
    if (fields_ < 1 || run_steps_ < 1 || leray_samples_ < 1 || oracle_fields_ < 1)
      throw ConfigError("[energy_identity] counts must be positive");
    dyn_ = cfg.dynamics_for(cfg.dynamics.cutoff_radius, cfg.dynamics.theta);
    grid_ = make_grid(cfg.grid, dyn_.cutoff_radius);
    check_dealiasing(*grid_, dyn_.cutoff());
  }

  std::string run(const RunContext& ctx, RecordWriter& out) override {
    const auto t0 = Clock::now();
    std::vector<Check> checks;
    std::mt19937_64 rng(cfg_.seed);
    std::normal_distribution<double> normal;

    double idem = 0.0, rank = 0.0, sym = 0.0;
    for (long s = 0; s < leray_samples_; ++s)
      for (int d : {2, 3}) {
        Vec k{normal(rng), normal(rng), d == 3 ? normal(rng) : 0.0};
        const Mat P = leray_multiplier(k, d);
        double trace = 0.0;
        for (int i = 0; i < d; ++i) {
          trace += P[i][i];
          for (int j = 0; j < d; ++j) {
            double pp = 0.0;
            for (int m = 0; m < d; ++m) pp += P[i][m] * P[m][j];
            idem = std::max(idem, std::abs(pp - P[i][j]));
            sym = std::max(sym, std::abs(P[i][j] - P[j][i]));
          }
        }
        rank = std::max(rank, std::abs(trace - (d - 1)));
      }
    checks.push_back({"leray_idempotence", idem, 1e-12, "max |P^2 - P| over random k, d = 2, 3"});
    checks.push_back({"leray_rank", rank, 1e-12, "max |trace P - (d - 1)|"});
    checks.push_back({"leray_symmetry", sym, 1e-15, "max |P - P^T|"});

    Nonlinearity B(grid_, dyn_.cutoff());
    double worst = 0.0;
    NoiseParams np = cfg_.noise_for(dyn_.theta, 0);
    for (long f = 0; f < fields_; ++f) {
      const SpectralField u = sample_divfree_white_noise(grid_, np, static_cast<std::uint64_t>(f));
      const SpectralField b = B(u);
      const double scale = norm(u) * norm(b);
      worst = std::max(worst, scale > 0.0 ? std::abs(inner(u, b)) / scale : 0.0);
    }
    checks.push_back({"energy_identity_random_fields", worst, 1e-10,
                      "max |<u, B(u)>| / (|u| |B(u)|) over " + std::to_string(fields_) + " white-noise fields"});

    Member m(cfg_, grid_, dyn_, 1);
    m.trajectory().integrator().set_always_evaluate(true);
    double step_worst = 0.0;
    m.advance(static_cast<std::uint64_t>(run_steps_),
              [&](const StepView& v) { step_worst = std::max(step_worst, v.diagnostics.pairing); });
    checks.push_back({"energy_identity_integrator", step_worst, 1e-10,
                      "max per-step pairing over " + std::to_string(run_steps_) + " steps"});

    const CutoffProfile oc = CutoffProfile::sharp(oracle_cutoff_);
    const int radius = oc.max_axis_index(cfg_.grid.side);
    auto og = std::make_shared<const WaveGrid>(cfg_.grid.dim, cfg_.grid.side, 2 * radius + 1, oracle_points_);
    check_dealiasing(*og, oc);
    Nonlinearity Bo(og, oc);
    double oracle = 0.0;
    for (long f = 0; f < oracle_fields_; ++f) {
      const SpectralField u = sample_divfree_white_noise(og, np, 1000 + static_cast<std::uint64_t>(f));
      oracle = std::max(oracle, max_relative_difference(Bo(u), direct_convolution_nonlinearity(u, oc)));
    }
    checks.push_back({"convolution_oracle", oracle, 1e-10,
                      "pseudo-spectral vs direct convolution, grid " + std::to_string(oracle_points_) + ", cutoff " +
                          fmt(oracle_cutoff_)});
    log_line(ctx, cfg_.name + ": identity checks done");
    return emit_checks(cfg_, checks, out, t0);
  }

 private:
  const ExperimentConfig& cfg_;
  long fields_, run_steps_, leray_samples_, oracle_fields_;
  int oracle_points_;
  double oracle_cutoff_;
  DynamicsConfig dyn_;
  GridPtr grid_;
};

// ---------------------------------------------------------------- generator structure

class OperatorChecksExperiment : public Experiment {
 public:
  explicit OperatorChecksExperiment(const ExperimentConfig& cfg) : cfg_(cfg) {
    vectors_ = cfg.ini.get_int("operator_checks", "vectors", 6);
    max_level_ = static_cast<int>(cfg.ini.get_int("operator_checks", "max_level", 3));
    if (vectors_ < 1) throw ConfigError("[operator_checks] vectors must be positive");
    if (max_level_ < 1 || max_level_ > 3) throw ConfigError("[operator_checks] max_level must be 1..3");
  }

  std::string run(const RunContext& ctx, RecordWriter& out) override {
    const auto t0 = Clock::now();
    struct Setup {
      ChaosBoxPtr box;
      CutoffProfile cutoff;
    };
    const std::vector<Setup> setups = {
        {std::make_shared<const ChaosBox>(3, 1.0, 1), CutoffProfile::sharp(1.8)},
        {std::make_shared<const ChaosBox>(3, 1.0, 1), CutoffProfile::smooth(1.9)},
        {std::make_shared<const ChaosBox>(2, 1.5, 2), CutoffProfile::sharp(1.4)},
    };
    const int L = max_level_;
    auto multi = [&](const ChaosBoxPtr& box, std::uint64_t seed) {
      ChaosVector v(box, L);
      for (int n = 0; n <= L; ++n) v += random_chaos_vector(box, L, n, seed, static_cast<std::uint32_t>(n));
      return v;
    };
    double lsym = 0.0, dual = 0.0, anti = 0.0, grading = 0.0, level0 = 0.0;
    std::uint64_t seed = cfg_.seed;
    for (const auto& s : setups) {
      auto G = [&](const ChaosVector& v) {
        ChaosVector o = apply_G_plus(v, s.cutoff, 1.0, BoxOverflow::error, v.n_max());
        o += apply_G_minus(v, s.cutoff);
        return o;
      };
      for (long t = 0; t < vectors_; ++t) {
        const ChaosVector a = multi(s.box, ++seed), b = multi(s.box, ++seed);
        lsym = std::max(lsym, rel_diff(fock_inner(apply_L_theta(a, cfg_.dynamics.theta), b),
                                       fock_inner(a, apply_L_theta(b, cfg_.dynamics.theta))));
        anti = std::max(anti, rel_diff(fock_inner(G(a), b), -fock_inner(a, G(b))));
        for (int n = 1; n < L; ++n) {
          const ChaosVector phi = random_chaos_vector(s.box, n, n, ++seed, 1);
          const ChaosVector psi = random_chaos_vector(s.box, n + 1, n + 1, ++seed, 2);
          dual = std::max(dual, rel_diff(fock_inner(apply_G_plus(phi, s.cutoff), psi),
                                         -fock_inner(phi, apply_G_minus(psi, s.cutoff))));
        }
      }
      for (int n = 0; n <= L; ++n) {
        const ChaosVector v = random_chaos_vector(s.box, L, n, ++seed, 0);
        const ChaosVector up = apply_G_plus(v, s.cutoff, 1.0, BoxOverflow::error, L);
        const ChaosVector down = apply_G_minus(v, s.cutoff);
        const double scale = std::max(fock_norm(up) + fock_norm(down), 1e-300);
        for (int m = 0; m <= L; ++m) {
          ChaosVector um = up, dm = down;
          um.keep_only(m);
          dm.keep_only(m);
          if (m != n + 1) grading = std::max(grading, fock_norm(um) / scale);
          if (m != n - 1) grading = std::max(grading, fock_norm(dm) / scale);
        }
        if (n == 0) level0 = std::max(level0, fock_norm(up) + fock_norm(down));
      }
    }
    std::vector<Check> checks = {
        {"L_theta_symmetry", lsym, 1e-10, "relative, random vectors with levels 0.." + std::to_string(L)},
        {"generator_duality", dual, 1e-10, "<G_+ phi, psi> = -<phi, G_- psi>, levels 1.." + std::to_string(L)},
        {"generator_antisymmetry", anti, 1e-10, "<G a, b> = -<a, G b> on mixed-level vectors"},
        {"chaos_grading", grading, 0.0, "off-grade output norm relative to output norm"},
        {"level_zero_annihilated", level0, 0.0, "|G_+ c| + |G_- c| for constants"},
    };
    log_line(ctx, cfg_.name + ": generator checks done");
    return emit_checks(cfg_, checks, out, t0);
  }

 private:
  const ExperimentConfig& cfg_;
  long vectors_;
  int max_level_;
};

// ---------------------------------------------------------------- formulas

class FormulasExperiment : public Experiment {
 public:
  explicit FormulasExperiment(const ExperimentConfig& cfg) : cfg_(cfg) {
    tuples_ = cfg.ini.get_int("formulas", "consistency_tuples", 200);
    if (tuples_ < 1) throw ConfigError("[formulas] consistency_tuples must be positive");
  }

  std::string run(const RunContext& ctx, RecordWriter& out) override {
    const auto t0 = Clock::now();
    std::vector<Check> checks;
    auto expect = [&](const std::string& name, double got, double want) {
      const double err = std::abs(got - want) / std::max(1.0, std::abs(want));
      checks.push_back({name, err, 1e-12, "got " + fmt(got) + ", expected " + fmt(want)});
    };
    expect("omega_d(2)", omega_d(2), 2 * kPi);
    expect("omega_d(3)", omega_d(3), 4 * kPi);
    expect("omega_d(4)", omega_d(4), 2 * kPi * kPi);
    for (int d : {2, 3, 4}) expect("nu_eff(" + std::to_string(d) + ", 0)", nu_eff(d, 0.0), 1.0);
    expect("nu_eff(2, sqrt(2 pi))", nu_eff(2, std::sqrt(2 * kPi)), std::sqrt(2.0));
    expect("nu_eff(3, 1)", nu_eff(3, 1.0), std::sqrt(1 + 1 / kPi));
    expect("g_hat(0)", g_hat(0.0, 1.3, 0.7, 2.1, 3), 1.0);
    expect("g_hat(1; unit constants, d = 3)", g_hat(1.0, 1.0, 1.0, 1.0, 3), std::sqrt(1 + 1 / kPi));
    const LLNormalization n = ll_normalization(2.0, 1.0, 4.0);
    expect("ll_normalization A", n.amplitude, 2.0);
    expect("ll_normalization r", n.time, 0.5);

    std::mt19937_64 rng(cfg_.seed);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    double worst = 0.0;
    for (long t = 0; t < tuples_; ++t) {
      const double lh = u(rng), nu = u(rng), kt = u(rng), rho = u(rng);
      const int d = 3 + static_cast<int>(t % 2);
      const double g = g_hat(lh, nu, kt, rho, d);
      const double e = nu_eff(d, lh * std::sqrt(kt / (rho * nu * nu)));
      worst = std::max(worst, std::abs(g - e) / e);
    }
    checks.push_back({"g_hat_nu_eff_consistency", worst, 1e-12,
                      "max relative gap over " + std::to_string(tuples_) + " random tuples, d = 3, 4"});
    log_line(ctx, cfg_.name + ": formula checks done");
    return emit_checks(cfg_, checks, out, t0);
  }

 private:
  const ExperimentConfig& cfg_;
  long tuples_;
};

// ---------------------------------------------------------------- invariance

class InvarianceExperiment : public Experiment {
 public:
  explicit InvarianceExperiment(const ExperimentConfig& cfg) : cfg_(cfg) {
    dyn_ = cfg.dynamics_for(cfg.dynamics.cutoff_radius, cfg.dynamics.theta);
    probe_radius_ = cfg.ini.get_double("invariance", "probe_radius", dyn_.cutoff_radius / 2.0);
    if (cfg.ensemble < 2) throw ConfigError("[experiment] ensemble must be at least 2 for invariance");
    grid_ = make_grid(cfg.grid, dyn_.cutoff_radius);
    check_dealiasing(*grid_, dyn_.cutoff());
  }

  std::string run(const RunContext& ctx, RecordWriter& out) override {
    const auto t0 = Clock::now();
    std::vector<std::size_t> probes;
    const CutoffProfile rho = dyn_.cutoff();
    for (std::size_t i = 0; i < grid_->mode_count(); ++i)
      if (grid_->in_half_space(i) && grid_->wavenumber(i) <= probe_radius_ + 1e-12 && rho(grid_->wavevector(i)) > 0)
        probes.push_back(i);
    if (probes.empty()) throw ConfigError("[invariance] no probed modes inside probe_radius");

    struct Sample {
      std::vector<cplx> start, end;
      double max_pairing;
    };
    const std::size_t E = cfg_.ensemble;
    const auto samples = parallel_map<Sample>(E, ctx.workers, [&](std::size_t e) {
      Member m(cfg_, grid_, dyn_, static_cast<std::uint32_t>(e));
      Sample s;
      auto collect = [&](std::vector<cplx>& dst) {
        for (auto i : probes)
          for (cplx c : basis_coordinates(m.trajectory().state(), i)) dst.push_back(c);
      };
      collect(s.start);
      m.advance(m.trajectory().horizon_steps());
      collect(s.end);
      s.max_pairing = m.trajectory().max_pairing();
      return s;
    });
    log_line(ctx, cfg_.name + ": " + std::to_string(E) + " members done");

    const int per_mode = grid_->dim() - 1;
    const double sigma = std::sqrt(grid_->volume() / 2.0);
    const double alpha = 0.01 / static_cast<double>(probes.size());
    double min_p = 1.0, max_z = 0.0;
    for (std::size_t p = 0; p < probes.size(); ++p) {
      std::vector<double> pooled, diff;
      for (const auto& s : samples) {
        double a = 0.0, b = 0.0;
        for (int c = 0; c < per_mode; ++c) {
          const cplx z = s.end[p * per_mode + c];
          pooled.push_back(z.real());
          pooled.push_back(z.imag());
          a += std::norm(s.start[p * per_mode + c]);
          b += std::norm(z);
        }
        diff.push_back(b - a);
      }
      const double D = ks_statistic_normal(pooled, sigma);
      const double pv = ks_pvalue(D, pooled.size());
      const MeanVar mv = mean_var(diff);
      const double z = mv.stderr_mean() > 0.0 ? mv.mean / mv.stderr_mean() : 0.0;
      min_p = std::min(min_p, pv);
      max_z = std::max(max_z, std::abs(z));
      Json r = make_record(cfg_, "point");
      r["params"] = Json{{"mode", wavevector_json(grid_->integer_index(probes[p]), grid_->dim())},
                         {"wavenumber", grid_->wavenumber(probes[p])}};
      r["stats"] = Json{{"ks_statistic", D},
                        {"ks_pvalue", pv},
                        {"ks_samples", pooled.size()},
                        {"variance_drift", mv.mean / (2.0 * sigma * sigma * per_mode)},
                        {"drift_z", z}};
      finish_record(r, pv > alpha ? "ok" : "rejected", seconds_since(t0));
      out.write(r);
    }
    double pairing = 0.0;
    for (const auto& s : samples) pairing = std::max(pairing, s.max_pairing);
    Json r = make_record(cfg_, "result");
    r["params"] = Json{{"cutoff", dyn_.cutoff_radius},
                       {"theta", dyn_.theta},
                       {"points_per_axis", grid_->points_per_axis()},
                       {"ensemble", E},
                       {"horizon", dyn_.horizon},
                       {"dt", effective_time_step(dyn_)},
                       {"probe_radius", probe_radius_}};
    r["stats"] = Json{{"probed_modes", probes.size()},
                      {"min_ks_pvalue", min_p},
                      {"bonferroni_alpha", alpha},
                      {"max_abs_drift_z", max_z},
                      {"max_pairing", pairing}};
    finish_record(r, "ok", seconds_since(t0));
    out.write(r);
    return "ok";
  }

 private:
  const ExperimentConfig& cfg_;
  DynamicsConfig dyn_;
  double probe_radius_;
  GridPtr grid_;
};

// ---------------------------------------------------------------- triviality scan

class TrivialityExperiment : public Experiment {
 public:
  explicit TrivialityExperiment(const ExperimentConfig& cfg) : cfg_(cfg) {
    for (const auto& sec : cfg.ini.sections()) {
      if (sec.rfind("series", 0) != 0) continue;
      Series s;
      s.label = sec;
      s.theta = cfg.ini.get_double(sec, "theta");
      s.horizon = cfg.ini.get_double(sec, "horizon");
      s.dt_scale = cfg.ini.get_double(sec, "dt_scale", cfg.dt_scale);
      s.cutoffs = cfg.ini.get_doubles(sec, "cutoffs");
      const auto w = cfg.ini.get_ints(sec, "windows");
      if (s.cutoffs.size() < 2) throw ConfigError("[" + sec + "] needs at least two cutoffs");
      if (w.size() != s.cutoffs.size()) throw ConfigError("[" + sec + "] windows must match cutoffs");
      for (long x : w) {
        if (x < 2) throw ConfigError("[" + sec + "] windows must be at least 2");
        s.windows.push_back(static_cast<std::size_t>(x));
      }
      if (!(s.horizon > 0.0) || !(s.dt_scale > 0.0)) throw ConfigError("[" + sec + "] horizon and dt_scale must be positive");
      for (double N : s.cutoffs) {
        DynamicsConfig d = cfg.dynamics;
        d.theta = s.theta;
        d.cutoff_radius = N;
        d.horizon = s.horizon;
        if (cfg.dynamics.dt == 0.0) d.dt = s.dt_scale * default_time_step(d);
        d.validate();
      }
      series_.push_back(s);
    }
    if (series_.empty()) throw ConfigError("triviality-scan needs at least one [series...] section");
  }

  std::string run(const RunContext& ctx, RecordWriter& out) override {
    const auto t0 = Clock::now();
    std::uint32_t stream_base = 0;
    for (const auto& s : series_) {
      std::vector<double> logN, logM;
      std::vector<double> means;
      for (std::size_t i = 0; i < s.cutoffs.size(); ++i) {
        const double N = s.cutoffs[i];
        DynamicsConfig d = cfg_.dynamics;
        d.theta = s.theta;
        d.cutoff_radius = N;
        d.horizon = s.horizon;
        if (cfg_.dynamics.dt == 0.0) d.dt = s.dt_scale * default_time_step(d);
        const GridPtr grid = make_grid(cfg_.grid, N);
        check_dealiasing(*grid, d.cutoff());
        const auto fields = unit_shell_test_fields(grid);
        std::vector<TestFunctional> functionals(fields.begin(), fields.end());
        struct Window {
          std::vector<double> integrals;
          double refinement = 0.0;
        };
        const std::size_t W = s.windows[i];
        const auto t_point = Clock::now();
        const auto windows = parallel_map<Window>(W, ctx.workers, [&](std::size_t w) {
          Member m(cfg_, grid, d, stream_base + static_cast<std::uint32_t>(w));
          m.trajectory().integrator().set_always_evaluate(true);
          const double dt = m.trajectory().integrator().dt();
          const auto steps = static_cast<std::uint64_t>(std::llround(s.horizon / dt));
          std::vector<std::vector<double>> series(functionals.size());
          m.advance(steps + 1, [&](const StepView& v) {
            for (std::size_t j = 0; j < functionals.size(); ++j)
              series[j].push_back(v.coupling * functionals[j](*v.nonlinear));
          });
          Window out;
          for (const auto& x : series) {
            const DuhamelEstimate est = duhamel_integral(x, dt);
            out.integrals.push_back(est.value);
            if (std::isfinite(est.refinement_error))
              out.refinement = std::max(out.refinement, std::abs(est.refinement_error));
          }
          return out;
        });
        stream_base += static_cast<std::uint32_t>(W);
        std::vector<double> sq;
        double refinement = 0.0;
        for (const auto& w : windows) {
          for (double I : w.integrals) sq.push_back(I * I);
          refinement = std::max(refinement, w.refinement);
        }
        const MeanVar mv = mean_var(sq);
        means.push_back(mv.mean);
        logN.push_back(std::log(N));
        logM.push_back(std::log(mv.mean));
        Json r = make_record(cfg_, "point");
        r["params"] = Json{{"series", s.label},
                           {"theta", s.theta},
                           {"cutoff", N},
                           {"horizon", s.horizon},
                           {"dt", effective_time_step(d)},
                           {"coupling", coupling_strength(d, grid->dim())},
                           {"windows", W},
                           {"functionals", functionals.size()}};
        r["stats"] = Json{{"second_moment", mv.mean},
                          {"second_moment_se", mv.stderr_mean()},
                          {"samples", sq.size()},
                          {"max_refinement_error", refinement}};
        finish_record(r, "ok", seconds_since(t0));
        out.write(r);
        log_line(ctx, cfg_.name + ": " + s.label + " N=" + fmt(N) + " E=" + fmt(mv.mean) + " (" +
                          fmt(std::round(seconds_since(t_point))) + " s)");
      }
      const LineFit fit = fit_line(logN, logM);
      const auto [lo, hi] = std::minmax_element(means.begin(), means.end());
      Json r = make_record(cfg_, "series");
      r["params"] = Json{{"series", s.label}, {"theta", s.theta}, {"cutoffs", s.cutoffs}};
      r["stats"] = Json{{"slope", fit.slope},
                        {"slope_se", fit.slope_stderr},
                        {"intercept", fit.intercept},
                        {"reference_slope", 2.0 * (s.theta - 1.0)},
                        {"band_ratio", *hi / *lo}};
      finish_record(r, "ok", seconds_since(t0));
      out.write(r);
    }
    return "ok";
  }

 private:
  struct Series {
    std::string label;
    double theta = 1.0, horizon = 1.0, dt_scale = 1.0;
    std::vector<double> cutoffs;
    std::vector<std::size_t> windows;
  };
  const ExperimentConfig& cfg_;
  std::vector<Series> series_;
};

// ---------------------------------------------------------------- diffusivity

struct ArchiveSpec {
  double sample_dt = 0.0;
  double mode_fraction = 0.25;
};

/// Runs `members` stationary trajectories from white noise and records the basis
/// coordinates of all half-space modes with 0 < |k| <= fraction * cutoff.
ModeArchive record_archive(const ExperimentConfig& cfg, const GridPtr& grid, const DynamicsConfig& dyn,
                           std::size_t members, std::uint32_t stream_base, const ArchiveSpec& spec,
                           const RunContext& ctx) {
  std::vector<std::size_t> idx;
  ModeArchive ar;
  ar.components = grid->dim() - 1;
  const CutoffProfile rho = dyn.cutoff();
  for (std::size_t i = 0; i < grid->mode_count(); ++i)
    if (grid->in_half_space(i) && grid->wavenumber(i) <= spec.mode_fraction * dyn.cutoff_radius + 1e-12 &&
        rho(grid->wavevector(i)) > 0) {
      idx.push_back(i);
      ar.modes.push_back(grid->wavevector(i));
    }
  if (idx.empty()) throw ConfigError("no modes inside the diffusivity mode window");
  const double dt = effective_time_step(dyn);
  const auto stride = static_cast<std::uint64_t>(std::max(1.0, std::round(spec.sample_dt / dt)));
  ar.sample_dt = static_cast<double>(stride) * dt;
  ar.members = parallel_map<std::vector<cplx>>(members, ctx.workers, [&](std::size_t e) {
    Member m(cfg, grid, dyn, stream_base + static_cast<std::uint32_t>(e));
    const std::uint64_t steps = m.trajectory().horizon_steps();
    std::vector<cplx> rec;
    for (std::uint64_t s = 0;; s += stride) {
      for (auto i : idx)
        for (cplx c : basis_coordinates(m.trajectory().state(), i)) rec.push_back(c);
      if (s + stride > steps) break;
      m.advance(stride);
    }
    return rec;
  });
  return ar;
}

Json estimate_json(const std::optional<DiffusivityEstimate>& est) {
  if (!est)
    return Json{{"nu_hat", nullptr},  {"ci_low", nullptr},   {"ci_high", nullptr},     {"excess_z", nullptr},
                {"fit_t0", nullptr},  {"fit_t1", nullptr},   {"residual", nullptr},    {"stationarity_z", nullptr},
                {"members", nullptr}, {"modes_used", nullptr}, {"points", nullptr}};
  const double se = (est->ci_high - est->ci_low) / (2.0 * 1.959963984540054);
  return Json{{"nu_hat", est->nu_hat},
              {"ci_low", est->ci_low},
              {"ci_high", est->ci_high},
              {"excess_z", number_or_null(se > 0.0 ? std::optional<double>((est->nu_hat - 1.0) / se) : std::nullopt)},
              {"fit_t0", est->fit_t0},
              {"fit_t1", est->fit_t1},
              {"residual", est->residual},
              {"stationarity_z", est->stationarity_z},
              {"members", est->members},
              {"modes_used", est->modes_used.size()},
              {"points", est->points}};
}

DiffusivityOptions read_fit_options(const IniConfig& ini, const std::string& sec, std::uint64_t seed) {
  DiffusivityOptions o;
  o.decay_min = ini.get_double(sec, "decay_min", o.decay_min);
  o.decay_max = ini.get_double(sec, "decay_max", o.decay_max);
  o.bootstrap = static_cast<int>(ini.get_int(sec, "bootstrap", o.bootstrap));
  o.seed = seed;
  if (!(o.decay_min > 0.0 && o.decay_max > o.decay_min)) throw ConfigError("[" + sec + "] need 0 < decay_min < decay_max");
  if (o.bootstrap < 10) throw ConfigError("[" + sec + "] bootstrap must be at least 10");
  return o;
}

class DiffusivityScanExperiment : public Experiment {
 public:
  explicit DiffusivityScanExperiment(const ExperimentConfig& cfg) : cfg_(cfg) {
    const auto& ini = cfg.ini;
    lambda_hats_ = ini.get_doubles("diffusivity", "lambda_hats");
    spec_.sample_dt = ini.get_double("diffusivity", "sample_dt");
    spec_.mode_fraction = ini.get_double("diffusivity", "mode_fraction", 0.25);
    options_ = read_fit_options(ini, "diffusivity", cfg.seed);
    if (lambda_hats_.empty()) throw ConfigError("[diffusivity] lambda_hats is empty");
    if (cfg.ensemble < 2) throw ConfigError("[experiment] ensemble must be at least 2 for diffusivity");
    if (cfg.dynamics.mode == CouplingMode::bare)
      throw ConfigError("diffusivity-scan needs coupling = fixed or weak2d");
    for (double lh : lambda_hats_) dyn_for(lh);
  }

  std::string run(const RunContext& ctx, RecordWriter& out) override {
    const auto t0 = Clock::now();
    const GridPtr grid = make_grid(cfg_.grid, cfg_.dynamics.cutoff_radius);
    std::uint32_t stream_base = 0;
    std::string status = "ok";
    for (double lh : lambda_hats_) {
      const DynamicsConfig d = dyn_for(lh);
      check_dealiasing(*grid, d.cutoff());
      const auto tp = Clock::now();
      const ModeArchive ar = record_archive(cfg_, grid, d, cfg_.ensemble, stream_base, spec_, ctx);
      stream_base += static_cast<std::uint32_t>(cfg_.ensemble);
      std::optional<DiffusivityEstimate> est;
      std::string point_status = "ok", diagnostic;
      try {
        est = estimate_diffusivity(ar, options_);
      } catch (const NonStationaryError& e) {
        point_status = "refused_nonstationary";
        diagnostic = e.what();
        status = "partial";
      }
      const int dim = grid->dim();
      const bool predicted = d.cutoff_kind == CutoffKind::sharp;
      Json r = make_record(cfg_, "point");
      r["params"] = Json{{"lambda_hat", lh},
                         {"cutoff", d.cutoff_radius},
                         {"theta", d.theta},
                         {"dim", dim},
                         {"coupling", coupling_strength(d, dim)},
                         {"dt", effective_time_step(d)},
                         {"horizon", d.horizon},
                         {"ensemble", cfg_.ensemble}};
      Json stats = estimate_json(est);
      stats["nu_eff_predicted"] = predicted ? Json(nu_eff(dim, lh)) : Json(nullptr);
      stats["prediction"] = predicted ? (nu_eff_is_conjecture(dim) ? "conjecture" : "theorem") : "none";
      stats["diagnostic"] = diagnostic.empty() ? Json(nullptr) : Json(diagnostic);
      r["stats"] = stats;
      finish_record(r, point_status, seconds_since(t0));
      out.write(r);
      log_line(ctx, cfg_.name + ": lambda_hat=" + fmt(lh) + " nu_hat=" + (est ? fmt(est->nu_hat) : "null") + " (" +
                        fmt(std::round(seconds_since(tp))) + " s)");
    }
    return status;
  }

 private:
  DynamicsConfig dyn_for(double lh) const {
    DynamicsConfig d = cfg_.dynamics;
    d.lambda_hat = lh;
    if (cfg_.dynamics.dt == 0.0) d.dt = cfg_.dt_scale * default_time_step(d);
    d.validate();
    return d;
  }
  const ExperimentConfig& cfg_;
  std::vector<double> lambda_hats_;
  ArchiveSpec spec_;
  DiffusivityOptions options_;
};

class WeakCouplingExperiment : public Experiment {
 public:
  explicit WeakCouplingExperiment(const ExperimentConfig& cfg) : cfg_(cfg) {
    const auto& ini = cfg.ini;
    const char* sec = "weak_coupling";
    cutoffs_ = ini.get_doubles(sec, "cutoffs");
    horizons_ = ini.get_doubles(sec, "horizons");
    sample_dts_ = ini.get_doubles(sec, "sample_dts");
    for (long e : ini.get_ints(sec, "ensembles")) {
      if (e < 2) throw ConfigError("[weak_coupling] ensembles must be at least 2");
      ensembles_.push_back(static_cast<std::size_t>(e));
    }
    budget_ = ini.get_double(sec, "budget_seconds");
    spec_.mode_fraction = ini.get_double(sec, "mode_fraction", 0.25);
    options_ = read_fit_options(ini, sec, cfg.seed);
    const std::size_t n = cutoffs_.size();
    if (n == 0 || horizons_.size() != n || sample_dts_.size() != n || ensembles_.size() != n)
      throw ConfigError("[weak_coupling] cutoffs, horizons, sample_dts and ensembles must have equal length");
    if (cfg.grid.dim != 2) throw ConfigError("weak-coupling-2d needs [grid] dim = 2");
    if (cfg.dynamics.mode != CouplingMode::weak2d) throw ConfigError("weak-coupling-2d needs coupling = weak2d");
    if (!(budget_ > 0.0)) throw ConfigError("[weak_coupling] budget_seconds must be positive");
    for (std::size_t i = 0; i < n; ++i) dyn_for(i);
  }

  std::string run(const RunContext& ctx, RecordWriter& out) override {
    const auto t0 = Clock::now();
    std::uint32_t stream_base = 0;
    std::string status = "ok";
    const double lh = cfg_.dynamics.lambda_hat;
    for (std::size_t i = 0; i < cutoffs_.size(); ++i) {
      const DynamicsConfig d = dyn_for(i);
      const GridPtr grid = make_grid(cfg_.grid, d.cutoff_radius);
      check_dealiasing(*grid, d.cutoff());
      const double per_step = time_steps(grid, d);
      const double steps = std::ceil(d.horizon / effective_time_step(d));
      const double workers = static_cast<double>(std::min<std::size_t>(ctx.workers, ensembles_[i]));
      const double projected =
          per_step * steps * std::ceil(static_cast<double>(ensembles_[i]) / std::max(1.0, workers));
      std::optional<DiffusivityEstimate> est;
      std::string point_status = "ok", diagnostic;
      if (projected > budget_) {
        point_status = "skipped_budget";
        diagnostic = "projected " + fmt(std::round(projected)) + " s exceeds budget " + fmt(budget_) + " s";
        status = "partial";
      } else {
        const ArchiveSpec spec{sample_dts_[i], spec_.mode_fraction};
        const ModeArchive ar = record_archive(cfg_, grid, d, ensembles_[i], stream_base, spec, ctx);
        try {
          est = estimate_diffusivity(ar, options_);
        } catch (const NonStationaryError& e) {
          point_status = "refused_nonstationary";
          diagnostic = e.what();
          status = "partial";
        }
      }
      stream_base += static_cast<std::uint32_t>(ensembles_[i]);
      const double predicted = nu_eff(2, lh);
      Json r = make_record(cfg_, "point");
      r["params"] = Json{{"cutoff", d.cutoff_radius},
                         {"lambda_hat", lh},
                         {"coupling", coupling_strength(d, 2)},
                         {"dt", effective_time_step(d)},
                         {"horizon", d.horizon},
                         {"ensemble", ensembles_[i]}};
      Json stats = estimate_json(est);
      stats["nu_eff_predicted"] = predicted;
      stats["prediction"] = "theorem";
      stats["abs_gap"] = est ? Json(std::abs(est->nu_hat - predicted)) : Json(nullptr);
      stats["projected_seconds"] = projected;
      stats["budget_seconds"] = budget_;
      stats["diagnostic"] = diagnostic.empty() ? Json(nullptr) : Json(diagnostic);
      r["stats"] = stats;
      finish_record(r, point_status, seconds_since(t0));
      out.write(r);
      log_line(ctx, cfg_.name + ": N=" + fmt(d.cutoff_radius) + " " + point_status +
                        (est ? " nu_hat=" + fmt(est->nu_hat) : "") + " projected " + fmt(std::round(projected)) + " s");
    }
    return status;
  }

 private:
  DynamicsConfig dyn_for(std::size_t i) const {
    DynamicsConfig d = cfg_.dynamics;
    d.cutoff_radius = cutoffs_[i];
    d.horizon = horizons_[i];
    if (cfg_.dynamics.dt == 0.0) d.dt = cfg_.dt_scale * default_time_step(d);
    d.validate();
    return d;
  }
  /// Seconds per step, measured on a few steps after one warm-up step.
  double time_steps(const GridPtr& grid, const DynamicsConfig& d) const {
    Trajectory probe(grid, d, cfg_.noise_for(d.theta, 0xffffffffu));
    probe.advance(1);
    const auto t = Clock::now();
    probe.advance(4);
    return seconds_since(t) / 4.0;
  }
  const ExperimentConfig& cfg_;
  std::vector<double> cutoffs_, horizons_, sample_dts_;
  std::vector<std::size_t> ensembles_;
  double budget_ = 0.0;
  ArchiveSpec spec_;
  DiffusivityOptions options_;
};

// ---------------------------------------------------------------- noise equivalence

class NoiseEquivalenceExperiment : public Experiment {
 public:
  explicit NoiseEquivalenceExperiment(const ExperimentConfig& cfg) : cfg_(cfg) {
    const auto flat = cfg.ini.get_ints("noise_equivalence", "modes");
    if (cfg.grid.dim != 3) throw ConfigError("noise-equivalence needs [grid] dim = 3");
    if (flat.empty() || flat.size() % 3 != 0)
      throw ConfigError("[noise_equivalence] modes must list integer triples");
    for (std::size_t i = 0; i < flat.size(); i += 3)
      modes_.push_back({static_cast<int>(flat[i]), static_cast<int>(flat[i + 1]), static_cast<int>(flat[i + 2])});
    if (cfg.grid.modes == 0 || cfg.grid.points == 0)
      throw ConfigError("noise-equivalence needs explicit [grid] modes and points");
    if (cfg.ensemble < 2) throw ConfigError("[experiment] ensemble must be at least 2");
  }

  std::string run(const RunContext& ctx, RecordWriter& out) override {
    const auto t0 = Clock::now();
    const GridPtr grid = std::make_shared<const WaveGrid>(3, cfg_.grid.side, cfg_.grid.modes, cfg_.grid.points);
    std::vector<std::size_t> idx;
    for (const Index& n : modes_) {
      if (!grid->contains(n) || n == Index{0, 0, 0}) throw ConfigError("[noise_equivalence] mode outside the grid");
      idx.push_back(grid->index(n));
    }
    const NoiseParams np = cfg_.noise_for(1.0, 0);
    const double s = 2.0 * np.viscosity * np.thermal_energy / np.density;
    auto row_of = [&](const SpectralField& u) {
      std::vector<cplx> row;
      for (auto i : idx)
        for (int l = 0; l < 3; ++l) row.push_back(u(l, i));
      return row;
    };
    struct Pair {
      std::vector<cplx> stress, direct;
    };
    const auto rows = parallel_map<Pair>(cfg_.ensemble, ctx.workers, [&](std::size_t e) {
      Pair p;
      p.stress = row_of(leray_div_stress(sample_ll_stress(grid, np, e)));
      p.direct = row_of(sample_divfree_gaussian(grid, np, DrawPurpose::generic, e, [&](std::size_t i) {
        return std::sqrt(s) * frac_laplacian_symbol(grid->wavenumber(i), 1.0, LaplacianPower::half_forcing);
      }));
      return p;
    });
    CovarianceAccumulator acc_s(idx.size() * 3), acc_d(idx.size() * 3);
    for (const auto& p : rows) {
      acc_s.add(p.stress);
      acc_d.add(p.direct);
    }
    const CovarianceEstimate cs = acc_s.finish(), cd = acc_d.finish();
    log_line(ctx, cfg_.name + ": " + std::to_string(cfg_.ensemble) + " samples done");
    double max_z = 0.0, max_offdiag_z = 0.0;
    auto zscore = [](double got, double want, double se) {
      if (se > 0.0) return (got - want) / se;
      return got == want ? 0.0 : std::numeric_limits<double>::infinity();
    };
    for (std::size_t a = 0; a < idx.size(); ++a) {
      const Vec& k = grid->wavevector(idx[a]);
      const Mat P = leray_multiplier(k, 3);
      const double scale = s * std::pow(2 * kPi * grid->wavenumber(idx[a]), 2) * grid->volume();
      for (int l = 0; l < 3; ++l) {
        const std::size_t q = a * 3 + l;
        const double want = scale * P[l][l];
        const double zs = zscore(cs.at(q, q).real(), want, cs.se(q, q).real());
        const double zd = zscore(cd.at(q, q).real(), want, cd.se(q, q).real());
        max_z = std::max(max_z, std::abs(zs));
        Json r = make_record(cfg_, "point");
        r["params"] = Json{{"mode", wavevector_json(modes_[a], 3)}, {"component", l}};
        r["stats"] = Json{{"analytic", want},
                          {"stress_path", cs.at(q, q).real()},
                          {"stress_se", cs.se(q, q).real()},
                          {"stress_z", number_or_null(zs)},
                          {"direct_path", cd.at(q, q).real()},
                          {"direct_se", cd.se(q, q).real()},
                          {"direct_z", number_or_null(zd)}};
        finish_record(r, std::abs(zs) < 3.0 ? "ok" : "deviates", seconds_since(t0));
        out.write(r);
      }
    }
    for (std::size_t a = 0; a < cs.dim; ++a)
      for (std::size_t b = 0; b < cs.dim; ++b) {
        if (a == b) continue;
        const std::size_t ma = a / 3, mb = b / 3;
        double want = 0.0;
        if (ma == mb) {
          const Mat P = leray_multiplier(grid->wavevector(idx[ma]), 3);
          want = s * std::pow(2 * kPi * grid->wavenumber(idx[ma]), 2) * grid->volume() * P[a % 3][b % 3];
        }
        max_offdiag_z = std::max(max_offdiag_z, std::abs(zscore(cs.at(a, b).real(), want, cs.se(a, b).real())));
        max_offdiag_z = std::max(max_offdiag_z, std::abs(zscore(cs.at(a, b).imag(), 0.0, cs.se(a, b).imag())));
      }
    Json r = make_record(cfg_, "result");
    r["params"] = Json{{"samples", cfg_.ensemble},
                       {"modes_per_axis", grid->modes_per_axis()},
                       {"points_per_axis", grid->points_per_axis()},
                       {"forcing_scale", s}};
    r["stats"] = Json{{"probed", idx.size() * 3}, {"max_abs_z", max_z}, {"max_abs_offdiagonal_z", max_offdiag_z}};
    finish_record(r, "ok", seconds_since(t0));
    out.write(r);
    return "ok";
  }

 private:
  const ExperimentConfig& cfg_;
  std::vector<Index> modes_;
};

// ---------------------------------------------------------------- vartheta limit

class VarthetaExperiment : public Experiment {
 public:
  explicit VarthetaExperiment(const ExperimentConfig& cfg) : cfg_(cfg) {
    const auto& ini = cfg.ini;
    cutoffs_ = ini.get_doubles("vartheta", "cutoffs");
    lambda_ = ini.get_double("vartheta", "lambda");
    const auto flat = ini.get_ints("vartheta", "wavevectors");
    dim_ = cfg.grid.dim;
    if (flat.empty() || flat.size() % 3 != 0) throw ConfigError("[vartheta] wavevectors must list integer triples");
    for (std::size_t i = 0; i < flat.size(); i += 3)
      ks_.push_back({static_cast<int>(flat[i]), static_cast<int>(flat[i + 1]), static_cast<int>(flat[i + 2])});
    if (cutoffs_.empty()) throw ConfigError("[vartheta] cutoffs is empty");
    if (!(lambda_ >= 0.0)) throw ConfigError("[vartheta] lambda must be non-negative");
  }

  std::string run(const RunContext& ctx, RecordWriter& out) override {
    const auto t0 = Clock::now();
    const double side = cfg_.grid.side;
    const double limit = dim_ >= 3 ? vartheta_limit(dim_) : std::numeric_limits<double>::quiet_NaN();
    struct Row {
      double v, lo, hi;
    };
    std::vector<std::pair<double, Index>> jobs;
    for (double N : cutoffs_)
      for (const Index& k : ks_) jobs.push_back({N, k});
    const auto rows = parallel_map<Row>(jobs.size(), ctx.workers, [&](std::size_t j) {
      const double N = jobs[j].first;
      const Index& n = jobs[j].second;
      const Vec k{n[0] / side, n[1] / side, n[2] / side};
      const Vec kN{k[0] / N, k[1] / N, k[2] / N};
      const double c = lambda_ / (N * N);
      return Row{vartheta_N(k, lambda_, CutoffProfile::sharp(N), dim_, side), theta_integral(kN, 1.0, c, dim_),
                 theta_integral(kN, 1.0 + 1.0 / N, c, dim_)};
    });
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      const Row& row = rows[j];
      Json r = make_record(cfg_, "point");
      r["params"] = Json{{"cutoff", jobs[j].first}, {"k", wavevector_json(jobs[j].second, dim_)}, {"lambda", lambda_}};
      r["stats"] = Json{{"vartheta", row.v},
                        {"theta_lower", row.lo},
                        {"theta_upper", row.hi},
                        {"limit", number_or_null(limit)},
                        {"lower_ok", row.lo <= row.v},
                        {"upper_ok", row.v <= row.hi},
                        {"rel_to_limit", number_or_null(std::isfinite(limit) ? (row.v - limit) / limit : limit)}};
      finish_record(r, "ok", seconds_since(t0));
      out.write(r);
    }
    log_line(ctx, cfg_.name + ": " + std::to_string(jobs.size()) + " rows");
    return "ok";
  }

 private:
  const ExperimentConfig& cfg_;
  std::vector<double> cutoffs_;
  std::vector<Index> ks_;
  double lambda_ = 0.0;
  int dim_ = 3;
};

// ---------------------------------------------------------------- ratio bounds

class RatioBoundsExperiment : public Experiment {
 public:
  explicit RatioBoundsExperiment(const ExperimentConfig& cfg) : cfg_(cfg) {
    const auto& ini = cfg.ini;
    const char* sec = "ratio_bounds";
    RatioBoundParams base;
    base.dim = cfg.grid.dim;
    base.side = cfg.grid.side;
    base.theta = cfg.dynamics.theta;
    base.zeta = ini.get_double(sec, "zeta", base.zeta);
    base.lambda = ini.get_double(sec, "lambda", base.lambda);
    base.trials = static_cast<int>(ini.get_int(sec, "trials", base.trials));
    base.decay = ini.get_double(sec, "decay", base.decay);
    base.seed = cfg.seed;
    for (long N : ini.get_ints(sec, "cutoffs")) cutoffs_.push_back(static_cast<int>(N));
    if (cutoffs_.size() < 2) throw ConfigError("[ratio_bounds] needs at least two cutoffs");
    base.cutoffs = cutoffs_;
    raising_ = base;
    raising_.part = GeneratorPart::plus;
    raising_.level = 1;
    raising_.beta = ini.get_double(sec, "beta_raising");
    lowering_ = base;
    lowering_.part = GeneratorPart::minus;
    lowering_.level = 2;
    lowering_.beta = ini.get_double(sec, "beta_lowering");
    if (base.trials < 1) throw ConfigError("[ratio_bounds] trials must be positive");
  }

  std::string run(const RunContext& ctx, RecordWriter& out) override {
    const auto t0 = Clock::now();
    const std::vector<RatioBoundParams> parts = {raising_, lowering_};
    const auto results = parallel_map<RatioBoundResult>(
        parts.size(), ctx.workers, [&](std::size_t i) { return estimate_ratio_bounds(parts[i]); });
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const auto& p = parts[i];
      const auto& res = results[i];
      for (const auto& pt : res.points) {
        Json r = make_record(cfg_, "point");
        r["params"] = Json{{"part", p.part == GeneratorPart::plus ? "raising" : "lowering"},
                           {"cutoff", pt.cutoff},
                           {"beta", p.beta}};
        r["stats"] = Json{{"box_radius", pt.box_radius}, {"max_ratio", pt.max_ratio}, {"min_ratio", pt.min_ratio}};
        finish_record(r, "ok", seconds_since(t0));
        out.write(r);
      }
      Json r = make_record(cfg_, "series");
      r["params"] = Json{{"part", p.part == GeneratorPart::plus ? "raising" : "lowering"},
                         {"beta", p.beta},
                         {"theta", p.theta},
                         {"zeta", p.zeta},
                         {"decay", p.decay},
                         {"trials", p.trials}};
      r["stats"] = Json{{"exponent", res.exponent},
                        {"beta_admissible", res.beta_admissible},
                        {"variation", number_or_null(res.variation)}};
      finish_record(r, "ok", seconds_since(t0));
      out.write(r);
    }
    log_line(ctx, cfg_.name + ": ratio bounds done");
    return "ok";
  }

 private:
  const ExperimentConfig& cfg_;
  std::vector<int> cutoffs_;
  RatioBoundParams raising_, lowering_;
};

}  // namespace

std::unique_ptr<Experiment> make_experiment(const ExperimentConfig& cfg) {
  std::unique_ptr<Experiment> e;
  switch (cfg.kind) {
    case ExperimentKind::trajectory: e = std::make_unique<TrajectoryExperiment>(cfg); break;
    case ExperimentKind::invariance: e = std::make_unique<InvarianceExperiment>(cfg); break;
    case ExperimentKind::energy_identity: e = std::make_unique<EnergyIdentityExperiment>(cfg); break;
    case ExperimentKind::operator_checks: e = std::make_unique<OperatorChecksExperiment>(cfg); break;
    case ExperimentKind::triviality_scan: e = std::make_unique<TrivialityExperiment>(cfg); break;
    case ExperimentKind::diffusivity_scan: e = std::make_unique<DiffusivityScanExperiment>(cfg); break;
    case ExperimentKind::weak_coupling_2d: e = std::make_unique<WeakCouplingExperiment>(cfg); break;
    case ExperimentKind::noise_equivalence: e = std::make_unique<NoiseEquivalenceExperiment>(cfg); break;
    case ExperimentKind::vartheta_limit: e = std::make_unique<VarthetaExperiment>(cfg); break;
    case ExperimentKind::ratio_bounds: e = std::make_unique<RatioBoundsExperiment>(cfg); break;
    case ExperimentKind::formulas: e = std::make_unique<FormulasExperiment>(cfg); break;
  }
  reject_unused_keys(cfg);
  return e;
}

RunSummary run_experiment(const ExperimentConfig& cfg, const RunContext& ctx, std::ostream* echo) {
  auto exp = make_experiment(cfg);
  RecordWriter writer(cfg.records_path, echo);
  RunSummary s;
  s.status = exp->run(ctx, writer);
  s.records = writer.records();
  if (!cfg.summary_path.empty()) write_summary_file(s.records, cfg.summary_path);
  return s;
}

RunSummary resume_from_checkpoint(const std::string& path, const RunContext& ctx, std::ostream* echo,
                                  const std::string& records_path) {
  Checkpoint ck = load_checkpoint(path);
  ExperimentConfig cfg = parse_experiment(ck.config_text);
  if (cfg.kind != ExperimentKind::trajectory) throw CheckpointError("checkpoint does not hold a trajectory config");
  if (cfg.seed != ck.seed) throw CheckpointError("checkpoint seed does not match its config");
  cfg.hash = ck.config_hash;
  cfg.records_path = records_path;
  auto exp = std::make_unique<TrajectoryExperiment>(cfg);
  reject_unused_keys(cfg);
  if (static_cast<std::uint32_t>(cfg.ini.get_int("trajectory", "stream", 0)) != ck.stream)
    throw CheckpointError("checkpoint stream does not match its config");
  exp->resume_from(std::move(ck));
  RecordWriter writer(records_path, echo);
  RunSummary s;
  s.status = exp->run(ctx, writer);
  s.records = writer.records();
  return s;
}

std::vector<std::string> builtin_check_configs() {
  return {
      "[experiment]\nkind = energy-identity\nname = check-energy-identity\nseed = 1\n"
      "[grid]\ndim = 3\n[dynamics]\ntheta = 1\ncutoff = 4\nlambda = 1\n",
      "[experiment]\nkind = operator-checks\nname = check-generator\nseed = 2\n[dynamics]\ntheta = 1\n",
      "[experiment]\nkind = formulas\nname = check-formulas\nseed = 3\n",
  };
}

}  // namespace fracns::harness
