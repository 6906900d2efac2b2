#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracns/cutoff.hpp"
#include "fracns/forcing.hpp"
#include "fracns/operators.hpp"
#include "fracns/spectral_field.hpp"
#include "fracns/transform.hpp"

namespace fracns {

enum class CouplingMode {
  bare,    ///< lambda * N^{2 theta - (d+2)/2}
  fixed,   ///< lambda_hat
  weak2d,  ///< lambda_hat / log N
};

CouplingMode parse_coupling_mode(const std::string& name);
std::string to_string(CouplingMode mode);

struct DynamicsConfig {
  double theta = 1.0;
  double lambda = 1.0;
  double lambda_hat = 0.0;
  CouplingMode mode = CouplingMode::bare;
  double cutoff_radius = 1.0;
  CutoffKind cutoff_kind = CutoffKind::sharp;
  double dt = 0.0;  ///< 0 selects default_time_step()
  double horizon = 1.0;
  bool mollify_noise = false;
  bool noise = true;  ///< false drops the stochastic forcing

  CutoffProfile cutoff() const;
  void validate() const;
};

double lambda_scaled(double lambda, double N, double theta, int dim);
double coupling_strength(const DynamicsConfig& cfg, int dim);
/// 0.1 / (2 pi N)^{2 theta}.
double default_time_step(const DynamicsConfig& cfg);
double effective_time_step(const DynamicsConfig& cfg);
std::uint64_t horizon_steps(const DynamicsConfig& cfg);

/// Throws AliasingError unless products of cutoff-supported fields are alias-free on the grid.
void check_dealiasing(const WaveGrid& grid, const CutoffProfile& cutoff);

/// Pseudo-spectral B^N(u) = rho * P div((rho * u) (x) (rho * u)). Owns FFT buffers,
/// so one instance per thread.
class Nonlinearity {
 public:
  Nonlinearity(GridPtr grid, const CutoffProfile& cutoff);

  void apply(const SpectralField& u, SpectralField& out);
  SpectralField operator()(const SpectralField& u);

  /// max_x |rho * u| from the most recent apply().
  double last_max_velocity() const { return max_velocity_; }
  double cutoff_value(std::size_t idx) const { return rho_[idx]; }

 private:
  GridPtr grid_;
  Transformer fft_;
  std::vector<double> rho_;
  std::vector<std::size_t> active_;  // half-space modes with rho != 0
  struct Fill {
    std::size_t idx, pos;
    double weight;
  };
  std::vector<Fill> fill_;  // modes written directly into the packed spectrum
  std::vector<Transformer::RealArray> velocity_;
  std::vector<cplx> products_;
  double max_velocity_ = 0.0;
};

struct StepDiagnostics {
  double pairing = 0.0;       ///< |<u, B(u)>| / (|u| |B(u)|), 0 when B is not evaluated
  double max_velocity = 0.0;
  bool cfl_ok = true;         ///< dt * coupling * max|v| <= 0.5
};

/// Exponential Euler with the exact Ornstein-Uhlenbeck marginal for the linear part.
class ExponentialEuler {
 public:
  ExponentialEuler(GridPtr grid, const DynamicsConfig& cfg, const NoiseParams& noise);

  double dt() const { return dt_; }
  double coupling() const { return coupling_; }
  const WaveGrid& grid() const { return *grid_; }

  /// Evaluate B^N even when the coupling is zero (for diagnostics and functionals).
  void set_always_evaluate(bool on) { always_evaluate_ = on; }
  bool evaluates_nonlinearity() const { return coupling_ != 0.0 || always_evaluate_; }

  /// Advances u in place from step index `step`; throws NumericalAbort on non-finite output.
  StepDiagnostics step(SpectralField& u, std::uint64_t step);
  /// The two halves of step(): evaluate B^N at u, then apply the update.
  StepDiagnostics prepare(const SpectralField& u);
  void update(SpectralField& u, std::uint64_t step);
  /// B^N(u) used by the most recent step (valid when evaluates_nonlinearity()).
  const SpectralField& last_nonlinear() const { return nonlinear_; }

 private:
  GridPtr grid_;
  NoiseParams noise_;
  double dt_;
  double coupling_;
  bool always_evaluate_ = false;
  Nonlinearity nonlin_;
  SpectralField nonlinear_;
  std::vector<double> decay_, phi_dt_, noise_scale_;
  std::vector<std::vector<Vec>> basis_;
};

struct StepView {
  std::uint64_t step;
  double time;
  const SpectralField& state;           ///< state before the step
  const SpectralField* nonlinear;       ///< B^N(state) or nullptr
  double coupling;
  StepDiagnostics diagnostics;
};

using StepObserver = std::function<void(const StepView&)>;

enum class InitialKind { white_noise, zero };

/// A single trajectory: state, integrator and step counter. The noise at step s
/// depends only on (seed, stream, s), so restarting from a saved state is exact.
class Trajectory {
 public:
  Trajectory(GridPtr grid, const DynamicsConfig& cfg, const NoiseParams& noise,
             InitialKind initial = InitialKind::white_noise);
  Trajectory(GridPtr grid, const DynamicsConfig& cfg, const NoiseParams& noise,
             SpectralField initial, std::uint64_t step = 0);

  void advance(std::uint64_t steps, const StepObserver& observer = {});
  /// Runs until the configured horizon has been reached.
  void run_to_horizon(const StepObserver& observer = {});

  const SpectralField& state() const { return u_; }
  std::uint64_t step_index() const { return step_; }
  double time() const { return static_cast<double>(step_) * integrator_.dt(); }
  std::uint64_t horizon_steps() const { return horizon_steps_; }
  ExponentialEuler& integrator() { return integrator_; }
  const DynamicsConfig& config() const { return cfg_; }
  const NoiseParams& noise() const { return noise_; }

  double max_pairing() const { return max_pairing_; }
  std::uint64_t cfl_violations() const { return cfl_violations_; }

  /// Keep a copy of the state before each step; on NumericalAbort the state is
  /// rolled back to it so that it can be checkpointed.
  void set_keep_last_good(bool on) { keep_last_good_ = on; }

 private:
  GridPtr grid_;
  DynamicsConfig cfg_;
  NoiseParams noise_;
  ExponentialEuler integrator_;
  SpectralField u_;
  std::uint64_t step_ = 0;
  std::uint64_t horizon_steps_ = 0;
  double max_pairing_ = 0.0;
  std::uint64_t cfl_violations_ = 0;
  bool keep_last_good_ = false;
  SpectralField last_good_;
};

struct SimulationResult {
  SpectralField final_state;
  std::uint64_t steps = 0;
  double max_pairing = 0.0;
  std::uint64_t cfl_violations = 0;
  std::vector<SpectralField> snapshots;
};

/// Runs one trajectory to the horizon, keeping every `snapshot_stride`-th state (0 = none).
SimulationResult simulate(GridPtr grid, const DynamicsConfig& cfg, const NoiseParams& noise,
                          std::optional<SpectralField> initial = std::nullopt,
                          std::size_t snapshot_stride = 0, const StepObserver& observer = {});

/// O(modes^2) evaluation of B^N by direct convolution over the mode box; reference
/// for the pseudo-spectral path.
SpectralField direct_convolution_nonlinearity(const SpectralField& u, const CutoffProfile& cutoff);

/// Maps a field on the torus of side M N to the torus of side M via
/// u_N(x) = N^{d/2} u(N x): the coefficient at integer index n keeps its index,
/// its wavevector is multiplied by N and its amplitude by N^{-d/2}.
SpectralField rescale_field(const SpectralField& u, int N);
/// Source time at which the rescaled field at time t is sampled.
double rescaled_time(double t, double N, double theta);

/// Real linear functional v -> <v, phi> restricted to the support of phi.
class TestFunctional {
 public:
  explicit TestFunctional(const SpectralField& phi);
  double operator()(const SpectralField& v) const;

 private:
  double inv_volume_;
  std::vector<std::pair<std::size_t, cplx>> terms_;  // flat index into data(), phi value
};

struct DuhamelEstimate {
  double value = 0.0;
  /// Richardson estimate (I_dt - I_2dt) / 3; NaN when the sample count is too small.
  double refinement_error = 0.0;
};

/// Trapezoid integral of equally spaced samples f_0..f_n.
DuhamelEstimate duhamel_integral(std::span<const double> samples, double dt);

/// Integrates coupling * <B^N(u_s), phi> over [t0, t0 + t] along the trajectory,
/// where t0 is the trajectory's current time; the trajectory ends one step past t0 + t.
DuhamelEstimate duhamel_nonlinear_functional(Trajectory& traj, const SpectralField& phi, double t);

}  // namespace fracns
