#include "fracns/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fracns/errors.hpp"

namespace fracns {

CouplingMode parse_coupling_mode(const std::string& name) {
  if (name == "bare") return CouplingMode::bare;
  if (name == "fixed") return CouplingMode::fixed;
  if (name == "weak2d") return CouplingMode::weak2d;
  throw ConfigError("unknown coupling mode '" + name + "' (expected bare, fixed or weak2d)");
}

std::string to_string(CouplingMode mode) {
  switch (mode) {
    case CouplingMode::bare: return "bare";
    case CouplingMode::fixed: return "fixed";
    case CouplingMode::weak2d: return "weak2d";
  }
  return "bare";
}

CutoffProfile DynamicsConfig::cutoff() const {
  return cutoff_kind == CutoffKind::sharp ? CutoffProfile::sharp(cutoff_radius)
                                          : CutoffProfile::smooth(cutoff_radius);
}

void DynamicsConfig::validate() const {
  if (!(theta > 0.0)) throw ConfigError("theta must be positive");
  if (!(cutoff_radius >= 1.0)) throw ConfigError("cutoff radius N must be >= 1");
  if (dt < 0.0 || !std::isfinite(dt)) throw ConfigError("dt must be positive (or 0 for the default)");
  const double h = effective_time_step(*this);
  if (!(horizon >= h)) throw ConfigError("horizon T must be at least one time step");
  if (mode == CouplingMode::weak2d && !(cutoff_radius > 1.0))
    throw ConfigError("weak2d coupling needs N > 1");
}

double lambda_scaled(double lambda, double N, double theta, int dim) {
  if (!(N >= 1.0)) throw ConfigError("lambda_scaled needs N >= 1");
  return lambda * std::pow(N, 2.0 * theta - (dim + 2) / 2.0);
}

double coupling_strength(const DynamicsConfig& cfg, int dim) {
  switch (cfg.mode) {
    case CouplingMode::bare: return lambda_scaled(cfg.lambda, cfg.cutoff_radius, cfg.theta, dim);
    case CouplingMode::fixed: return cfg.lambda_hat;
    case CouplingMode::weak2d: return cfg.lambda_hat / std::log(cfg.cutoff_radius);
  }
  return 0.0;
}

double default_time_step(const DynamicsConfig& cfg) {
  return 0.1 / std::pow(2.0 * std::numbers::pi * cfg.cutoff_radius, 2.0 * cfg.theta);
}

double effective_time_step(const DynamicsConfig& cfg) {
  return cfg.dt > 0.0 ? cfg.dt : default_time_step(cfg);
}

std::uint64_t horizon_steps(const DynamicsConfig& cfg) {
  return static_cast<std::uint64_t>(std::llround(std::ceil(cfg.horizon / effective_time_step(cfg) - 1e-9)));
}

void check_dealiasing(const WaveGrid& grid, const CutoffProfile& cutoff) {
  const int support = std::min(grid.radius(), cutoff.max_axis_index(grid.side()));
  if (grid.points_per_axis() < 3 * support + 1)
    throw AliasingError("grid of " + std::to_string(grid.points_per_axis()) +
                        " points per axis aliases the quadratic term; need at least " +
                        std::to_string(3 * support + 1));
}

// ---------------------------------------------------------------------------

namespace {
int pair_count(int d) { return d * (d + 1) / 2; }
int pair_index(int i, int j, int d) {
  if (i > j) std::swap(i, j);
  return i * d - i * (i - 1) / 2 + (j - i);
}
}  // namespace

Nonlinearity::Nonlinearity(GridPtr grid, const CutoffProfile& cutoff)
    : grid_(std::move(grid)), fft_(grid_) {
  check_dealiasing(*grid_, cutoff);
  const std::size_t nm = grid_->mode_count();
  rho_.resize(nm);
  for (std::size_t idx = 0; idx < nm; ++idx) {
    rho_[idx] = cutoff(grid_->wavevector(idx));
    if (idx < grid_->zero_index() && rho_[idx] != 0.0) active_.push_back(idx);
  }
  for (std::size_t idx = 0; idx < nm; ++idx)
    if (rho_[idx] != 0.0 && !fft_.packed_conjugate(idx))
      fill_.push_back({idx, fft_.packed_position(idx), rho_[idx] * fft_.inverse_scale()});
  for (int c = 0; c < grid_->dim(); ++c) velocity_.push_back(Transformer::allocate_real(grid_->point_count()));
  products_.resize(active_.size() * pair_count(grid_->dim()));
}

void Nonlinearity::apply(const SpectralField& u, SpectralField& out) {
  if (!u.grid().same_shape(*grid_)) throw ShapeError("nonlinearity: field grid mismatch");
  if (out.grid_ptr() == nullptr || !out.grid().same_shape(*grid_)) out = SpectralField(grid_);
  const int d = grid_->dim();
  const std::size_t np = grid_->point_count();
  const std::size_t hs = fft_.half_size();
  cplx* half = fft_.half_buffer();
  double* real = fft_.real_buffer();
  const double fs = fft_.forward_scale();
  for (int c = 0; c < d; ++c) {
    std::fill(half, half + hs, cplx{0.0, 0.0});
    const cplx* uc = u.component(c).data();
    for (const auto& f : fill_) half[f.pos] = f.weight * uc[f.idx];
    fft_.execute_inverse_into(velocity_[c].get());
  }
  double vmax2 = 0.0;
  for (std::size_t x = 0; x < np; ++x) {
    double s = 0.0;
    for (int c = 0; c < d; ++c) s += velocity_[c][x] * velocity_[c][x];
    vmax2 = std::max(vmax2, s);
  }
  max_velocity_ = std::sqrt(vmax2);

  const std::size_t na = active_.size();
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const double* vi = velocity_[i].get();
      const double* vj = velocity_[j].get();
      for (std::size_t x = 0; x < np; ++x) real[x] = vi[x] * vj[x];
      fft_.execute_forward();
      cplx* dst = products_.data() + pair_index(i, j, d) * na;
      for (std::size_t a = 0; a < na; ++a) {
        const std::size_t idx = active_[a];
        const cplx v = half[fft_.packed_position(idx)] * fs;
        dst[a] = fft_.packed_conjugate(idx) ? std::conj(v) : v;
      }
    }

  out.fill_zero();
  const cplx two_pi_i{0.0, 2.0 * std::numbers::pi};
  for (std::size_t a = 0; a < na; ++a) {
    const std::size_t idx = active_[a];
    const Vec& k = grid_->wavevector(idx);
    cplx div[3];
    for (int i = 0; i < d; ++i) {
      cplx acc{0.0, 0.0};
      for (int j = 0; j < d; ++j) acc += k[j] * products_[pair_index(i, j, d) * na + a];
      div[i] = two_pi_i * acc;
    }
    const double k2 = norm2(k);
    cplx kd{0.0, 0.0};
    for (int i = 0; i < d; ++i) kd += k[i] * div[i];
    for (int i = 0; i < d; ++i) out.set(i, idx, rho_[idx] * (div[i] - k[i] * kd / k2));
  }
}

SpectralField Nonlinearity::operator()(const SpectralField& u) {
  SpectralField out(grid_);
  apply(u, out);
  return out;
}

// ---------------------------------------------------------------------------

ExponentialEuler::ExponentialEuler(GridPtr grid, const DynamicsConfig& cfg, const NoiseParams& noise)
    : grid_(std::move(grid)),
      noise_(noise),
      dt_(effective_time_step(cfg)),
      coupling_(coupling_strength(cfg, grid_->dim())),
      nonlin_(grid_, cfg.cutoff()),
      nonlinear_(grid_) {
  cfg.validate();
  const std::size_t half = grid_->zero_index();
  decay_.resize(half);
  phi_dt_.resize(half);
  noise_scale_.resize(half);
  basis_.resize(half);
  for (std::size_t idx = 0; idx < half; ++idx) {
    const double a = frac_laplacian_symbol(grid_->wavenumber(idx), cfg.theta);
    const double z = a * dt_;
    decay_[idx] = std::exp(-z);
    phi_dt_[idx] = z > 0.0 ? -std::expm1(-z) / a : dt_;
    double s = std::sqrt(-std::expm1(-2.0 * z));
    if (cfg.mollify_noise) s *= nonlin_.cutoff_value(idx);
    if (!cfg.noise) s = 0.0;
    noise_scale_[idx] = s;
    basis_[idx] = divfree_basis(grid_->wavevector(idx), grid_->dim());
  }
}

StepDiagnostics ExponentialEuler::step(SpectralField& u, std::uint64_t step) {
  const auto diag = prepare(u);
  update(u, step);
  return diag;
}

StepDiagnostics ExponentialEuler::prepare(const SpectralField& u) {
  StepDiagnostics diag;
  if (evaluates_nonlinearity()) {
    nonlin_.apply(u, nonlinear_);
    diag.max_velocity = nonlin_.last_max_velocity();
    const double nb = norm(nonlinear_), nu = norm(u);
    diag.pairing = (nb > 0.0 && nu > 0.0) ? std::abs(inner(u, nonlinear_)) / (nb * nu) : 0.0;
    diag.cfl_ok = dt_ * std::abs(coupling_) * diag.max_velocity <= 0.5;
  }
  return diag;
}

void ExponentialEuler::update(SpectralField& u, std::uint64_t step) {
  const int d = grid_->dim();
  const double amp0 = std::sqrt(grid_->volume() / 2.0);
  DrawAddress addr{noise_.seed, noise_.stream_id, DrawPurpose::increment, step, 0};
  double energy = 0.0;
  const std::size_t half = grid_->zero_index();
  for (std::size_t idx = 0; idx < half; ++idx) {
    cplx eta[3] = {};
    const double s = noise_scale_[idx];
    if (s != 0.0) {
      addr.slot = static_cast<std::uint32_t>(idx);
      CounterNormals normals(addr);
      const double amp = s * amp0;
      const auto& basis = basis_[idx];
      for (std::size_t a = 0; a < basis.size(); ++a) {
        const auto z = normals.pair(static_cast<std::uint32_t>(a));
        const cplx alpha{amp * z[0], amp * z[1]};
        for (int c = 0; c < d; ++c) eta[c] += alpha * basis[a][c];
      }
    }
    for (int c = 0; c < d; ++c) {
      cplx v = decay_[idx] * u(c, idx);
      if (coupling_ != 0.0) v -= (coupling_ * phi_dt_[idx]) * nonlinear_(c, idx);
      v += eta[c];
      u.set(c, idx, v);
      energy += std::norm(v);
    }
  }
  for (int c = 0; c < d; ++c) u.ref(c, grid_->zero_index()) = 0.0;
  if (!std::isfinite(energy)) throw NumericalAbort("non-finite state after step", step);
}

// ---------------------------------------------------------------------------

Trajectory::Trajectory(GridPtr grid, const DynamicsConfig& cfg, const NoiseParams& noise,
                       InitialKind initial)
    : grid_(grid), cfg_(cfg), noise_(noise), integrator_(grid, cfg, noise), u_(grid) {
  if (initial == InitialKind::white_noise) u_ = sample_divfree_white_noise(grid_, noise_);
  horizon_steps_ = fracns::horizon_steps(cfg_);
}

Trajectory::Trajectory(GridPtr grid, const DynamicsConfig& cfg, const NoiseParams& noise,
                       SpectralField initial, std::uint64_t step)
    : grid_(grid), cfg_(cfg), noise_(noise), integrator_(grid, cfg, noise), u_(std::move(initial)),
      step_(step) {
  if (!u_.grid().same_shape(*grid_)) throw ShapeError("initial field does not match the grid");
  horizon_steps_ = fracns::horizon_steps(cfg_);
}

void Trajectory::advance(std::uint64_t steps, const StepObserver& observer) {
  for (std::uint64_t s = 0; s < steps; ++s) {
    const std::uint64_t current = step_;
    const auto diag = integrator_.prepare(u_);
    if (observer) {
      const SpectralField* nl = integrator_.evaluates_nonlinearity() ? &integrator_.last_nonlinear() : nullptr;
      observer(StepView{current, static_cast<double>(current) * integrator_.dt(), u_, nl,
                        integrator_.coupling(), diag});
    }
    if (keep_last_good_) {
      last_good_ = u_;
      try {
        integrator_.update(u_, current);
      } catch (const NumericalAbort&) {
        u_ = last_good_;
        throw;
      }
    } else {
      integrator_.update(u_, current);
    }
    max_pairing_ = std::max(max_pairing_, diag.pairing);
    if (!diag.cfl_ok) ++cfl_violations_;
    ++step_;
  }
}

void Trajectory::run_to_horizon(const StepObserver& observer) {
  if (step_ < horizon_steps_) advance(horizon_steps_ - step_, observer);
}

SimulationResult simulate(GridPtr grid, const DynamicsConfig& cfg, const NoiseParams& noise,
                          std::optional<SpectralField> initial, std::size_t snapshot_stride,
                          const StepObserver& observer) {
  Trajectory traj = initial ? Trajectory(grid, cfg, noise, std::move(*initial))
                            : Trajectory(grid, cfg, noise, InitialKind::white_noise);
  SimulationResult res;
  auto obs = [&](const StepView& v) {
    if (snapshot_stride > 0 && v.step % snapshot_stride == 0) res.snapshots.push_back(v.state);
    if (observer) observer(v);
  };
  if (snapshot_stride > 0 || observer)
    traj.run_to_horizon(obs);
  else
    traj.run_to_horizon();
  res.final_state = traj.state();
  res.steps = traj.step_index();
  res.max_pairing = traj.max_pairing();
  res.cfl_violations = traj.cfl_violations();
  if (snapshot_stride > 0 && res.steps % snapshot_stride == 0) res.snapshots.push_back(res.final_state);
  return res;
}

// ---------------------------------------------------------------------------

SpectralField direct_convolution_nonlinearity(const SpectralField& u, const CutoffProfile& cutoff) {
  const auto& g = u.grid();
  const int d = g.dim();
  const std::size_t nm = g.mode_count();
  std::vector<double> rho(nm);
  for (std::size_t m = 0; m < nm; ++m) rho[m] = cutoff(g.wavevector(m));
  SpectralField div(u.grid_ptr());
  const cplx two_pi_i{0.0, 2.0 * std::numbers::pi};
  for (std::size_t p = 0; p < nm; ++p) {
    if (rho[p] == 0.0) continue;
    const Index& a = g.integer_index(p);
    for (std::size_t q = 0; q < nm; ++q) {
      if (rho[q] == 0.0) continue;
      const Index& b = g.integer_index(q);
      const Index s{a[0] + b[0], a[1] + b[1], a[2] + b[2]};
      if (!g.contains(s)) continue;
      const std::size_t k = g.index(s);
      if (rho[k] == 0.0) continue;
      const Vec& kv = g.wavevector(k);
      cplx kv_q{0.0, 0.0};
      for (int j = 0; j < d; ++j) kv_q += kv[j] * u(j, q);
      for (int i = 0; i < d; ++i) div.ref(i, k) += rho[p] * rho[q] * u(i, p) * kv_q;
    }
  }
  SpectralField out(u.grid_ptr());
  const double inv_v = 1.0 / g.volume();
  for (std::size_t k = 0; k < nm; ++k) {
    if (rho[k] == 0.0) continue;
    const Mat P = leray_multiplier(g.wavevector(k), d);
    for (int i = 0; i < d; ++i) {
      cplx acc{0.0, 0.0};
      for (int j = 0; j < d; ++j) acc += P[i][j] * div(j, k);
      out.ref(i, k) = rho[k] * two_pi_i * inv_v * acc;
    }
  }
  return out;
}

SpectralField rescale_field(const SpectralField& u, int N) {
  if (N < 1) throw ConfigError("rescale factor must be a positive integer");
  const auto& src = u.grid();
  auto target = std::make_shared<const WaveGrid>(src.dim(), src.side() / N, src.modes_per_axis(),
                                                 src.points_per_axis());
  SpectralField out(target);
  const double factor = std::pow(static_cast<double>(N), -src.dim() / 2.0);
  for (std::size_t i = 0; i < u.data().size(); ++i) out.data()[i] = factor * u.data()[i];
  return out;
}

double rescaled_time(double t, double N, double theta) { return t * std::pow(N, 2.0 * theta); }

TestFunctional::TestFunctional(const SpectralField& phi) : inv_volume_(1.0 / phi.grid().volume()) {
  for (std::size_t i = 0; i < phi.data().size(); ++i)
    if (phi.data()[i] != cplx{0.0, 0.0}) terms_.emplace_back(i, phi.data()[i]);
}

double TestFunctional::operator()(const SpectralField& v) const {
  double acc = 0.0;
  for (const auto& [i, p] : terms_) {
    const cplx a = v.data()[i];
    acc += a.real() * p.real() + a.imag() * p.imag();
  }
  return acc * inv_volume_;
}

DuhamelEstimate duhamel_integral(std::span<const double> f, double dt) {
  DuhamelEstimate est;
  const std::size_t n = f.size();
  if (n < 2) return est;
  double acc = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < n; ++i) acc += f[i];
  est.value = acc * dt;
  const std::size_t intervals = n - 1;
  if (intervals >= 2 && intervals % 2 == 0) {
    double coarse = 0.5 * (f.front() + f.back());
    for (std::size_t i = 2; i + 1 < n; i += 2) coarse += f[i];
    est.refinement_error = (est.value - coarse * 2.0 * dt) / 3.0;
  } else {
    est.refinement_error = std::nan("");
  }
  return est;
}

DuhamelEstimate duhamel_nonlinear_functional(Trajectory& traj, const SpectralField& phi, double t) {
  TestFunctional pair(phi);
  auto& integ = traj.integrator();
  integ.set_always_evaluate(true);
  const auto steps = static_cast<std::uint64_t>(std::llround(t / integ.dt()));
  std::vector<double> samples;
  samples.reserve(steps + 1);
  traj.advance(steps + 1, [&](const StepView& v) {
    samples.push_back(v.nonlinear ? v.coupling * pair(*v.nonlinear) : 0.0);
  });
  return duhamel_integral(samples, integ.dt());
}

}  // namespace fracns
