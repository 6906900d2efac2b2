#pragma once

#include <cstdint>
#include <vector>

#include "fracns/spectral_field.hpp"

namespace fracns {

/// Surface area of the unit sphere in R^d: d pi^{d/2} / Gamma(1 + d/2).
double omega_d(int d);

/// Effective viscosity: sqrt(1 + lh^2 / (2 pi)) for d = 2 (theorem),
/// sqrt(1 + lh^2 omega_d / (4 pi^2 (d - 2))) for d >= 3 (conjecture).
double nu_eff(int d, double lambda_hat);
/// True when nu_eff(d, .) is the conjectured (d >= 3) formula.
bool nu_eff_is_conjecture(int d);

/// sqrt(1 + lh^2 k_B T omega_d / (4 nu^2 rho pi^2 (d - 2))), d >= 3.
double g_hat(double lambda_hat, double viscosity, double thermal_energy, double density, int d);

struct LLNormalization {
  double amplitude;  ///< A = sqrt(rho / k_B T)
  double time;       ///< r = 1 / nu
};
LLNormalization ll_normalization(double viscosity, double thermal_energy, double density);

/// Time series of selected mode coefficients for an ensemble of trajectories.
struct ModeArchive {
  double sample_dt = 0.0;
  int components = 0;
  std::vector<Vec> modes;
  /// members[e][(t * modes.size() + m) * components + c]
  std::vector<std::vector<cplx>> members;

  std::size_t samples() const;
};

struct DiffusivityOptions {
  /// Fit window in decay units x = (2 pi |k|)^2 tau.
  double decay_min = 0.05;
  double decay_max = 1.5;
  int bootstrap = 400;
  std::uint64_t seed = 0x5eed;
  double stationarity_z = 3.0;
};

struct DiffusivityEstimate {
  double nu_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<Vec> modes_used;
  double fit_t0 = 0.0;  ///< shortest lag used
  double fit_t1 = 0.0;  ///< longest lag used
  double residual = 0.0;
  double stationarity_z = 0.0;
  std::size_t members = 0;
  std::size_t points = 0;
};

/// Pooled weighted fit of -log(C_k(tau) / C_k(0)) = nu (2 pi |k|)^2 tau through the origin,
/// with a percentile bootstrap over ensemble members. Throws NonStationaryError when the
/// first- and second-half equal-time correlations differ by more than stationarity_z.
DiffusivityEstimate estimate_diffusivity(const ModeArchive& archive, const DiffusivityOptions& options = {});

/// Exact stationary OU series with autocorrelation exp(-nu (2 pi |k|)^2 tau) per mode,
/// complex Gaussian with unit variance per component.
ModeArchive synthetic_ou_archive(const std::vector<Vec>& modes, int components, double nu, double sample_dt,
                                 std::size_t samples, std::size_t members, std::uint64_t seed);

}  // namespace fracns
