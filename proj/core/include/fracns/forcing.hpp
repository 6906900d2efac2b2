#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fracns/philox.hpp"
#include "fracns/spectral_field.hpp"

namespace fracns {

struct NoiseParams {
  double theta = 1.0;
  double viscosity = 1.0;
  double thermal_energy = 1.0;  ///< k_B T
  double density = 1.0;
  std::uint64_t seed = 0;
  std::uint32_t stream_id = 0;

  void validate() const;
};

/// Mean-free Gaussian field with per-mode covariance scale(k)^2 M^d P(k),
/// drawn along divfree_basis(k) with the draw address of the given purpose
/// and step. This is the common kernel of the samplers below.
SpectralField sample_divfree_gaussian(const GridPtr& grid, const NoiseParams& params,
                                      DrawPurpose purpose, std::uint64_t step,
                                      const std::function<double(std::size_t)>& scale);

/// Draws added into `out` in place for mode pairs idx < zero_index(); out(idx)
/// += scale * sum_a xi_a v_a. Used by the integrator to avoid a temporary.
void add_divfree_gaussian_mode(SpectralField& out, std::size_t idx, const CounterNormals& normals,
                               double scale);

/// Sample of the divergence-free, mean-free white noise: covariance M^d P(k) per mode.
SpectralField sample_divfree_white_noise(const GridPtr& grid, const NoiseParams& params,
                                         std::uint64_t step = 0);

/// Increment of sqrt(2) A^{theta/2} P xi over dt: covariance 2 dt (2 pi|k|)^{2 theta} M^d P(k).
SpectralField sample_forcing_increment(const GridPtr& grid, double theta, double dt,
                                       const NoiseParams& params, std::uint64_t step);

/// Spectral coefficients of a d x d tensor field, layout [i][j][mode].
struct StressField {
  GridPtr grid;
  std::vector<cplx> coeffs;
  cplx operator()(int i, int j, std::size_t idx) const {
    return coeffs[(static_cast<std::size_t>(i) * grid->dim() + j) * grid->mode_count() + idx];
  }
  cplx& ref(int i, int j, std::size_t idx) {
    return coeffs[(static_cast<std::size_t>(i) * grid->dim() + j) * grid->mode_count() + idx];
  }
};

/// Spatially white symmetric traceless stress with covariance density
/// s (d_ik d_jl + d_il d_jk - 2/3 d_ij d_kl), s = 2 nu k_B T / rho. d = 3 only.
StressField sample_ll_stress(const GridPtr& grid, const NoiseParams& params, std::uint64_t step = 0);

/// P(div tau) in spectral form: P(k) (2 pi i sum_j k_j tau_ij(k)).
SpectralField leray_div_stress(const StressField& tau);

}  // namespace fracns
