#pragma once

#include <array>
#include <vector>

#include "fracns/cutoff.hpp"
#include "fracns/spectral_field.hpp"

namespace fracns {

using Mat = std::array<std::array<double, 3>, 3>;

/// delta_ij - k_i k_j / |k|^2, identity at k = 0; entries beyond d are zero.
Mat leray_multiplier(const Vec& k, int dim);

/// Orthonormal vectors spanning the plane (d = 3) or line (d = 2) orthogonal to k.
/// Throws ConfigError for k = 0.
std::vector<Vec> divfree_basis(const Vec& k, int dim);

SpectralField apply_leray(const SpectralField& u);
void apply_leray_inplace(SpectralField& u);

enum class LaplacianPower {
  forward,       ///< (2 pi |k|)^(2 theta)
  half_forcing,  ///< (2 pi |k|)^theta
};

double frac_laplacian_symbol(double wavenumber, double theta, LaplacianPower power = LaplacianPower::forward);
SpectralField frac_laplacian_apply(const SpectralField& u, double theta,
                                   LaplacianPower power = LaplacianPower::forward);

SpectralField apply_cutoff(const SpectralField& u, const CutoffProfile& rho);

/// Sets the zero mode of every component to 0.
void remove_mean(SpectralField& u);

}  // namespace fracns
