#pragma once

#include "fracns/cutoff.hpp"
#include "fracns/wave_grid.hpp"

namespace fracns {

/// Lattice sum over l + m = k in (1/M) Z^d of R(l, m) N^{2-d} / (lambda + |l|^2 + |m|^2) / M^d,
/// with R = rho(l) rho(m) rho(k) for the sharp cutoff and its square for a smooth one.
double vartheta_N(const Vec& k, double lambda, const CutoffProfile& cutoff, int dim, double side);

/// Integral over the lens B(0, r) and B(k_N, r) of 1 / (c + |x|^2 + |k_N - x|^2),
/// with c = lambda / N^2, in d = 2 or 3.
double theta_integral(const Vec& k_scaled, double r, double c, int dim, double tol = 1e-10);

/// omega_d / (2 (d - 2)): the d >= 3 large-N limit of vartheta_N at fixed k.
double vartheta_limit(int dim);

}  // namespace fracns
