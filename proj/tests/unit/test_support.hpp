#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include "fracns/forcing.hpp"
#include "fracns/spectral_field.hpp"

namespace fracns::testing {

/// Arbitrary (not divergence-free) real field on the box with Gaussian coefficients.
inline SpectralField random_field(const GridPtr& grid, std::uint64_t seed, bool mean_free = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  SpectralField u(grid);
  for (int c = 0; c < grid->dim(); ++c)
    for (std::size_t i = 0; i <= grid->zero_index(); ++i) u.set(c, i, {n01(rng), n01(rng)});
  if (mean_free)
    for (int c = 0; c < grid->dim(); ++c) u.ref(c, grid->zero_index()) = 0.0;
  return u;
}

inline SpectralField random_divfree(const GridPtr& grid, std::uint64_t seed) {
  NoiseParams p;
  p.seed = seed;
  return sample_divfree_white_noise(grid, p);
}

/// |x - expected| <= k * se, with a floor so exact zeros pass.
inline bool within_sigma(double x, double expected, double se, double k = 3.0) {
  return std::abs(x - expected) <= k * se + 1e-14;
}

}  // namespace fracns::testing
