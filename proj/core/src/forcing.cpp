#include "fracns/forcing.hpp"

#include <cmath>
#include <numbers>

#include "fracns/errors.hpp"
#include "fracns/operators.hpp"

namespace fracns {

void NoiseParams::validate() const {
  if (!(viscosity > 0.0)) throw ConfigError("viscosity must be positive");
  if (!(thermal_energy > 0.0)) throw ConfigError("thermal energy k_B T must be positive");
  if (!(density > 0.0)) throw ConfigError("density must be positive");
  if (!(theta > 0.0)) throw ConfigError("theta must be positive");
}

void add_divfree_gaussian_mode(SpectralField& out, std::size_t idx, const CounterNormals& normals,
                               double scale) {
  const auto& g = out.grid();
  const int d = g.dim();
  const auto basis = divfree_basis(g.wavevector(idx), d);
  const double amp = scale * std::sqrt(g.volume() / 2.0);
  cplx v[3] = {};
  for (std::size_t a = 0; a < basis.size(); ++a) {
    const auto z = normals.pair(static_cast<std::uint32_t>(a));
    const cplx alpha{amp * z[0], amp * z[1]};
    for (int c = 0; c < d; ++c) v[c] += alpha * basis[a][c];
  }
  for (int c = 0; c < d; ++c) out.set(c, idx, out(c, idx) + v[c]);
}

SpectralField sample_divfree_gaussian(const GridPtr& grid, const NoiseParams& params,
                                      DrawPurpose purpose, std::uint64_t step,
                                      const std::function<double(std::size_t)>& scale) {
  SpectralField u(grid);
  DrawAddress addr{params.seed, params.stream_id, purpose, step, 0};
  for (std::size_t idx = 0; idx < grid->zero_index(); ++idx) {
    const double s = scale(idx);
    if (s == 0.0) continue;
    addr.slot = static_cast<std::uint32_t>(idx);
    add_divfree_gaussian_mode(u, idx, CounterNormals(addr), s);
  }
  return u;
}

SpectralField sample_divfree_white_noise(const GridPtr& grid, const NoiseParams& params,
                                         std::uint64_t step) {
  return sample_divfree_gaussian(grid, params, DrawPurpose::initial_state, step,
                                 [](std::size_t) { return 1.0; });
}

SpectralField sample_forcing_increment(const GridPtr& grid, double theta, double dt,
                                       const NoiseParams& params, std::uint64_t step) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  return sample_divfree_gaussian(grid, params, DrawPurpose::increment, step, [&](std::size_t idx) {
    return std::sqrt(2.0 * dt * frac_laplacian_symbol(grid->wavenumber(idx), theta));
  });
}

namespace {
// Symmetric traceless part of (G + G^T)/sqrt(2), G with iid N(0,1) entries.
void deviatoric(const double* g, double out[3][3]) {
  double s[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s[i][j] = (g[3 * i + j] + g[3 * j + i]) / std::numbers::sqrt2;
  const double tr = (s[0][0] + s[1][1] + s[2][2]) / 3.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out[i][j] = s[i][j] - (i == j ? tr : 0.0);
}
}  // namespace

StressField sample_ll_stress(const GridPtr& grid, const NoiseParams& params, std::uint64_t step) {
  if (grid->dim() != 3) throw ConfigError("Landau-Lifshitz stress is only defined for d = 3");
  params.validate();
  StressField tau{grid, std::vector<cplx>(9 * grid->mode_count())};
  const double s = 2.0 * params.viscosity * params.thermal_energy / params.density;
  DrawAddress addr{params.seed, params.stream_id, DrawPurpose::stress, step, 0};
  const std::size_t z = grid->zero_index();
  for (std::size_t idx = 0; idx <= z; ++idx) {
    addr.slot = static_cast<std::uint32_t>(idx);
    CounterNormals normals(addr);
    double a[9], b[9];
    for (int blk = 0; blk < 9; ++blk) {
      const auto p = normals.pair(static_cast<std::uint32_t>(blk));
      a[blk] = p[0];
      b[blk] = p[1];
    }
    double da[3][3], db[3][3];
    deviatoric(a, da);
    deviatoric(b, db);
    const std::size_t neg = grid->negate(idx);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        if (idx == z) {
          tau.ref(i, j, idx) = std::sqrt(s * grid->volume()) * da[i][j];
        } else {
          const double amp = std::sqrt(s * grid->volume() / 2.0);
          const cplx v{amp * da[i][j], amp * db[i][j]};
          tau.ref(i, j, idx) = v;
          tau.ref(i, j, neg) = std::conj(v);
        }
      }
  }
  return tau;
}

SpectralField leray_div_stress(const StressField& tau) {
  const auto& g = *tau.grid;
  const int d = g.dim();
  SpectralField f(tau.grid);
  const cplx two_pi_i{0.0, 2.0 * std::numbers::pi};
  for (std::size_t idx = 0; idx < g.mode_count(); ++idx) {
    const Vec& k = g.wavevector(idx);
    for (int i = 0; i < d; ++i) {
      cplx acc{0.0, 0.0};
      for (int j = 0; j < d; ++j) acc += k[j] * tau(i, j, idx);
      f.ref(i, idx) = two_pi_i * acc;
    }
  }
  apply_leray_inplace(f);
  return f;
}

}  // namespace fracns
