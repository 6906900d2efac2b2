#include "fracns/diffusivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fracns/errors.hpp"
#include "fracns/philox.hpp"

namespace fracns {

double omega_d(int d) {
  if (d < 1) throw ConfigError("omega_d needs d >= 1");
  return d * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(1.0 + d / 2.0);
}

double nu_eff(int d, double lambda_hat) {
  if (d < 2) throw ConfigError("nu_eff needs d >= 2");
  const double l2 = lambda_hat * lambda_hat;
  if (d == 2) return std::sqrt(1.0 + l2 / (2.0 * std::numbers::pi));
  return std::sqrt(1.0 + l2 * omega_d(d) / (4.0 * std::numbers::pi * std::numbers::pi * (d - 2)));
}

bool nu_eff_is_conjecture(int d) { return d >= 3; }

double g_hat(double lambda_hat, double viscosity, double thermal_energy, double density, int d) {
  if (d < 3) throw ConfigError("g_hat needs d >= 3");
  if (!(viscosity > 0.0 && thermal_energy > 0.0 && density > 0.0))
    throw ConfigError("g_hat needs positive physical constants");
  const double pi2 = std::numbers::pi * std::numbers::pi;
  return std::sqrt(1.0 + lambda_hat * lambda_hat * thermal_energy * omega_d(d) /
                             (4.0 * viscosity * viscosity * density * pi2 * (d - 2)));
}

LLNormalization ll_normalization(double viscosity, double thermal_energy, double density) {
  if (!(viscosity > 0.0 && thermal_energy > 0.0 && density > 0.0))
    throw ConfigError("ll_normalization needs positive physical constants");
  return {std::sqrt(density / thermal_energy), 1.0 / viscosity};
}

std::size_t ModeArchive::samples() const {
  if (members.empty() || modes.empty() || components == 0) return 0;
  return members.front().size() / (modes.size() * components);
}

namespace {

struct MemberStats {
  // corr[m][j]: time-averaged Re <u(t + j), u(t)> for mode m at lag j
  std::vector<std::vector<double>> corr;
  double first_half = 0.0, second_half = 0.0;
};

struct FitPoint {
  std::size_t mode, lag;
  double x;
};

double fit_slope(const std::vector<FitPoint>& pts, const std::vector<std::vector<double>>& mean_corr,
                 const std::vector<double>& weights, double* residual) {
  double num = 0.0, den = 0.0;
  std::vector<double> ys(pts.size(), std::nan(""));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    const double r = mean_corr[p.mode][p.lag] / mean_corr[p.mode][0];
    if (!(r > 0.0)) continue;
    ys[i] = -std::log(r);
    num += weights[i] * p.x * ys[i];
    den += weights[i] * p.x * p.x;
  }
  const double slope = den > 0.0 ? num / den : std::nan("");
  if (residual) {
    double rss = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (std::isnan(ys[i])) continue;
      const double e = ys[i] - slope * pts[i].x;
      rss += weights[i] * e * e;
      wsum += weights[i];
    }
    *residual = wsum > 0.0 ? std::sqrt(rss / wsum) : 0.0;
  }
  return slope;
}

}  // namespace

DiffusivityEstimate estimate_diffusivity(const ModeArchive& archive, const DiffusivityOptions& options) {
  const std::size_t E = archive.members.size();
  const std::size_t nm = archive.modes.size();
  const int nc = archive.components;
  const std::size_t T = archive.samples();
  if (E < 2) throw ConfigError("estimate_diffusivity needs at least 2 ensemble members");
  if (nm == 0 || T < 4) throw ConfigError("estimate_diffusivity needs modes and at least 4 samples");
  if (!(archive.sample_dt > 0.0)) throw ConfigError("sample_dt must be positive");
  if (!(options.decay_max > options.decay_min && options.decay_min >= 0.0))
    throw ConfigError("invalid fit window");

  std::vector<double> rate(nm);
  std::vector<std::size_t> max_lag(nm);
  std::vector<FitPoint> pts;
  for (std::size_t m = 0; m < nm; ++m) {
    const double kn = std::sqrt(norm2(archive.modes[m]));
    if (kn == 0.0) throw ConfigError("estimate_diffusivity: zero mode in the mode set");
    rate[m] = std::pow(2.0 * std::numbers::pi * kn, 2.0);
    const double x_step = rate[m] * archive.sample_dt;
    max_lag[m] = std::min<std::size_t>(T / 2, static_cast<std::size_t>(std::floor(options.decay_max / x_step)));
    for (std::size_t j = 1; j <= max_lag[m]; ++j) {
      const double x = x_step * static_cast<double>(j);
      if (x >= options.decay_min) pts.push_back({m, j, x});
    }
  }
  if (pts.empty()) throw ConfigError("fit window contains no lags; sample more finely");

  std::vector<MemberStats> stats(E);
  for (std::size_t e = 0; e < E; ++e) {
    const auto& series = archive.members[e];
    if (series.size() != T * nm * nc) throw ShapeError("ragged trajectory archive");
    auto& st = stats[e];
    st.corr.assign(nm, {});
    for (std::size_t m = 0; m < nm; ++m) {
      st.corr[m].assign(max_lag[m] + 1, 0.0);
      for (std::size_t j = 0; j <= max_lag[m]; ++j) {
        double acc = 0.0;
        for (std::size_t t = 0; t + j < T; ++t)
          for (int c = 0; c < nc; ++c) {
            const cplx a = series[((t + j) * nm + m) * nc + c];
            const cplx b = series[(t * nm + m) * nc + c];
            acc += a.real() * b.real() + a.imag() * b.imag();
          }
        st.corr[m][j] = acc / static_cast<double>(T - j);
      }
      for (std::size_t t = 0; t < T; ++t)
        for (int c = 0; c < nc; ++c) {
          const double v = std::norm(series[(t * nm + m) * nc + c]);
          (t < T / 2 ? st.first_half : st.second_half) += v;
        }
    }
    st.first_half /= static_cast<double>(T / 2);
    st.second_half /= static_cast<double>(T - T / 2);
  }

  DiffusivityEstimate est;
  est.members = E;
  est.modes_used = archive.modes;

  // Stationarity screen on the equal-time correlation.
  {
    double mean = 0.0, sq = 0.0;
    for (const auto& st : stats) mean += st.first_half - st.second_half;
    mean /= static_cast<double>(E);
    for (const auto& st : stats) sq += std::pow(st.first_half - st.second_half - mean, 2);
    const double se = std::sqrt(sq / static_cast<double>(E - 1) / static_cast<double>(E));
    est.stationarity_z = se > 0.0 ? mean / se : 0.0;
    if (std::abs(est.stationarity_z) > options.stationarity_z)
      throw NonStationaryError("equal-time correlation drifts between halves (z = " +
                               std::to_string(est.stationarity_z) + ")");
  }

  auto ensemble_mean = [&](const std::vector<std::size_t>& pick) {
    std::vector<std::vector<double>> mean(nm);
    for (std::size_t m = 0; m < nm; ++m) {
      mean[m].assign(max_lag[m] + 1, 0.0);
      for (std::size_t e : pick)
        for (std::size_t j = 0; j <= max_lag[m]; ++j) mean[m][j] += stats[e].corr[m][j];
      for (auto& v : mean[m]) v /= static_cast<double>(pick.size());
    }
    return mean;
  };
  std::vector<std::size_t> all(E);
  for (std::size_t e = 0; e < E; ++e) all[e] = e;
  const auto mean_corr = ensemble_mean(all);

  // Inverse-variance weights from the delta method on C(tau) / C(0) across members.
  std::vector<double> weights(pts.size(), 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    const double c0 = mean_corr[p.mode][0];
    const double r = mean_corr[p.mode][p.lag] / c0;
    double var = 0.0;
    for (const auto& st : stats) {
      const double dev = st.corr[p.mode][p.lag] - r * st.corr[p.mode][0];
      var += dev * dev;
    }
    var /= static_cast<double>(E - 1) * static_cast<double>(E) * c0 * c0;
    const double var_y = r > 0.0 ? var / (r * r) : 0.0;
    weights[i] = var_y > 0.0 ? 1.0 / var_y : 0.0;
  }

  est.nu_hat = fit_slope(pts, mean_corr, weights, &est.residual);
  est.points = pts.size();
  est.fit_t0 = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    const double tau = static_cast<double>(p.lag) * archive.sample_dt;
    est.fit_t0 = std::min(est.fit_t0, tau);
    est.fit_t1 = std::max(est.fit_t1, tau);
  }

  NormalStream rng(DrawAddress{options.seed, 0, DrawPurpose::bootstrap, 0, 0});
  std::vector<double> boots;
  boots.reserve(options.bootstrap);
  std::vector<std::size_t> pick(E);
  for (int b = 0; b < options.bootstrap; ++b) {
    for (auto& e : pick) e = static_cast<std::size_t>(rng.uniform() * static_cast<double>(E)) % E;
    const double s = fit_slope(pts, ensemble_mean(pick), weights, nullptr);
    if (std::isfinite(s)) boots.push_back(s);
  }
  if (boots.size() >= 2) {
    std::sort(boots.begin(), boots.end());
    auto q = [&](double p) {
      const double pos = p * static_cast<double>(boots.size() - 1);
      const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, boots.size() - 1);
      return boots[lo] + (pos - static_cast<double>(lo)) * (boots[hi] - boots[lo]);
    };
    est.ci_low = std::min(q(0.025), est.nu_hat);
    est.ci_high = std::max(q(0.975), est.nu_hat);
  } else {
    est.ci_low = est.ci_high = est.nu_hat;
  }
  return est;
}

ModeArchive synthetic_ou_archive(const std::vector<Vec>& modes, int components, double nu, double sample_dt,
                                 std::size_t samples, std::size_t members, std::uint64_t seed) {
  ModeArchive ar;
  ar.sample_dt = sample_dt;
  ar.components = components;
  ar.modes = modes;
  const std::size_t nm = modes.size();
  ar.members.assign(members, std::vector<cplx>(samples * nm * components));
  for (std::size_t e = 0; e < members; ++e) {
    NormalStream rng(DrawAddress{seed, static_cast<std::uint32_t>(e), DrawPurpose::generic, 0, 0});
    auto& s = ar.members[e];
    const double h = std::sqrt(0.5);
    for (std::size_t m = 0; m < nm; ++m) {
      const double a = nu * std::pow(2.0 * std::numbers::pi, 2.0) * norm2(modes[m]);
      const double decay = std::exp(-a * sample_dt);
      const double kick = std::sqrt(-std::expm1(-2.0 * a * sample_dt));
      for (int c = 0; c < components; ++c) {
        cplx x{h * rng.next(), h * rng.next()};
        for (std::size_t t = 0; t < samples; ++t) {
          s[(t * nm + m) * components + c] = x;
          x = decay * x + kick * cplx{h * rng.next(), h * rng.next()};
        }
      }
    }
  }
  return ar;
}

}  // namespace fracns
