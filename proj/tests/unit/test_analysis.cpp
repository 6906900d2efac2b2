#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fracns/diffusivity.hpp"
#include "fracns/errors.hpp"
#include "fracns/statistics.hpp"
#include "fracns/vartheta.hpp"

using namespace fracns;

namespace {

constexpr double kPi = std::numbers::pi;

/// Plain lattice sum on the unit torus with the sharp cutoff.
double lattice_oracle(const Index& k, double lambda, int N) {
  auto in_ball = [&](int a, int b, int c) { return a * a + b * b + c * c <= N * N; };
  if (!in_ball(k[0], k[1], k[2])) return 0.0;
  double acc = 0;
  for (int a = -N; a <= N; ++a)
    for (int b = -N; b <= N; ++b)
      for (int c = -N; c <= N; ++c) {
        const int x = k[0] - a, y = k[1] - b, z = k[2] - c;
        if (!in_ball(a, b, c) || !in_ball(x, y, z)) continue;
        acc += 1.0 / (lambda + a * a + b * b + c * c + x * x + y * y + z * z);
      }
  return acc / N;
}

/// Midpoint rule in (|x|, cos angle) about the origin for k_N along the first axis (d = 3).
double lens_oracle(double kappa, double r, double c) {
  const int ns = 2000, nt = 2000;
  double acc = 0;
  for (int i = 0; i < ns; ++i) {
    const double s = (i + 0.5) * r / ns;
    for (int j = 0; j < nt; ++j) {
      const double t = -1 + (j + 0.5) * 2.0 / nt;
      if (s * s + kappa * kappa - 2 * s * kappa * t > r * r) continue;
      acc += s * s / (c + 2 * s * s + kappa * kappa - 2 * s * kappa * t);
    }
  }
  return 2 * kPi * acc * (r / ns) * (2.0 / nt);
}

}  // namespace

TEST(Formulas, OmegaD) {
  EXPECT_NEAR(omega_d(2), 2 * kPi, 1e-12);
  EXPECT_NEAR(omega_d(3), 4 * kPi, 1e-12);
  EXPECT_NEAR(omega_d(4), 2 * kPi * kPi, 1e-12);
}

TEST(Formulas, NuEff) {
  for (int d : {2, 3, 4}) EXPECT_EQ(nu_eff(d, 0.0), 1.0);
  EXPECT_NEAR(nu_eff(2, std::sqrt(2 * kPi)), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(nu_eff(3, 1.0), std::sqrt(1 + 1 / kPi), 1e-12);
  EXPECT_FALSE(nu_eff_is_conjecture(2));
  EXPECT_TRUE(nu_eff_is_conjecture(3));
}

TEST(Formulas, LandauLifshitzNormalization) {
  EXPECT_EQ(g_hat(0.0, 2.0, 3.0, 4.0, 3), 1.0);
  EXPECT_NEAR(g_hat(1.0, 1.0, 1.0, 1.0, 3), std::sqrt(1 + 1 / kPi), 1e-12);
  const auto n = ll_normalization(2.0, 1.0, 4.0);
  EXPECT_NEAR(n.amplitude, 2.0, 1e-12);
  EXPECT_NEAR(n.time, 0.5, 1e-12);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int t = 0; t < 200; ++t) {
    const double lh = u(rng), nu = u(rng), kt = u(rng), rho = u(rng);
    for (int d : {3, 4, 5}) {
      const double g = g_hat(lh, nu, kt, rho, d);
      EXPECT_NEAR(g, nu_eff(d, lh * std::sqrt(kt / (rho * nu * nu))), 1e-12 * g);
    }
  }
  EXPECT_THROW(g_hat(1.0, 1.0, 1.0, 1.0, 2), ConfigError);
  EXPECT_THROW(ll_normalization(0.0, 1.0, 1.0), ConfigError);
}

TEST(Vartheta, MatchesIndependentLatticeSum) {
  for (int N : {2, 4, 6})
    for (const Index& k : {Index{1, 0, 0}, Index{1, 1, 0}, Index{2, -1, 1}, Index{0, 0, 0}})
      for (double lambda : {0.1, 1.0}) {
        const double ours = vartheta_N({double(k[0]), double(k[1]), double(k[2])}, lambda,
                                       CutoffProfile::sharp(N), 3, 1.0);
        EXPECT_NEAR(ours, lattice_oracle(k, lambda, N), 1e-12 * ours) << N;
      }
}

TEST(Vartheta, LatticeSpacingNormalization) {
  // Doubling the torus at doubled cutoff gives a Riemann sum of the same integral.
  const double a = vartheta_N({1, 0, 0}, 0.5, CutoffProfile::sharp(4), 3, 1.0);
  const double b = vartheta_N({1, 0, 0}, 0.5, CutoffProfile::sharp(4), 3, 2.0);
  EXPECT_NEAR(b / a, 1.0, 0.1);
}

TEST(Vartheta, DecreasesToZeroInLambda) {
  double prev = 1e300;
  for (double lambda : {0.0, 0.5, 1.0, 10.0, 100.0, 1e4, 1e8}) {
    const double v = vartheta_N({1, 1, 0}, lambda, CutoffProfile::sharp(5), 3, 1.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 1e-5);
}

TEST(Vartheta, UpperBound) {
  for (int N : {4, 8, 12})
    for (const Vec& k : {Vec{1, 0, 0}, Vec{1, 1, 0}, Vec{2, 1, 0}, Vec{1, 1, 1}}) {
      const double lambda = 1.0;
      const Vec kN{k[0] / N, k[1] / N, k[2] / N};
      const double v = vartheta_N(k, lambda, CutoffProfile::sharp(N), 3, 1.0);
      EXPECT_LE(v, theta_integral(kN, 1.0 + 1.0 / N, lambda / (N * N), 3)) << N;
    }
}

TEST(ThetaIntegral, BallClosedForms) {
  for (double c : {0.01, 0.5, 2.0})
    for (double r : {0.5, 1.0, 1.3}) {
      const double d3 = 4 * kPi * (r / 2 - std::sqrt(c) / (2 * std::sqrt(2.0)) * std::atan(r * std::sqrt(2 / c)));
      EXPECT_NEAR(theta_integral({0, 0, 0}, r, c, 3), d3, 1e-9 * d3);
      const double d2 = kPi / 2 * std::log(1 + 2 * r * r / c);
      EXPECT_NEAR(theta_integral({0, 0, 0}, r, c, 2), d2, 1e-9 * d2);
    }
}

TEST(ThetaIntegral, LensAgainstMidpointRule) {
  for (double kappa : {0.1, 0.5, 1.2})
    for (double c : {0.05, 1.0}) {
      const double ours = theta_integral({kappa, 0, 0}, 1.0, c, 3);
      EXPECT_NEAR(ours, lens_oracle(kappa, 1.0, c), 2e-3 * ours) << kappa << " " << c;
      EXPECT_NEAR(ours, theta_integral({0, kappa / std::sqrt(2.0), kappa / std::sqrt(2.0)}, 1.0, c, 3), 1e-9 * ours);
    }
  EXPECT_EQ(theta_integral({2.5, 0, 0}, 1.0, 0.1, 3), 0.0);
}

TEST(ThetaIntegral, LimitValue) {
  EXPECT_NEAR(vartheta_limit(3), 2 * kPi, 1e-12);
  EXPECT_NEAR(theta_integral({0, 0, 0}, 1.0, 0.0, 3), 2 * kPi, 1e-9);
  EXPECT_THROW(vartheta_limit(2), ConfigError);
}

TEST(Diffusivity, RecoversSyntheticOrnsteinUhlenbeck) {
  const std::vector<Vec> modes = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}};
  for (double nu : {1.0, 2.5}) {
    const auto archive = synthetic_ou_archive(modes, 2, nu, 0.001, 1200, 48, 17);
    const auto est = estimate_diffusivity(archive);
    EXPECT_LE(est.ci_low, est.nu_hat);
    EXPECT_LE(est.nu_hat, est.ci_high);
    EXPECT_LE(est.ci_low, nu) << est.nu_hat;
    EXPECT_GE(est.ci_high, nu) << est.nu_hat;
    EXPECT_GT(est.fit_t1, est.fit_t0);
    EXPECT_EQ(est.members, 48u);
  }
}

TEST(Diffusivity, IntervalShrinksWithEnsemble) {
  const std::vector<Vec> modes = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const auto small = estimate_diffusivity(synthetic_ou_archive(modes, 2, 1.0, 0.001, 800, 16, 3));
  const auto large = estimate_diffusivity(synthetic_ou_archive(modes, 2, 1.0, 0.001, 800, 64, 4));
  const double ratio = (small.ci_high - small.ci_low) / (large.ci_high - large.ci_low);
  EXPECT_GT(ratio, 1.3);
  EXPECT_LT(ratio, 3.0);
}

TEST(Diffusivity, RefusesNonStationaryInput) {
  const std::vector<Vec> modes = {{1, 0, 0}, {0, 1, 0}};
  auto archive = synthetic_ou_archive(modes, 2, 1.0, 0.001, 800, 32, 5);
  for (auto& member : archive.members)
    for (std::size_t i = member.size() / 2; i < member.size(); ++i) member[i] *= 2.0;
  EXPECT_THROW(estimate_diffusivity(archive), NonStationaryError);
}

TEST(Statistics, KolmogorovSmirnov) {
  // Two points at the quartiles of N(0, 1): the largest gap is 1/4.
  const double q = 0.6744897501960817;
  EXPECT_NEAR(ks_statistic_normal({-q, q}, 1.0), 0.25, 1e-9);
  EXPECT_NEAR(ks_statistic_normal({-2 * q, 2 * q}, 2.0), 0.25, 1e-9);
  // Asymptotic Kolmogorov tail: P(K > 1.3581) = 0.05.
  const std::size_t n = 1000000;
  EXPECT_NEAR(ks_pvalue(1.3581 / std::sqrt(double(n)), n), 0.05, 2e-4);
  EXPECT_NEAR(ks_pvalue(1e-9, 50), 1.0, 1e-12);
  EXPECT_LT(ks_pvalue(0.5, 50), 1e-9);
}

TEST(Statistics, LineFitAndMoments) {
  const std::vector<double> x = {1, 2, 3, 4, 5}, y = {3, 5, 7, 9, 11};
  const LineFit f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-13);
  EXPECT_NEAR(f.slope_stderr, 0.0, 1e-12);
  const MeanVar mv = mean_var(x);
  EXPECT_DOUBLE_EQ(mv.mean, 3.0);
  EXPECT_DOUBLE_EQ(mv.variance, 2.5);
  EXPECT_NEAR(mv.stderr_mean(), std::sqrt(0.5), 1e-15);
}
