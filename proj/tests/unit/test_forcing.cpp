#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fracns/covariance.hpp"
#include "fracns/errors.hpp"
#include "fracns/forcing.hpp"
#include "fracns/operators.hpp"
#include "fracns/philox.hpp"
#include "fracns/statistics.hpp"
#include "test_support.hpp"

using namespace fracns;
using fracns::testing::within_sigma;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr int kDraws = 10000;
}  // namespace

// Known-answer vectors of the reference Philox4x32-10 implementation.
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}),
            (PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, NormalsAreStandard) {
  std::vector<double> xs;
  for (std::uint32_t slot = 0; slot < 20000; ++slot) {
    CounterNormals n(DrawAddress{1, 0, DrawPurpose::generic, 0, slot});
    const auto p = n.pair(0);
    xs.push_back(p[0]);
    xs.push_back(p[1]);
  }
  const MeanVar mv = mean_var(xs);
  EXPECT_TRUE(within_sigma(mv.mean, 0.0, mv.stderr_mean()));
  EXPECT_NEAR(mv.variance, 1.0, 3 * std::sqrt(2.0 / xs.size()));
  EXPECT_GT(ks_pvalue(ks_statistic_normal(xs, 1.0), xs.size()), 0.001);
}

TEST(Philox, StreamsAreDeterministicAndDistinct) {
  NormalStream a(DrawAddress{9, 1, DrawPurpose::bootstrap, 3, 0});
  NormalStream b(DrawAddress{9, 1, DrawPurpose::bootstrap, 3, 0});
  NormalStream c(DrawAddress{9, 2, DrawPurpose::bootstrap, 3, 0});
  int same = 0;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.next();
    EXPECT_EQ(x, b.next());
    same += (x == c.next());
  }
  EXPECT_EQ(same, 0);
}

TEST(WhiteNoise, CovarianceMatchesProjector) {
  auto g = std::make_shared<const WaveGrid>(3, 1.0, 3, 4);
  NoiseParams p;
  p.seed = 2024;
  const std::size_t k100 = g->index({1, 0, 0}), k110 = g->index({1, 1, 0});
  CovarianceAccumulator acc(5);
  for (int s = 0; s < kDraws; ++s) {
    const SpectralField u = sample_divfree_white_noise(g, p, s);
    ASSERT_EQ(u(0, g->zero_index()), cplx(0.0));
    acc.add({u(0, k100), u(1, k100), u(2, k100), u(0, k110), u(1, k110)});
  }
  const auto c = acc.finish();
  // E|u_i(k)|^2 = M^d P_ii(k): P(1,0,0) = diag(0,1,1); P(1,1,0)_{12} = -1/2.
  EXPECT_NEAR(c.at(0, 0).real(), 0.0, 1e-24);
  EXPECT_TRUE(within_sigma(c.at(1, 1).real(), 1.0, c.se(1, 1).real()));
  EXPECT_TRUE(within_sigma(c.at(2, 2).real(), 1.0, c.se(2, 2).real()));
  EXPECT_TRUE(within_sigma(c.at(1, 2).real(), 0.0, c.se(1, 2).real()));
  EXPECT_TRUE(within_sigma(c.at(3, 4).real(), -0.5, c.se(3, 4).real()));
  EXPECT_TRUE(within_sigma(c.at(3, 4).imag(), 0.0, c.se(3, 4).imag()));
  EXPECT_TRUE(within_sigma(c.at(3, 3).real(), 0.5, c.se(3, 3).real()));
}

TEST(WhiteNoise, VolumeScaling) {
  auto g = std::make_shared<const WaveGrid>(2, 2.5, 5, 8);
  NoiseParams p;
  const std::size_t m = g->index({0, 1, 0});
  std::vector<double> re;
  for (int s = 0; s < kDraws; ++s) re.push_back(sample_divfree_white_noise(g, p, s)(0, m).real());
  const MeanVar mv = mean_var(re);
  // Re u_1 at k = (0, 1/M) has variance M^d / 2.
  EXPECT_NEAR(mv.variance, 2.5 * 2.5 / 2, 3 * mv.variance * std::sqrt(2.0 / kDraws));
}

TEST(WhiteNoise, RealAndDivergenceFree) {
  auto g = WaveGrid::for_cutoff(3, 1.0, 3.0);
  NoiseParams p;
  p.seed = 5;
  const SpectralField u = sample_divfree_white_noise(g, p);
  EXPECT_EQ(conjugate_symmetry_error(u), 0.0);
  EXPECT_LE(divergence_residual(u), 1e-12);
  const SpectralField again = sample_divfree_white_noise(g, p);
  EXPECT_EQ(u.data(), again.data());
  p.stream_id = 1;
  EXPECT_NE(u.data(), sample_divfree_white_noise(g, p).data());
}

TEST(ForcingIncrement, VarianceAndIndependence) {
  auto g = std::make_shared<const WaveGrid>(3, 1.0, 3, 4);
  NoiseParams p;
  p.seed = 77;
  const double dt = 0.01;
  const std::size_t m = g->index({1, 0, 0});
  std::vector<double> re, im, lag_prod;
  cplx prev{};
  for (int s = 0; s < kDraws; ++s) {
    const SpectralField inc = sample_forcing_increment(g, 1.0, dt, p, s);
    ASSERT_EQ(inc(1, g->zero_index()), cplx(0.0));
    const cplx v = inc(1, m);
    re.push_back(v.real());
    im.push_back(v.imag());
    if (s > 0) lag_prod.push_back((v * std::conj(prev)).real());
    prev = v;
  }
  // E|u_2(k)|^2 = 2 dt (2 pi)^2, split evenly between the real and imaginary parts.
  const double expect = 2 * dt * 4 * kPi * kPi;
  const MeanVar r = mean_var(re), i = mean_var(im);
  const double total = r.variance + i.variance;
  EXPECT_NEAR(total, expect, 3 * expect / std::sqrt(kDraws));
  const MeanVar lag = mean_var(lag_prod);
  EXPECT_TRUE(within_sigma(lag.mean, 0.0, lag.stderr_mean()));
}

TEST(ForcingIncrement, RejectsBadStep) {
  auto g = std::make_shared<const WaveGrid>(2, 1.0, 3, 4);
  EXPECT_THROW(sample_forcing_increment(g, 1.0, 0.0, NoiseParams{}, 0), ConfigError);
}

TEST(Stress, DeviatoricCovarianceDensity) {
  auto g = std::make_shared<const WaveGrid>(3, 1.0, 3, 4);
  NoiseParams p;
  p.viscosity = 0.7;
  p.thermal_energy = 1.3;
  p.density = 0.9;
  p.seed = 3;
  const double s = 2 * 0.7 * 1.3 / 0.9;
  const std::size_t m = g->index({1, -1, 0});
  CovarianceAccumulator acc(3);
  for (int n = 0; n < kDraws; ++n) {
    const StressField t = sample_ll_stress(g, p, n);
    acc.add({t(0, 0, m), t(1, 1, m), t(0, 1, m)});
    ASSERT_EQ(t(0, 1, m), t(1, 0, m));
    ASSERT_NEAR(std::abs(t(0, 0, m) + t(1, 1, m) + t(2, 2, m)), 0.0, 1e-14);
  }
  const auto c = acc.finish();
  EXPECT_TRUE(within_sigma(c.at(0, 0).real(), s * 4.0 / 3.0, c.se(0, 0).real()));
  EXPECT_TRUE(within_sigma(c.at(2, 2).real(), s, c.se(2, 2).real()));
  EXPECT_TRUE(within_sigma(c.at(0, 1).real(), -2.0 / 3.0 * s, c.se(0, 1).real()));
}

TEST(Stress, RejectsTwoDimensions) {
  auto g = std::make_shared<const WaveGrid>(2, 1.0, 3, 4);
  EXPECT_THROW(sample_ll_stress(g, NoiseParams{}), ConfigError);
}

TEST(Stress, ProjectedDivergenceMatchesHalfLaplacianForcing) {
  auto g = std::make_shared<const WaveGrid>(3, 1.0, 3, 4);
  NoiseParams p;
  p.seed = 8;
  const std::size_t m = g->index({1, 1, 0});
  CovarianceAccumulator acc(3);
  for (int n = 0; n < kDraws; ++n) {
    const SpectralField f = leray_div_stress(sample_ll_stress(g, p, n));
    ASSERT_EQ(f(0, g->zero_index()), cplx(0.0));
    ASSERT_LE(divergence_residual(f), 1e-12);
    acc.add({f(0, m), f(1, m), f(2, m)});
  }
  const auto c = acc.finish();
  // s (2 pi |k|)^2 M^d P(k), the oracle derived by hand from the stress covariance.
  const double scale = 2.0 * 4 * kPi * kPi * 2.0;
  const Mat P = leray_multiplier(g->wavevector(m), 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      EXPECT_TRUE(within_sigma(c.at(i, j).real(), scale * P[i][j], c.se(i, j).real())) << i << j;
      EXPECT_TRUE(within_sigma(c.at(i, j).imag(), 0.0, c.se(i, j).imag())) << i << j;
    }
}

TEST(Covariance, IidComplexGaussiansGiveIdentity) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  std::vector<std::vector<cplx>> rows;
  for (int s = 0; s < kDraws; ++s) {
    std::vector<cplx> r(3);
    for (auto& x : r) x = cplx{n01(rng), n01(rng)} / std::numbers::sqrt2;
    rows.push_back(r);
  }
  const auto c = empirical_covariance(rows);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      EXPECT_TRUE(within_sigma(c.at(a, b).real(), a == b ? 1.0 : 0.0, c.se(a, b).real()));
      EXPECT_TRUE(within_sigma(c.at(a, b).imag(), 0.0, c.se(a, b).imag()));
    }
}

TEST(Covariance, PerfectlyCorrelatedPair) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n01;
  double prev_se = 1e300;
  for (int n : {100, 1000, 10000, 100000}) {
    std::vector<std::vector<cplx>> rows;
    for (int s = 0; s < n; ++s) {
      const double z = n01(rng);
      rows.push_back({z, z});
    }
    const auto c = empirical_covariance(rows);
    EXPECT_DOUBLE_EQ(c.at(0, 1).real(), c.at(0, 0).real());
    EXPECT_TRUE(within_sigma(c.at(0, 1).real(), 1.0, c.se(0, 1).real()));
    EXPECT_LT(c.se(0, 1).real(), prev_se);
    prev_se = c.se(0, 1).real();
  }
  EXPECT_LT(prev_se, 0.01);
}

TEST(Covariance, MixedGaussianAgainstClosedForm) {
  // x = A z with z standard complex: C = A A^H.
  const cplx A[2][2] = {{{1.0, 0.5}, {0.2, 0.0}}, {{-0.3, 0.1}, {0.8, -0.4}}};
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  std::vector<std::vector<cplx>> rows;
  for (int s = 0; s < kDraws; ++s) {
    const cplx z0{n01(rng) / std::numbers::sqrt2, n01(rng) / std::numbers::sqrt2};
    const cplx z1{n01(rng) / std::numbers::sqrt2, n01(rng) / std::numbers::sqrt2};
    rows.push_back({A[0][0] * z0 + A[0][1] * z1, A[1][0] * z0 + A[1][1] * z1});
  }
  const auto c = empirical_covariance(rows);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const cplx expect = A[a][0] * std::conj(A[b][0]) + A[a][1] * std::conj(A[b][1]);
      EXPECT_TRUE(within_sigma(c.at(a, b).real(), expect.real(), c.se(a, b).real())) << a << b;
      EXPECT_TRUE(within_sigma(c.at(a, b).imag(), expect.imag(), c.se(a, b).imag())) << a << b;
    }
}

TEST(Covariance, FieldProbesAndSmallSamples) {
  auto g = std::make_shared<const WaveGrid>(3, 1.0, 3, 4);
  std::vector<SpectralField> fields;
  NoiseParams p;
  for (int s = 0; s < 50; ++s) fields.push_back(sample_divfree_white_noise(g, p, s));
  const auto c = empirical_covariance(fields, {{1, g->index({1, 0, 0})}, {2, g->index({1, 0, 0})}});
  EXPECT_EQ(c.dim, 2u);
  EXPECT_EQ(c.samples, 50u);
  const auto two = empirical_covariance(std::vector<std::vector<cplx>>{{1.0}, {2.0}});
  EXPECT_DOUBLE_EQ(two.at(0, 0).real(), 0.5);
  EXPECT_TRUE(std::isnan(two.se(0, 0).real()));
  EXPECT_THROW(empirical_covariance(std::vector<std::vector<cplx>>{{1.0}}), ConfigError);
}
