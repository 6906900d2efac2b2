#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fracns/chaos.hpp"
#include "fracns/dynamics.hpp"
#include "fracns/errors.hpp"
#include "fracns/ratio_bounds.hpp"
#include "fracns/statistics.hpp"
#include "test_support.hpp"

using namespace fracns;

namespace {

constexpr double kPi = std::numbers::pi;

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

/// Random vector with independent random kernels on every level 0..n_max.
ChaosVector random_multi(const ChaosBoxPtr& box, int n_max, std::uint64_t seed) {
  ChaosVector v(box, n_max);
  for (int n = 0; n <= n_max; ++n) v += random_chaos_vector(box, n_max, n, seed, n);
  return v;
}

/// Level-n kernel h(s_1) ... h(s_n) built from a level-1 kernel.
ChaosVector tensor_power(const ChaosVector& h, int n) {
  ChaosVector out(h.box_ptr(), n);
  const auto& one = h.level(1);
  const std::size_t S = h.box().slot_count();
  auto& lv = out.level(n);
  for (std::size_t lin = 0; lin < lv.size(); ++lin) {
    cplx prod = 1.0;
    std::size_t rest = lin;
    for (int i = 0; i < n; ++i) {
      prod *= one[rest % S];
      rest /= S;
    }
    lv[lin] = prod;
  }
  return out;
}

struct Setup {
  ChaosBoxPtr box;
  CutoffProfile cutoff;
};

std::vector<Setup> setups() {
  return {
      {std::make_shared<const ChaosBox>(3, 1.0, 1), CutoffProfile::sharp(1.8)},
      {std::make_shared<const ChaosBox>(3, 1.0, 1), CutoffProfile::smooth(1.9)},
      {std::make_shared<const ChaosBox>(2, 1.5, 2), CutoffProfile::sharp(1.4)},
  };
}

}  // namespace

TEST(ChaosBox, LevelSizesAndLimit) {
  ChaosBox box(3, 1.0, 1);
  EXPECT_EQ(box.slot_count(), 81u);
  EXPECT_EQ(box.level_size(0), 1u);
  EXPECT_EQ(box.level_size(3), 81u * 81u * 81u);
  EXPECT_THROW(box.level_size(4), ConfigError);
}

TEST(LTheta, LevelZeroAndPointMass) {
  auto box = std::make_shared<const ChaosBox>(3, 1.0, 1);
  ChaosVector v(box, 1);
  v.level(0)[0] = 2.5;
  const std::size_t m = box->modes().index({1, 0, 0});
  v.level(1)[m * 3 + 1] = {1.0, -0.5};
  const ChaosVector out = apply_L_theta(v, 1.0);
  EXPECT_EQ(out.level(0)[0], cplx(0.0));
  EXPECT_NEAR(std::abs(out.level(1)[m * 3 + 1] - (-4 * kPi * kPi) * cplx{1.0, -0.5}), 0.0, 1e-12);
}

TEST(LTheta, SymmetricAndNegative) {
  for (const auto& s : setups()) {
    for (int t = 0; t < 5; ++t) {
      const ChaosVector a = random_multi(s.box, 3, 10 + t), b = random_multi(s.box, 3, 20 + t);
      for (double theta : {0.5, 1.0}) {
        const cplx lhs = fock_inner(apply_L_theta(a, theta), b);
        const cplx rhs = fock_inner(a, apply_L_theta(b, theta));
        EXPECT_LE(rel(lhs, rhs), 1e-12);
        EXPECT_LE(fock_inner(apply_L_theta(a, theta), a).real(), 0.0);
      }
    }
  }
}

TEST(Generators, AnnihilateLevelZero) {
  for (const auto& s : setups()) {
    ChaosVector v(s.box, 2);
    v.level(0)[0] = 3.0;
    EXPECT_EQ(fock_norm(apply_G_plus(v, s.cutoff)), 0.0);
    EXPECT_EQ(fock_norm(apply_G_minus(v, s.cutoff)), 0.0);
  }
}

TEST(Generators, Duality) {
  for (const auto& s : setups()) {
    for (int n = 0; n <= 2; ++n) {
      for (int t = 0; t < 3; ++t) {
        const ChaosVector phi = random_chaos_vector(s.box, n, n, 100 + t, 1);
        const ChaosVector psi = random_chaos_vector(s.box, n + 1, n + 1, 200 + t, 2);
        const cplx lhs = fock_inner(apply_G_plus(phi, s.cutoff), psi);
        const cplx rhs = -fock_inner(phi, apply_G_minus(psi, s.cutoff));
        if (n == 0) {
          EXPECT_EQ(std::abs(lhs), 0.0);
          EXPECT_EQ(std::abs(rhs), 0.0);
        } else {
          ASSERT_GT(std::abs(lhs), 0.0);
          EXPECT_LE(rel(lhs, rhs), 1e-10) << "level " << n;
        }
      }
    }
  }
}

TEST(Generators, DualityOnTensorPowers) {
  const auto s = setups()[0];
  for (int n = 1; n <= 2; ++n) {
    ChaosVector h = random_chaos_vector(s.box, 1, 1, 7, 1);
    ChaosVector g = random_chaos_vector(s.box, 1, 1, 8, 1);
    const ChaosVector hn = tensor_power(h, n), gn = tensor_power(g, n + 1);
    ChaosVector gn_full(s.box, n + 1);
    gn_full += gn;
    const cplx lhs = fock_inner(apply_G_plus(hn, s.cutoff), gn_full);
    const cplx rhs = -fock_inner(hn, apply_G_minus(gn_full, s.cutoff));
    EXPECT_LE(rel(lhs, rhs), 1e-10) << n;
  }
}

TEST(Generators, FullOperatorIsAntiSymmetric) {
  for (const auto& s : setups()) {
    for (int t = 0; t < 4; ++t) {
      const ChaosVector a = random_multi(s.box, 3, 300 + t), b = random_multi(s.box, 3, 400 + t);
      auto G = [&](const ChaosVector& v) {
        ChaosVector out = apply_G_plus(v, s.cutoff, 1.0, BoxOverflow::error, v.n_max());
        out += apply_G_minus(v, s.cutoff);
        return out;
      };
      const cplx lhs = fock_inner(G(a), b);
      const cplx rhs = -fock_inner(a, G(b));
      EXPECT_LE(rel(lhs, rhs), 1e-10);
      EXPECT_LE(std::abs(fock_inner(G(a), a).real()), 1e-10 * fock_norm(G(a)) * fock_norm(a));
    }
  }
}

TEST(Generators, ChaosGrading) {
  for (const auto& s : setups()) {
    for (int n = 1; n <= 2; ++n) {
      const ChaosVector v = random_chaos_vector(s.box, 3, n, 50 + n, 0);
      const ChaosVector up = apply_G_plus(v, s.cutoff, 1.0, BoxOverflow::error, 3);
      const ChaosVector down = apply_G_minus(v, s.cutoff);
      for (int m = 0; m <= 3; ++m) {
        ChaosVector up_m = up, down_m = down;
        up_m.keep_only(m);
        down_m.keep_only(m);
        if (m == n + 1)
          EXPECT_GT(fock_norm(up_m), 0.0);
        else
          EXPECT_EQ(fock_norm(up_m), 0.0) << m;
        if (m == n - 1 && m >= 1)
          EXPECT_GT(fock_norm(down_m), 0.0);
        else if (m != n - 1)
          EXPECT_EQ(fock_norm(down_m), 0.0) << m;
      }
    }
  }
}

TEST(Generators, OutputIsSymmetricAndDivergenceFree) {
  const auto s = setups()[0];
  const ChaosVector v = random_chaos_vector(s.box, 2, 1, 5, 0);
  ChaosVector up = apply_G_plus(v, s.cutoff);
  ChaosVector sym = up;
  sym.symmetrize();
  sym.project_divfree();
  ChaosVector diff = up;
  diff *= -1.0;
  diff += sym;
  EXPECT_LE(fock_norm(diff), 1e-14 * fock_norm(up));
}

TEST(Generators, BoxOverflowNeedsFlag) {
  auto box = std::make_shared<const ChaosBox>(3, 1.0, 1);
  const ChaosVector v = random_chaos_vector(box, 1, 1, 1, 0);
  EXPECT_THROW(apply_G_plus(v, CutoffProfile::sharp(2.5)), ConfigError);
  EXPECT_NO_THROW(apply_G_plus(v, CutoffProfile::sharp(2.5), 1.0, BoxOverflow::truncate));
  EXPECT_GT(chaos_truncation_loss(*box, CutoffProfile::sharp(2.5)), 0.0);
  EXPECT_EQ(chaos_truncation_loss(*box, CutoffProfile::sharp(1.0)), 0.0);
}

TEST(Fock, TensorPowerInnerProduct) {
  auto box = std::make_shared<const ChaosBox>(2, 1.3, 1);
  const ChaosVector h = random_chaos_vector(box, 1, 1, 3, 0);
  const ChaosVector g = random_chaos_vector(box, 1, 1, 4, 0);
  // Direct expansion of <h, g>_1 = M^{-d} sum h conj(g).
  cplx one = 0;
  for (std::size_t i = 0; i < h.level(1).size(); ++i) one += h.level(1)[i] * std::conj(g.level(1)[i]);
  one /= box->volume();
  for (int n = 1; n <= 3; ++n) {
    const cplx lhs = fock_inner(tensor_power(h, n), tensor_power(g, n));
    EXPECT_LE(rel(lhs, std::tgamma(n + 1.0) * std::pow(one, n)), 1e-12) << n;
  }
}

TEST(Fock, WeightedNorm) {
  auto box = std::make_shared<const ChaosBox>(3, 1.0, 1);
  const ChaosVector v = random_multi(box, 2, 9);
  EXPECT_NEAR(fock_norm_weighted(v, [](int) { return 1.0; }, 0.0, 1.0, 1.0), fock_norm(v), 1e-12 * fock_norm(v));
  ChaosVector point(box, 1);
  point.level(1)[box->modes().index({0, 1, 0}) * 3] = 1.0;
  EXPECT_NEAR(fock_norm_weighted(point, {}, 0.5, 1.0, 1.0), std::sqrt(1 + 4 * kPi * kPi) * fock_norm(point), 1e-12);
  EXPECT_THROW(fock_inner(v, ChaosVector(std::make_shared<const ChaosBox>(3, 1.0, 2), 1)), ShapeError);
}

TEST(Generators, LevelOneMatchesNonlinearity) {
  // W_2(G_+ h)(u) = -<B^N(u), h> sample by sample; the second moment is the squared Fock norm.
  const double N = 1.5;
  auto box = std::make_shared<const ChaosBox>(3, 1.0, 1);
  auto grid = WaveGrid::for_cutoff(3, 1.0, N);
  const CutoffProfile cutoff = CutoffProfile::sharp(N);
  SpectralField h = fracns::testing::random_divfree(grid, 77);
  const ChaosVector gh = apply_G_plus(chaos_from_field(box, 1, h), cutoff);
  Nonlinearity B(grid, cutoff);
  std::vector<double> sq;
  for (int s = 0; s < 4000; ++s) {
    NoiseParams p;
    p.seed = 5;
    const SpectralField u = sample_divfree_white_noise(grid, p, s);
    const double pairing = inner(B(u), h);
    const cplx w = wick_evaluate(gh, 2, u);
    ASSERT_NEAR(w.real(), -pairing, 1e-10 * (1 + std::abs(pairing)));
    ASSERT_NEAR(w.imag(), 0.0, 1e-10 * (1 + std::abs(pairing)));
    sq.push_back(pairing * pairing);
  }
  const MeanVar mv = mean_var(sq);
  const double predicted = std::pow(fock_norm(gh), 2);
  EXPECT_TRUE(fracns::testing::within_sigma(mv.mean, predicted, mv.stderr_mean()))
      << mv.mean << " vs " << predicted << " +- " << mv.stderr_mean();
}

TEST(RatioBounds, ExponentAndNumberPower) {
  EXPECT_DOUBLE_EQ(lambda_theta_zeta(3, 1.0, 1.0), 5.0 / 4.0);
  EXPECT_DOUBLE_EQ(lambda_theta_zeta(2, 1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(number_power(1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(number_power(2.0, 0.0), 1.25);
}

TEST(RatioBounds, SparseRaisingMatchesDense) {
  auto box = std::make_shared<const ChaosBox>(3, 0.5, 2);
  const CutoffProfile cutoff = CutoffProfile::sharp(4.0);
  RatioBoundParams p;
  p.part = GeneratorPart::plus;
  p.beta = 0.3;
  p.lambda = 1.7;
  const ChaosVector phi = random_chaos_vector(box, 1, 1, 11, 2);
  const EstimateSides dense = estimate_sides_dense(phi, cutoff, p);
  const EstimateSides sparse = raising_sides_sparse(*box, phi.level(1), cutoff, p);
  EXPECT_GT(dense.lhs, 0.0);
  EXPECT_NEAR(sparse.lhs, dense.lhs, 1e-10 * dense.lhs);
  EXPECT_NEAR(sparse.rhs, dense.rhs, 1e-10 * dense.rhs);
}

TEST(RatioBounds, SparseLoweringMatchesDense) {
  auto box = std::make_shared<const ChaosBox>(3, 0.5, 2);
  const CutoffProfile cutoff = CutoffProfile::sharp(4.0);
  RatioBoundParams p;
  p.part = GeneratorPart::minus;
  p.level = 2;
  p.beta = 0.9;
  p.lambda = 0.6;
  const PairKernel kernel = random_pair_kernel(*box, cutoff, 5, 1, 1.0);
  const std::size_t nm = box->modes().mode_count();
  const std::size_t S = box->slot_count();
  ChaosVector psi(box, 2);
  cplx blk[3][3];
  for (std::size_t a = 0; a < nm; ++a)
    for (std::size_t b = 0; b < nm; ++b) {
      kernel(a, b, blk);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) psi.level(2)[(a * 3 + i) + S * (b * 3 + j)] = blk[i][j];
    }
  // The generated kernel is already symmetric and divergence-free in each slot.
  ChaosVector sym = psi;
  sym.symmetrize();
  sym.project_divfree();
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < psi.level(2).size(); ++i) {
    diff = std::max(diff, std::abs(psi.level(2)[i] - sym.level(2)[i]));
    ref = std::max(ref, std::abs(psi.level(2)[i]));
  }
  EXPECT_LT(diff, 1e-12 * ref);
  const EstimateSides dense = estimate_sides_dense(psi, cutoff, p);
  const EstimateSides sparse = lowering_sides_sparse(*box, kernel, cutoff, p);
  EXPECT_GT(dense.lhs, 0.0);
  EXPECT_NEAR(sparse.lhs, dense.lhs, 1e-10 * dense.lhs);
  EXPECT_NEAR(sparse.rhs, dense.rhs, 1e-10 * dense.rhs);
}

TEST(RatioBounds, UniformAcrossCutoffs) {
  for (GeneratorPart part : {GeneratorPart::plus, GeneratorPart::minus}) {
    RatioBoundParams p;
    p.part = part;
    p.level = part == GeneratorPart::plus ? 1 : 2;
    p.beta = part == GeneratorPart::plus ? 0.25 : 0.9;
    p.trials = 2;
    const RatioBoundResult r = estimate_ratio_bounds(p);
    EXPECT_TRUE(r.beta_admissible);
    ASSERT_EQ(r.points.size(), 3u);
    for (const auto& pt : r.points) {
      EXPECT_TRUE(std::isfinite(pt.max_ratio));
      EXPECT_GT(pt.max_ratio, 0.0);
    }
    EXPECT_LT(r.variation, 2.0) << (part == GeneratorPart::plus ? "raising" : "lowering");
  }
}

TEST(RatioBounds, ProductVectorLevelScaling) {
  RatioBoundParams p;
  p.beta = 0.25;
  p.side = 1.0;
  const LevelScaling s = generator_level_scaling(p, 1.5, {1, 2});
  ASSERT_EQ(s.levels.size(), 2u);
  // Going from h to h (x) h the right side gains the number-operator weight; the ratio stays controlled.
  const double r1 = s.lhs[0] / s.rhs[0];
  const double r2 = s.lhs[1] / s.rhs[1];
  EXPECT_GT(r1, 0.0);
  EXPECT_LT(r2, 2.0 * r1) << r1 << " " << r2;
}
