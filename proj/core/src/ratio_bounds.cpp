#include "fracns/ratio_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fracns/errors.hpp"
#include "fracns/operators.hpp"
#include "fracns/philox.hpp"

namespace fracns {

double lambda_theta_zeta(int dim, double theta, double zeta) {
  return (dim + 2) / (4.0 * theta) + zeta * (std::max(1.0, theta) - 1.0) / (2.0 * theta);
}

double number_power(double theta, double zeta) {
  return 1.0 + (1.0 - zeta) / 2.0 * (1.0 - 1.0 / std::max(theta, 1.0));
}

namespace {

struct Ball {
  std::vector<std::size_t> modes;  // box indices with rho != 0, k != 0
  std::vector<double> rho;         // per box index
  std::vector<double> symbol;      // (2 pi |k|)^{2 theta} per box index
  std::vector<Mat> proj;           // per box index
};

Ball make_ball(const ChaosBox& box, const CutoffProfile& cutoff, double theta) {
  const auto& g = box.modes();
  if (cutoff.max_axis_index(g.side()) > box.radius())
    throw ConfigError("chaos box does not hold the cutoff ball");
  Ball b;
  const std::size_t nm = g.mode_count();
  b.rho.resize(nm);
  b.symbol.resize(nm);
  b.proj.resize(nm);
  for (std::size_t m = 0; m < nm; ++m) {
    b.rho[m] = cutoff(g.wavevector(m));
    b.symbol[m] = frac_laplacian_symbol(g.wavenumber(m), theta);
    b.proj[m] = leray_multiplier(g.wavevector(m), g.dim());
    if (b.rho[m] != 0.0 && m != g.zero_index()) b.modes.push_back(m);
  }
  return b;
}

long sum_index(const WaveGrid& g, std::size_t p, std::size_t q) {
  const Index& a = g.integer_index(p);
  const Index& b = g.integer_index(q);
  const Index s{a[0] + b[0], a[1] + b[1], a[2] + b[2]};
  return g.contains(s) ? static_cast<long>(g.index(s)) : -1;
}

}  // namespace

EstimateSides raising_sides_sparse(const ChaosBox& box, const std::vector<cplx>& level1, const CutoffProfile& cutoff,
                                   const RatioBoundParams& p) {
  const auto& g = box.modes();
  const int d = g.dim();
  const double V = g.volume();
  const Ball ball = make_ball(box, cutoff, p.theta);
  const double ex = lambda_theta_zeta(d, p.theta, p.zeta);
  const double np = number_power(p.theta, p.zeta);
  const cplx pref{0.0, 2.0 * std::numbers::pi};

  double rhs = 0.0;
  for (std::size_t m = 0; m < g.mode_count(); ++m)
    for (int l = 0; l < d; ++l)
      rhs += std::pow(p.lambda + ball.symbol[m], 2.0 * p.beta) * std::norm(level1[m * d + l]);
  rhs /= V;  // level 1: 1! / V, number operator weight 1^np = 1
  (void)np;

  double lhs = 0.0;
  for (std::size_t a : ball.modes)
    for (std::size_t b : ball.modes) {
      const long K = sum_index(g, a, b);
      if (K < 0) continue;
      const auto k = static_cast<std::size_t>(K);
      const double R = ball.rho[a] * ball.rho[b] * ball.rho[k];
      if (R == 0.0) continue;
      const Vec& kv = g.wavevector(k);
      // Symmetrized raw output F(i, j) = pref R (K_j phi(i, K) + K_i phi(j, K)) / 2.
      cplx F[3][3];
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          F[i][j] = pref * R * 0.5 * (kv[j] * level1[k * d + i] + kv[i] * level1[k * d + j]);
      const Mat& Pa = ball.proj[a];
      const Mat& Pb = ball.proj[b];
      double block = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          cplx acc{0.0, 0.0};
          for (int x = 0; x < d; ++x)
            for (int y = 0; y < d; ++y) acc += Pa[i][x] * Pb[j][y] * F[x][y];
          block += std::norm(acc);
        }
      lhs += std::pow(p.lambda + ball.symbol[a] + ball.symbol[b], 2.0 * (p.beta - ex)) * block;
    }
  lhs *= 2.0 / (V * V);
  return {std::sqrt(lhs), std::sqrt(rhs)};
}

EstimateSides lowering_sides_sparse(const ChaosBox& box, const PairKernel& kernel, const CutoffProfile& cutoff,
                                    const RatioBoundParams& p) {
  const auto& g = box.modes();
  const int d = g.dim();
  const double V = g.volume();
  const Ball ball = make_ball(box, cutoff, p.theta);
  const double ex = lambda_theta_zeta(d, p.theta, p.zeta);
  const double np = number_power(p.theta, p.zeta);
  const cplx pref = cplx{0.0, 2.0 * std::numbers::pi} * 2.0 / V;  // n (n + 1) with n = 1

  std::vector<cplx> out(g.mode_count() * d, cplx{0.0, 0.0});
  double rhs = 0.0;
  cplx blk[3][3];
  for (std::size_t a : ball.modes)
    for (std::size_t b : ball.modes) {
      kernel(a, b, blk);
      double nrm = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) nrm += std::norm(blk[i][j]);
      rhs += std::pow(p.lambda + ball.symbol[a] + ball.symbol[b], 2.0 * p.beta) * nrm;
      const long K = sum_index(g, a, b);
      if (K < 0) continue;
      const auto k = static_cast<std::size_t>(K);
      const double R = ball.rho[a] * ball.rho[b] * ball.rho[k];
      if (R == 0.0) continue;
      const Vec& kv = g.wavevector(k);
      const Vec& pv = g.wavevector(a);
      cplx trace{0.0, 0.0};
      for (int i = 0; i < d; ++i) trace += blk[i][i];
      for (int l = 0; l < d; ++l) {
        cplx transport{0.0, 0.0};
        for (int i = 0; i < d; ++i) transport += kv[i] * blk[l][i];
        out[k * d + l] += pref * R * (transport - pv[l] * trace);
      }
    }
  rhs *= 2.0 / (V * V) * std::pow(2.0, 2.0 * np);

  double lhs = 0.0;
  for (std::size_t k = 0; k < g.mode_count(); ++k) {
    if (k == g.zero_index()) continue;
    const Mat& P = ball.proj[k];
    for (int l = 0; l < d; ++l) {
      cplx acc{0.0, 0.0};
      for (int j = 0; j < d; ++j) acc += P[l][j] * out[k * d + j];
      lhs += std::pow(p.lambda + ball.symbol[k], 2.0 * (p.beta - ex)) * std::norm(acc);
    }
  }
  lhs /= V;
  return {std::sqrt(lhs), std::sqrt(rhs)};
}

EstimateSides estimate_sides_dense(const ChaosVector& phi, const CutoffProfile& cutoff, const RatioBoundParams& p) {
  const double ex = lambda_theta_zeta(p.dim, p.theta, p.zeta);
  const double np = number_power(p.theta, p.zeta);
  const ChaosVector g = p.part == GeneratorPart::plus ? apply_G_plus(phi, cutoff) : apply_G_minus(phi, cutoff);
  return {fock_norm_weighted(g, {}, p.beta - ex, p.lambda, p.theta),
          fock_norm_weighted(phi, [np](int n) { return std::pow(static_cast<double>(n), np); }, p.beta, p.lambda,
                             p.theta)};
}

PairKernel random_pair_kernel(const ChaosBox& box, const CutoffProfile& cutoff, std::uint64_t seed,
                              std::uint32_t stream, double decay) {
  const auto* g = &box.modes();
  return [g, cutoff, seed, stream, decay](std::size_t p, std::size_t q, cplx block[3][3]) {
    const int d = g->dim();
    if (p == g->zero_index() || q == g->zero_index() || cutoff(g->wavevector(p)) == 0.0 ||
        cutoff(g->wavevector(q)) == 0.0) {
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) block[i][j] = 0.0;
      return;
    }
    const bool swap = q < p;
    const std::size_t lo = swap ? q : p, hi = swap ? p : q;
    CounterNormals normals(DrawAddress{seed, stream, DrawPurpose::chaos_test, lo, static_cast<std::uint32_t>(hi)});
    cplx raw[3][3];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const auto z = normals.pair(static_cast<std::uint32_t>(i * d + j));
        raw[i][j] = {z[0], z[1]};
      }
    if (lo == hi)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < i; ++j) raw[i][j] = raw[j][i] = 0.5 * (raw[i][j] + raw[j][i]);
    // raw is the block for (lo, hi); the block for (hi, lo) is its transpose.
    const Mat P1 = leray_multiplier(g->wavevector(p), d);
    const Mat P2 = leray_multiplier(g->wavevector(q), d);
    const double kp = g->wavenumber(p), kq = g->wavenumber(q);
    const double scale = std::pow((1.0 + kp * kp) * (1.0 + kq * kq), -decay / 2.0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        cplx acc{0.0, 0.0};
        for (int x = 0; x < d; ++x)
          for (int y = 0; y < d; ++y) acc += P1[i][x] * P2[j][y] * (swap ? raw[y][x] : raw[x][y]);
        block[i][j] = scale * acc;
      }
  };
}

RatioBoundResult estimate_ratio_bounds(const RatioBoundParams& p) {
  if (p.trials < 1) throw ConfigError("ratio bounds need at least one trial");
  if (p.part == GeneratorPart::plus && p.level != 1)
    throw ConfigError("ratio bounds for the raising part use level-1 test vectors");
  if (p.part == GeneratorPart::minus && p.level != 2)
    throw ConfigError("ratio bounds for the lowering part use level-2 test vectors");
  RatioBoundResult res;
  res.exponent = lambda_theta_zeta(p.dim, p.theta, p.zeta);
  res.beta_admissible = p.part == GeneratorPart::minus ? p.beta > p.dim / (4.0 * p.theta)
                                                       : p.beta < res.exponent - p.dim / (4.0 * p.theta);
  auto profile = [&](const std::vector<double>& ks) {
    double s = 1.0;
    for (double k : ks) s *= std::pow(1.0 + k * k, -p.decay / 2.0);
    return s;
  };
  for (int N : p.cutoffs) {
    const CutoffProfile cutoff = CutoffProfile::sharp(N);
    const int radius = cutoff.max_axis_index(p.side);
    auto box = std::make_shared<const ChaosBox>(p.dim, p.side, radius);
    RatioBoundPoint pt;
    pt.cutoff = N;
    pt.box_radius = radius;
    pt.min_ratio = std::numeric_limits<double>::infinity();
    for (int t = 0; t < p.trials; ++t) {
      EstimateSides s;
      if (p.part == GeneratorPart::plus) {
        const ChaosVector phi = random_chaos_vector(box, 1, 1, p.seed, static_cast<std::uint32_t>(t), profile);
        s = raising_sides_sparse(*box, phi.level(1), cutoff, p);
      } else {
        s = lowering_sides_sparse(*box, random_pair_kernel(*box, cutoff, p.seed, static_cast<std::uint32_t>(t), p.decay),
                                  cutoff, p);
      }
      if (!(s.rhs > 0.0)) continue;
      const double r = s.lhs / s.rhs;
      pt.max_ratio = std::max(pt.max_ratio, r);
      pt.min_ratio = std::min(pt.min_ratio, r);
    }
    res.points.push_back(pt);
  }
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& pt : res.points) {
    lo = std::min(lo, pt.max_ratio);
    hi = std::max(hi, pt.max_ratio);
  }
  res.variation = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  return res;
}

LevelScaling generator_level_scaling(const RatioBoundParams& p, double cutoff_radius, const std::vector<int>& levels) {
  const CutoffProfile cutoff = CutoffProfile::sharp(cutoff_radius);
  auto box = std::make_shared<const ChaosBox>(p.dim, p.side, cutoff.max_axis_index(p.side));
  const ChaosVector h = random_chaos_vector(box, 1, 1, p.seed, 0);
  const std::size_t S = box->slot_count();
  RatioBoundParams raising = p;
  raising.part = GeneratorPart::plus;
  LevelScaling out;
  for (int n : levels) {
    ChaosVector phi(box, n);
    auto& lv = phi.level(n);
    for (std::size_t lin = 0; lin < lv.size(); ++lin) {
      cplx prod = 1.0;
      std::size_t rest = lin;
      for (int i = 0; i < n; ++i) {
        prod *= h.level(1)[rest % S];
        rest /= S;
      }
      lv[lin] = prod;
    }
    const EstimateSides s = estimate_sides_dense(phi, cutoff, raising);
    out.levels.push_back(n);
    out.lhs.push_back(s.lhs);
    out.rhs.push_back(s.rhs);
  }
  return out;
}

}  // namespace fracns
