#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fracns/chaos.hpp"

namespace fracns {

/// (d + 2) / (4 theta) + zeta ((1 v theta) - 1) / (2 theta).
double lambda_theta_zeta(int dim, double theta, double zeta);
/// Power of the number operator on the right-hand side: 1 + (1 - zeta)/2 (1 - 1/(theta v 1)).
double number_power(double theta, double zeta);

enum class GeneratorPart { plus, minus };

struct RatioBoundParams {
  GeneratorPart part = GeneratorPart::plus;
  int dim = 3;
  double theta = 1.0;
  double beta = 0.25;
  double zeta = 1.0;
  double lambda = 1.0;
  double side = 0.5;           ///< torus side; box radius is floor(N * side)
  std::vector<int> cutoffs{4, 8, 16};
  int level = 1;               ///< chaos level of the test vectors
  int trials = 8;
  /// Test kernels are scaled by prod_i (1 + |k_i|^2)^(-decay / 2).
  double decay = 3.0;
  std::uint64_t seed = 1;
};

/// Both sides of one estimate for one test vector.
struct EstimateSides {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Level-2 test kernel given blockwise: fill block[a][b] = psi((a, p), (b, q)) for
/// mode indices p, q of the box. Must satisfy psi(q, p) = psi(p, q)^T.
using PairKernel = std::function<void(std::size_t p, std::size_t q, cplx block[3][3])>;

/// Sides of the raising estimate for a level-1 kernel (slots mode * d + l of `box`),
/// streaming over cutoff pairs instead of storing the level-2 output.
EstimateSides raising_sides_sparse(const ChaosBox& box, const std::vector<cplx>& level1, const CutoffProfile& cutoff,
                                   const RatioBoundParams& params);
/// Sides of the lowering estimate for a level-2 kernel supported on cutoff modes.
EstimateSides lowering_sides_sparse(const ChaosBox& box, const PairKernel& kernel, const CutoffProfile& cutoff,
                                    const RatioBoundParams& params);
/// The same two sides through the dense operators (small boxes only).
EstimateSides estimate_sides_dense(const ChaosVector& phi, const CutoffProfile& cutoff, const RatioBoundParams& params);

/// Random symmetric divergence-free level-2 kernel, generated on demand from counters,
/// vanishing unless both modes lie in the support of `cutoff`.
PairKernel random_pair_kernel(const ChaosBox& box, const CutoffProfile& cutoff, std::uint64_t seed,
                              std::uint32_t stream, double decay);

struct RatioBoundPoint {
  int cutoff = 0;
  int box_radius = 0;
  double max_ratio = 0.0;
  double min_ratio = 0.0;
  double truncation_loss = 0.0;
};

struct RatioBoundResult {
  std::vector<RatioBoundPoint> points;
  double exponent = 0.0;      ///< lambda_theta^zeta
  bool beta_admissible = false;
  double variation = 0.0;     ///< largest over smallest max_ratio across cutoffs
};

/// Largest observed ratio of the two sides of the weighted generator estimates
/// (weight 1) over random divergence-free test vectors, per cutoff.
RatioBoundResult estimate_ratio_bounds(const RatioBoundParams& params);

struct LevelScaling {
  std::vector<int> levels;
  std::vector<double> lhs, rhs;  ///< both sides for h^{(x) n}
};

/// Both sides of the raising estimate on product vectors h^{(x) n}, n in levels.
LevelScaling generator_level_scaling(const RatioBoundParams& params, double cutoff, const std::vector<int>& levels);

}  // namespace fracns
