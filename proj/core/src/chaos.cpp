#include "fracns/chaos.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "fracns/errors.hpp"
#include "fracns/operators.hpp"
#include "fracns/philox.hpp"

namespace fracns {

namespace {

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// Index of p + q in the box, or -1 when the sum leaves it.
std::vector<long> sum_table(const WaveGrid& g) {
  const std::size_t nm = g.mode_count();
  std::vector<long> table(nm * nm, -1);
  for (std::size_t p = 0; p < nm; ++p)
    for (std::size_t q = 0; q < nm; ++q) {
      const auto& a = g.integer_index(p);
      const auto& b = g.integer_index(q);
      const Index s{a[0] + b[0], a[1] + b[1], a[2] + b[2]};
      if (g.contains(s)) table[p * nm + q] = static_cast<long>(g.index(s));
    }
  return table;
}

void check_overflow(const ChaosBox& box, const CutoffProfile& cutoff, BoxOverflow overflow) {
  if (overflow == BoxOverflow::truncate) return;
  if (cutoff.max_axis_index(box.side()) > box.radius())
    throw ConfigError("chaos box of radius " + std::to_string(box.radius()) +
                      " does not hold the cutoff ball; enlarge the box or allow truncation");
}

void require_same_box(const ChaosBox& a, const ChaosBox& b) {
  if (!a.modes().same_shape(b.modes())) throw ShapeError("chaos vectors live on different boxes");
}

}  // namespace

ChaosBox::ChaosBox(int dim, double side, int radius) : grid_(dim, side, 2 * radius + 1, 2 * radius + 1) {}

std::size_t ChaosBox::level_size(int n) const {
  double entries = std::pow(static_cast<double>(slot_count()), n);
  if (entries > static_cast<double>(kMaxEntries))
    throw ConfigError("chaos level " + std::to_string(n) + " on this box needs " +
                      std::to_string(static_cast<long long>(entries)) + " entries, above the limit of " +
                      std::to_string(kMaxEntries));
  return ipow(slot_count(), n);
}

ChaosVector::ChaosVector(ChaosBoxPtr box, int n_max) : box_(std::move(box)) {
  if (n_max < 0) throw ConfigError("chaos n_max must be non-negative");
  levels_.resize(n_max + 1);
  for (int n = 0; n <= n_max; ++n) levels_[n].assign(box_->level_size(n), cplx{0.0, 0.0});
}

void ChaosVector::symmetrize() {
  const std::size_t S = box_->slot_count();
  for (int n = 2; n <= n_max(); ++n) {
    auto& v = levels_[n];
    std::vector<std::size_t> t(n, 0);
    // Walk all non-decreasing tuples; each one names a permutation orbit.
    while (true) {
      std::vector<std::size_t> perm = t;
      cplx acc{0.0, 0.0};
      std::size_t count = 0;
      do {
        std::size_t lin = 0;
        for (int i = 0; i < n; ++i) lin = lin * S + perm[i];
        acc += v[lin];
        ++count;
      } while (std::next_permutation(perm.begin(), perm.end()));
      const cplx mean = acc / static_cast<double>(count);
      perm = t;
      do {
        std::size_t lin = 0;
        for (int i = 0; i < n; ++i) lin = lin * S + perm[i];
        v[lin] = mean;
      } while (std::next_permutation(perm.begin(), perm.end()));
      int pos = n - 1;
      while (pos >= 0 && t[pos] == S - 1) --pos;
      if (pos < 0) break;
      ++t[pos];
      for (int i = pos + 1; i < n; ++i) t[i] = t[pos];
    }
  }
}

void ChaosVector::project_divfree() {
  const auto& g = box_->modes();
  const int d = g.dim();
  const std::size_t S = box_->slot_count();
  const std::size_t nm = g.mode_count();
  std::vector<Mat> proj(nm);
  for (std::size_t m = 0; m < nm; ++m) proj[m] = leray_multiplier(g.wavevector(m), d);
  const std::size_t zero = g.zero_index();
  for (int n = 1; n <= n_max(); ++n) {
    auto& v = levels_[n];
    for (int p = 0; p < n; ++p) {
      const std::size_t stride = ipow(S, n - 1 - p);
      const std::size_t outer = ipow(S, p);
      for (std::size_t hi = 0; hi < outer; ++hi)
        for (std::size_t m = 0; m < nm; ++m)
          for (std::size_t lo = 0; lo < stride; ++lo) {
            const std::size_t base = (hi * S + m * d) * stride + lo;
            if (m == zero) {
              for (int l = 0; l < d; ++l) v[base + l * stride] = 0.0;
              continue;
            }
            cplx x[3];
            for (int l = 0; l < d; ++l) x[l] = v[base + l * stride];
            for (int l = 0; l < d; ++l) {
              cplx y{0.0, 0.0};
              for (int j = 0; j < d; ++j) y += proj[m][l][j] * x[j];
              v[base + l * stride] = y;
            }
          }
    }
  }
}

void ChaosVector::keep_only(int n) {
  for (int m = 0; m <= n_max(); ++m)
    if (m != n) std::fill(levels_[m].begin(), levels_[m].end(), cplx{0.0, 0.0});
}

ChaosVector& ChaosVector::operator+=(const ChaosVector& other) {
  require_same_box(*box_, other.box());
  if (other.n_max() > n_max()) throw ShapeError("cannot add a chaos vector with more levels");
  for (int n = 0; n <= other.n_max(); ++n)
    for (std::size_t i = 0; i < levels_[n].size(); ++i) levels_[n][i] += other.levels_[n][i];
  return *this;
}

ChaosVector& ChaosVector::operator*=(cplx s) {
  for (auto& lv : levels_)
    for (auto& x : lv) x *= s;
  return *this;
}

cplx fock_inner(const ChaosVector& phi, const ChaosVector& psi) {
  require_same_box(phi.box(), psi.box());
  const int top = std::min(phi.n_max(), psi.n_max());
  const double V = phi.box().volume();
  cplx total{0.0, 0.0};
  double factorial = 1.0;
  for (int n = 0; n <= top; ++n) {
    if (n > 0) factorial *= n;
    const auto& a = phi.level(n);
    const auto& b = psi.level(n);
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * std::conj(b[i]);
    total += factorial / std::pow(V, n) * acc;
  }
  return total;
}

double fock_norm(const ChaosVector& phi) { return std::sqrt(fock_inner(phi, phi).real()); }

namespace {
// Calls f(linear index, sum_i |k_i|^{2 theta}) for every entry of level n.
template <class F>
void for_each_entry_symbol(const ChaosBox& box, int n, double theta, F&& f) {
  const auto& g = box.modes();
  const int d = g.dim();
  const std::size_t S = box.slot_count();
  std::vector<double> pw(S);
  for (std::size_t s = 0; s < S; ++s) pw[s] = std::pow(g.wavenumber(s / d), 2.0 * theta);
  const std::size_t size = ipow(S, n);
  std::vector<std::size_t> t(n, 0);
  for (std::size_t lin = 0; lin < size; ++lin) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += pw[t[i]];
    f(lin, sum);
    for (int i = n - 1; i >= 0; --i) {
      if (++t[i] < S) break;
      t[i] = 0;
    }
  }
}
}  // namespace

double fock_norm_weighted(const ChaosVector& phi, const std::function<double(int)>& weight, double beta,
                          double lambda, double theta) {
  const double c = std::pow(2.0 * std::numbers::pi, 2.0 * theta);
  const double V = phi.box().volume();
  double total = 0.0, factorial = 1.0;
  for (int n = 0; n <= phi.n_max(); ++n) {
    if (n > 0) factorial *= n;
    const double w = weight ? weight(n) : 1.0;
    if (w == 0.0) continue;
    const auto& lv = phi.level(n);
    double acc = 0.0;
    for_each_entry_symbol(phi.box(), n, theta, [&](std::size_t lin, double s) {
      if (lv[lin] == cplx{0.0, 0.0}) return;
      acc += std::pow(lambda + c * s, 2.0 * beta) * std::norm(lv[lin]);
    });
    total += factorial / std::pow(V, n) * w * w * acc;
  }
  return std::sqrt(total);
}

ChaosVector apply_L_theta(const ChaosVector& phi, double theta) {
  ChaosVector out = phi;
  const double c = std::pow(2.0 * std::numbers::pi, 2.0 * theta);
  for (int n = 0; n <= out.n_max(); ++n) {
    auto& lv = out.level(n);
    for_each_entry_symbol(out.box(), n, theta, [&](std::size_t lin, double s) { lv[lin] *= -c * s; });
  }
  return out;
}

ChaosVector apply_G_plus(const ChaosVector& phi, const CutoffProfile& cutoff, double coupling,
                         BoxOverflow overflow, int out_n_max) {
  const auto& box = phi.box();
  check_overflow(box, cutoff, overflow);
  const int top = out_n_max < 0 ? phi.n_max() + 1 : out_n_max;
  ChaosVector out(phi.box_ptr(), top);
  const auto& g = box.modes();
  const int d = g.dim();
  const std::size_t S = box.slot_count();
  const std::size_t nm = g.mode_count();
  const auto sums = sum_table(g);
  std::vector<double> rho(nm);
  for (std::size_t m = 0; m < nm; ++m) rho[m] = cutoff(g.wavevector(m));
  const cplx two_pi_i{0.0, 2.0 * std::numbers::pi};

  for (int n = 1; n + 1 <= top && n <= phi.n_max(); ++n) {
    const auto& in = phi.level(n);
    auto& res = out.level(n + 1);
    const std::size_t rest_size = ipow(S, n - 1);
    const cplx pref = coupling * static_cast<double>(n) * two_pi_i;
    for (std::size_t ka = 0; ka < nm; ++ka) {
      if (rho[ka] == 0.0) continue;
      for (std::size_t kb = 0; kb < nm; ++kb) {
        const long K = sums[ka * nm + kb];
        if (rho[kb] == 0.0 || K < 0) continue;
        const double R = rho[ka] * rho[kb] * rho[static_cast<std::size_t>(K)];
        if (R == 0.0) continue;
        const Vec& kv = g.wavevector(static_cast<std::size_t>(K));
        for (int la = 0; la < d; ++la) {
          const std::size_t in_base = (static_cast<std::size_t>(K) * d + la) * rest_size;
          const std::size_t sa = ka * d + la;
          for (int lb = 0; lb < d; ++lb) {
            if (kv[lb] == 0.0) continue;
            const cplx f = pref * R * kv[lb];
            const std::size_t sb = kb * d + lb;
            for (std::size_t r = 0; r < rest_size; ++r)
              res[(r * S + sa) * S + sb] += f * in[in_base + r];
          }
        }
      }
    }
  }
  out.symmetrize();
  out.project_divfree();
  return out;
}

ChaosVector apply_G_minus(const ChaosVector& phi, const CutoffProfile& cutoff, double coupling,
                          BoxOverflow overflow) {
  const auto& box = phi.box();
  check_overflow(box, cutoff, overflow);
  ChaosVector out(phi.box_ptr(), phi.n_max());
  const auto& g = box.modes();
  const int d = g.dim();
  const std::size_t S = box.slot_count();
  const std::size_t nm = g.mode_count();
  const double V = box.volume();
  const auto sums = sum_table(g);
  std::vector<double> rho(nm);
  for (std::size_t m = 0; m < nm; ++m) rho[m] = cutoff(g.wavevector(m));
  const cplx two_pi_i{0.0, 2.0 * std::numbers::pi};

  // Output level n from input level n + 1; level 0 output carries the factor n = 0.
  for (int n = 1; n + 1 <= phi.n_max(); ++n) {
    const auto& in = phi.level(n + 1);
    auto& res = out.level(n);
    const std::size_t rest_size = ipow(S, n - 1);
    const cplx pref = coupling * two_pi_i * static_cast<double>(n * (n + 1)) / V;
    for (std::size_t p = 0; p < nm; ++p) {
      if (rho[p] == 0.0) continue;
      const Vec& pv = g.wavevector(p);
      for (std::size_t q = 0; q < nm; ++q) {
        const long K = sums[p * nm + q];
        if (rho[q] == 0.0 || K < 0) continue;
        const double R = rho[p] * rho[q] * rho[static_cast<std::size_t>(K)];
        if (R == 0.0) continue;
        const Vec& kv = g.wavevector(static_cast<std::size_t>(K));
        for (std::size_t r = 0; r < rest_size; ++r) {
          auto at = [&](int l1, int l2) {
            return in[((p * d + l1) * S + (q * d + l2)) * rest_size + r];
          };
          cplx trace{0.0, 0.0};
          for (int i = 0; i < d; ++i) trace += at(i, i);
          for (int l = 0; l < d; ++l) {
            cplx transport{0.0, 0.0};
            for (int i = 0; i < d; ++i) transport += kv[i] * at(l, i);
            res[(static_cast<std::size_t>(K) * d + l) * rest_size + r] +=
                pref * R * (transport - pv[l] * trace);
          }
        }
      }
    }
  }
  out.symmetrize();
  out.project_divfree();
  return out;
}

double chaos_truncation_loss(const ChaosBox& box, const CutoffProfile& cutoff) {
  const int K = cutoff.max_axis_index(box.side());
  const WaveGrid ball(box.dim(), box.side(), 2 * K + 1, 2 * K + 1);
  const std::size_t nm = ball.mode_count();
  std::size_t total = 0, outside = 0;
  for (std::size_t p = 0; p < nm; ++p) {
    if (cutoff(ball.wavevector(p)) == 0.0) continue;
    for (std::size_t q = 0; q < nm; ++q) {
      if (cutoff(ball.wavevector(q)) == 0.0) continue;
      const auto& a = ball.integer_index(p);
      const auto& b = ball.integer_index(q);
      const Index s{a[0] + b[0], a[1] + b[1], a[2] + b[2]};
      Vec ks{s[0] / box.side(), s[1] / box.side(), s[2] / box.side()};
      if (cutoff(ks) == 0.0) continue;
      ++total;
      if (!box.modes().contains(a) || !box.modes().contains(b) || !box.modes().contains(s)) ++outside;
    }
  }
  return total ? static_cast<double>(outside) / static_cast<double>(total) : 0.0;
}

ChaosVector random_chaos_vector(const ChaosBoxPtr& box, int n_max, int level, std::uint64_t seed,
                                std::uint32_t stream,
                                const std::function<double(const std::vector<double>&)>& profile) {
  if (level < 0 || level > n_max) throw ConfigError("random_chaos_vector: level outside [0, n_max]");
  ChaosVector v(box, n_max);
  NormalStream normals(DrawAddress{seed, stream, DrawPurpose::chaos_test, static_cast<std::uint64_t>(level), 0});
  auto& lv = v.level(level);
  const auto& g = box->modes();
  const int d = g.dim();
  const std::size_t S = box->slot_count();
  std::vector<std::size_t> t(level, 0);
  std::vector<double> ks(level);
  for (std::size_t lin = 0; lin < lv.size(); ++lin) {
    const double re = normals.next();
    const double im = normals.next();
    double scale = 1.0;
    if (profile) {
      for (int i = 0; i < level; ++i) ks[i] = g.wavenumber(t[i] / d);
      scale = profile(ks);
    }
    lv[lin] = scale * cplx{re, im};
    for (int i = level - 1; i >= 0; --i) {
      if (++t[i] < S) break;
      t[i] = 0;
    }
  }
  v.symmetrize();
  v.project_divfree();
  return v;
}

ChaosVector chaos_from_field(const ChaosBoxPtr& box, int n_max, const SpectralField& h) {
  if (n_max < 1) throw ConfigError("chaos_from_field needs n_max >= 1");
  if (h.grid().side() != box->side() || h.grid().dim() != box->dim())
    throw ShapeError("field and chaos box have different tori");
  ChaosVector v(box, n_max);
  const auto& g = box->modes();
  const int d = g.dim();
  for (std::size_t m = 0; m < g.mode_count(); ++m) {
    const Index& n = g.integer_index(m);
    if (!h.grid().contains(n)) continue;
    const std::size_t hi = h.grid().index(n);
    for (int l = 0; l < d; ++l) v.level(1)[m * d + l] = h(l, hi);
  }
  return v;
}

cplx wick_evaluate(const ChaosVector& phi, int level, const SpectralField& u) {
  if (level < 1 || level > 2) throw ConfigError("wick_evaluate supports levels 1 and 2");
  const auto& g = phi.box().modes();
  const int d = g.dim();
  if (u.grid().side() != g.side() || u.grid().dim() != d) throw ShapeError("sample and chaos box differ");
  const double V = g.volume();
  const std::size_t nm = g.mode_count();
  const std::size_t S = phi.box().slot_count();
  // x[s] = u_l(-k) for slot s = (l, k).
  std::vector<cplx> x(S, cplx{0.0, 0.0});
  for (std::size_t m = 0; m < nm; ++m) {
    const Index& n = g.integer_index(m);
    const Index neg{-n[0], -n[1], -n[2]};
    if (!u.grid().contains(neg)) throw ShapeError("sample grid does not contain the chaos box");
    const std::size_t ui = u.grid().index(neg);
    for (int l = 0; l < d; ++l) x[m * d + l] = u(l, ui);
  }
  const auto& lv = phi.level(level);
  if (level == 1) {
    cplx acc{0.0, 0.0};
    for (std::size_t s = 0; s < S; ++s) acc += lv[s] * x[s];
    return acc / V;
  }
  cplx acc{0.0, 0.0};
  for (std::size_t s1 = 0; s1 < S; ++s1)
    for (std::size_t s2 = 0; s2 < S; ++s2) acc += lv[s1 * S + s2] * x[s1] * x[s2];
  // Subtract E[u_{l1}(-k) u_{l2}(k)] = M^d P_{l1 l2}(k) on the pairs k2 = -k1.
  cplx mean{0.0, 0.0};
  for (std::size_t m = 0; m < nm; ++m) {
    if (m == g.zero_index()) continue;
    const Mat P = leray_multiplier(g.wavevector(m), d);
    const std::size_t mneg = g.negate(m);
    for (int l1 = 0; l1 < d; ++l1)
      for (int l2 = 0; l2 < d; ++l2) mean += lv[(m * d + l1) * S + mneg * d + l2] * V * P[l1][l2];
  }
  return (acc - mean) / (V * V);
}

}  // namespace fracns
