#pragma once

#include <array>
#include <cstdint>

namespace fracns {

/// Philox4x32-10 block function (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key);

/// What a block of random numbers is used for; keeps draws for different
/// purposes at the same step disjoint.
enum class DrawPurpose : std::uint8_t {
  initial_state = 1,
  increment = 2,
  stress = 3,
  chaos_test = 4,
  bootstrap = 5,
  generic = 6,
};

/// Addresses one random block: (seed, stream, purpose, step, slot, block).
struct DrawAddress {
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;
  DrawPurpose purpose = DrawPurpose::generic;
  std::uint64_t step = 0;  ///< only the low 48 bits are used
  std::uint32_t slot = 0;  ///< typically a mode index
};

/// Stateless Gaussian source: normals(addr, block) always returns the same
/// pair of N(0,1) variates for the same address.
class CounterNormals {
 public:
  explicit CounterNormals(const DrawAddress& addr) : addr_(addr) {}
  /// Two independent standard normals from block b (b < 256).
  std::array<double, 2> pair(std::uint32_t block) const;
  /// Two uniforms in (0,1) from block b.
  std::array<double, 2> uniforms(std::uint32_t block) const;

 private:
  DrawAddress addr_;
};

/// Sequential normal stream built on CounterNormals for code that just wants
/// "the next normal"; deterministic given the address.
class NormalStream {
 public:
  explicit NormalStream(const DrawAddress& addr) : addr_(addr) {}
  double next();
  double uniform();
  std::uint64_t next_u64();

 private:
  DrawAddress addr_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fracns
