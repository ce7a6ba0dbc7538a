#pragma once

#include <array>
#include <cstdint>

namespace mf {

// xoshiro256** seeded through splitmix64, with Box-Muller normals.
//
// The stream is fully specified so other implementations can reproduce it:
//   state[i]   = splitmix64 outputs 0..3 starting from `seed`
//   uniform()  = (next() >> 11) * 2^-53                       in [0, 1)
//   normal()   = pairs (u1, u2) of uniforms; r = sqrt(-2 ln(1 - u1)),
//                returns r*cos(2 pi u2), then caches r*sin(2 pi u2)
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next();
  double uniform();
  double normal();
  // Uniform integer in [lo, hi] (inclusive), by rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Independent stream derived from this generator's seed and a stream id.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::array<std::uint64_t, 4> state_{};
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t& x);

}  // namespace mf
