#pragma once

#include <cmath>
#include <cstdint>

// Counter-free splittable RNG. SplitMix64 streams, 53-bit uniforms,
// Box-Muller normals. Substreams are derived by hashing (seed, index),
// so row-parallel generation is deterministic regardless of schedule.
// Scheme name recorded in dataset metadata: "splitmix64+box-muller".

namespace npmle {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    return mix64(z);
  }

  // uniform in [0, 1), 53 random bits
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1], safe under log()
  double uniform_pos() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }
};

// substream seed for (seed, index); index may be a row or trial number
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed + (index + 1) * 0x9e3779b97f4a7c15ULL);
}

// Box-Muller on top of a SplitMix64 stream; caches the sine branch.
struct NormalStream {
  SplitMix64 gen;
  double spare = 0;
  bool has_spare = false;

  explicit NormalStream(std::uint64_t seed) : gen(seed) {}

  double next() {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    const double u1 = gen.uniform_pos();
    const double u2 = gen.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare = r * std::sin(a);
    has_spare = true;
    return r * std::cos(a);
  }
};

}  // namespace npmle
