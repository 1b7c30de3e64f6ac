#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "npmle/mixture.hpp"
#include "npmle/rng.hpp"

// Seeded synthetic data: Y ~ ground truth, X = Y + Z with Z ~ N(0, I_d).
// Row i draws from substream(seed, i), so the dataset is bitwise
// reproducible per seed and rows can be generated in any order.

namespace npmle {

inline const char* kGeneratorName = "splitmix64+box-muller";

// components, when given, receives the latent component index per row
// (discrete kinds only; -1 for the continuous kind).
inline SampleSet sample(const GroundTruthMixture& gt, int d, std::int64_t n,
                        std::uint64_t seed,
                        std::vector<int>* components = nullptr) {
  if (n < 1) throw std::invalid_argument("sample: N must be >= 1");
  if (d != gt.d) throw std::invalid_argument("sample: dimension mismatch");
  std::vector<double> rows(n * d);
  if (components) components->assign(n, -1);

  const std::int64_t k = static_cast<std::int64_t>(gt.atom_weights.size());
  for (std::int64_t i = 0; i < n; ++i) {
    NormalStream z(substream(seed, static_cast<std::uint64_t>(i)));
    double* x = rows.data() + i * d;
    if (gt.kind == GroundTruthKind::ContinuousGaussian) {
      for (int c = 0; c < d; ++c) x[c] = z.next();
    } else {
      // component from the same substream's uniform, then the noise draws
      const double u = z.gen.uniform();
      double acc = 0;
      std::int64_t pick = k - 1;
      for (std::int64_t j = 0; j < k; ++j) {
        acc += gt.atom_weights[j];
        if (u < acc) {
          pick = j;
          break;
        }
      }
      if (components) (*components)[i] = static_cast<int>(pick);
      for (int c = 0; c < d; ++c) x[c] = gt.atom_locations[pick * d + c];
    }
    for (int c = 0; c < d; ++c) x[c] += z.next();
  }
  return SampleSet(d, std::move(rows));
}

}  // namespace npmle
