#include <doctest.h>

#include <cmath>
#include <vector>

#include "npmle/datagen.hpp"
#include "npmle/optimizers.hpp"
#include "npmle/rng.hpp"

using namespace npmle;

TEST_CASE("sampling is a pure function of the seed") {
  const auto gt = GroundTruthMixture::discrete_three_atom(2);
  SampleSet a = sample(gt, 2, 500, 99);
  SampleSet b = sample(gt, 2, 500, 99);
  SampleSet c = sample(gt, 2, 500, 100);
  CHECK(a.data == b.data);  // bitwise
  CHECK(a.data != c.data);
}

TEST_CASE("rows are independent streams: prefixes agree across N") {
  const auto gt = GroundTruthMixture::continuous(3);
  SampleSet small = sample(gt, 3, 50, 7);
  SampleSet big = sample(gt, 3, 200, 7);
  for (std::int64_t i = 0; i < 50 * 3; ++i) CHECK(small.data[i] == big.data[i]);
}

TEST_CASE("three-atom ground truth moments") {
  const std::int64_t n = 100000;
  const auto gt = GroundTruthMixture::discrete_three_atom(1);
  std::vector<int> comp(n);
  SampleSet s = sample(gt, 1, n, 1234, &comp);

  double mean = 0;
  for (std::int64_t i = 0; i < n; ++i) mean += s.data[i];
  mean /= n;
  // atoms -1, 1, 10 with weight 1/3: mean 10/3, var = E X^2 - mean^2 = 35 - 100/9
  const double sd_mean = std::sqrt(35.0 - 100.0 / 9.0) / std::sqrt((double)n);
  CHECK(std::abs(mean - 10.0 / 3.0) <= 3.0 * sd_mean);

  // latent frequencies within 3 binomial deviations of 1/3
  std::array<std::int64_t, 3> cnt{0, 0, 0};
  for (int c : comp) cnt[c]++;
  const double sd_freq = std::sqrt((1.0 / 3) * (2.0 / 3) / n);
  for (int j = 0; j < 3; ++j)
    CHECK(std::abs(cnt[j] / (double)n - 1.0 / 3.0) <= 3.0 * sd_freq);
}

TEST_CASE("continuous ground truth moments in each coordinate") {
  const std::int64_t n = 100000;
  const int d = 3;
  const auto gt = GroundTruthMixture::continuous(d);
  SampleSet s = sample(gt, d, n, 5678);
  for (int c = 0; c < d; ++c) {
    double mean = 0, var = 0;
    for (std::int64_t i = 0; i < n; ++i) mean += s.data[i * d + c];
    mean /= n;
    for (std::int64_t i = 0; i < n; ++i) {
      const double z = s.data[i * d + c] - mean;
      var += z * z;
    }
    var /= (n - 1);
    // X = mean + noise, both standard normal: var 2
    CHECK(std::abs(mean) <= 3.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(var - 2.0) <= 0.03);
  }
}

TEST_CASE("normal stream passes moment checks at one million draws") {
  const std::int64_t n = 1000000;
  NormalStream ns(substream(31337, 0));
  double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
  std::vector<double> xs(n);
  for (auto& x : xs) x = ns.next();
  for (double x : xs) m1 += x;
  m1 /= n;
  for (double x : xs) {
    const double z = x - m1;
    m2 += z * z;
    m3 += z * z * z;
    m4 += z * z * z * z;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  CHECK(std::abs(m1) <= 3.0 / std::sqrt((double)n));
  CHECK(std::abs(m2 - 1.0) <= 0.005);
  CHECK(std::abs(m3 / std::pow(m2, 1.5)) <= 0.05);       // skewness
  CHECK(std::abs(m4 / (m2 * m2) - 3.0) <= 0.1);          // kurtosis
}

TEST_CASE("substreams decorrelate nearby seeds") {
  // correlation between streams from adjacent seeds should be noise-level
  const int n = 20000;
  NormalStream a(substream(1000, 0)), b(substream(1001, 0));
  double dot = 0;
  for (int i = 0; i < n; ++i) dot += a.next() * b.next();
  CHECK(std::abs(dot / n) <= 4.0 / std::sqrt((double)n));
}

TEST_CASE("particle initialization resamples rows uniformly") {
  // 10 distinct rows; initialize many particles and count row frequencies
  std::vector<double> rows(10);
  for (int i = 0; i < 10; ++i) rows[i] = i;
  SampleSet s(1, rows);
  const std::int64_t m = 100000;
  ParticleMixture rho = init_particles(s, m, 2024);
  std::array<std::int64_t, 10> cnt{};
  for (std::int64_t j = 0; j < m; ++j) {
    const int r = (int)std::lround(rho.locations[j]);
    REQUIRE(r >= 0);
    REQUIRE(r < 10);
    REQUIRE(rho.locations[j] == rows[r]);  // exact copies, no perturbation
    cnt[r]++;
  }
  const double sd = std::sqrt(0.1 * 0.9 / m);
  for (int r = 0; r < 10; ++r)
    CHECK(std::abs(cnt[r] / (double)m - 0.1) <= 3.0 * sd);
  for (std::int64_t j = 0; j < m; ++j)
    CHECK(rho.weight(j) == doctest::Approx(1.0 / m).epsilon(1e-12));
}

TEST_CASE("custom ground truth normalizes weights and validates shape") {
  auto gt = GroundTruthMixture::custom(1, {0.0, 5.0}, {2.0, 6.0});
  CHECK(gt.atom_weights[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(gt.atom_weights[1] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(GroundTruthMixture::custom(2, {0.0}, {1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(sample(gt, 1, 0, 1), std::invalid_argument);
}
