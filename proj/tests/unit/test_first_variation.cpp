#include <doctest.h>

#include <cmath>
#include <vector>

#include "npmle/first_variation.hpp"
#include "npmle/rng.hpp"

using namespace npmle;

TEST_CASE("field values on the symmetric two-sample instance") {
  KernelSpec k(1);
  SampleSet s(1, {-1.0, 1.0});
  ParticleMixture rho = ParticleMixture::from_weights(1, {0.0}, {1.0});
  FirstVariationField f(k, s, rho);
  std::vector<double> x{0.0};
  CHECK(f.eval(x) == doctest::Approx(-1.0).epsilon(1e-14));
  x[0] = 0.5;
  CHECK(f.eval(x) == doctest::Approx(-0.99512642156859578901).epsilon(1e-14));
}

TEST_CASE("integral against the mixture itself is always minus one") {
  SplitMix64 rng(substream(4242, 0));
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + (int)(rng.next() % 3);
    const std::int64_t n = 1 + (std::int64_t)(rng.next() % 30);
    const std::int64_t m = 1 + (std::int64_t)(rng.next() % 20);
    std::vector<double> xs(n * d), mus(m * d), ws(m);
    for (auto& v : xs) v = 16.0 * rng.uniform() - 8.0;
    for (auto& v : mus) v = 16.0 * rng.uniform() - 8.0;
    for (auto& v : ws) v = rng.uniform_pos();
    KernelSpec k(d);
    SampleSet s(d, xs);
    ParticleMixture rho = ParticleMixture::from_weights(d, mus, ws);
    FirstVariationField f(k, s, rho);
    CHECK(std::abs(f.integral_against(rho) + 1.0) <= 1e-10);
  }
}

TEST_CASE("gradient matches central differences") {
  SplitMix64 rng(substream(4243, 0));
  const double h = 1e-5;
  for (int d : {1, 3}) {
    KernelSpec k(d);
    std::vector<double> xs(7 * d), mus(4 * d), ws(4);
    for (auto& v : xs) v = 4.0 * rng.uniform() - 2.0;
    for (auto& v : mus) v = 4.0 * rng.uniform() - 2.0;
    for (auto& v : ws) v = rng.uniform_pos();
    SampleSet s(d, xs);
    ParticleMixture rho = ParticleMixture::from_weights(d, mus, ws);
    FirstVariationField f(k, s, rho);
    std::vector<double> x(d), g(d), xp(d), xm(d);
    for (int trial = 0; trial < 25; ++trial) {
      for (int c = 0; c < d; ++c) x[c] = 6.0 * rng.uniform() - 3.0;
      f.grad(x, g);
      for (int c = 0; c < d; ++c) {
        xp = x;
        xm = x;
        xp[c] += h;
        xm[c] -= h;
        CHECK(std::abs(g[c] - (f.eval(xp) - f.eval(xm)) / (2 * h)) <= 1e-6);
      }
    }
  }
}

TEST_CASE("field decays to zero far from the data") {
  KernelSpec k(1);
  SampleSet s(1, {-3.0, 0.0, 5.0});
  ParticleMixture rho = ParticleMixture::from_weights(1, {0.0, 4.0}, {0.5, 0.5});
  FirstVariationField f(k, s, rho);
  std::vector<double> x{5.0 + 40.0};
  CHECK(std::abs(f.eval(x)) <= 1e-300);
  std::vector<double> g(1);
  f.grad(x, g);
  CHECK(std::abs(g[0]) <= 1e-300);
}

TEST_CASE("field is translation equivariant") {
  SplitMix64 rng(substream(4244, 0));
  const int d = 2;
  KernelSpec k(d);
  std::vector<double> xs(10 * d), mus(5 * d), ws(5);
  for (auto& v : xs) v = 6.0 * rng.uniform() - 3.0;
  for (auto& v : mus) v = 6.0 * rng.uniform() - 3.0;
  for (auto& v : ws) v = rng.uniform_pos();
  const std::vector<double> shift{1.7, -2.3};

  std::vector<double> xs2 = xs, mus2 = mus;
  for (std::size_t i = 0; i < xs2.size(); ++i) xs2[i] += shift[i % d];
  for (std::size_t i = 0; i < mus2.size(); ++i) mus2[i] += shift[i % d];

  SampleSet s(d, xs), s2(d, xs2);
  ParticleMixture rho = ParticleMixture::from_weights(d, mus, ws);
  ParticleMixture rho2 = ParticleMixture::from_weights(d, mus2, ws);
  FirstVariationField f(k, s, rho), f2(k, s2, rho2);
  std::vector<double> x(d), x2(d);
  for (int trial = 0; trial < 50; ++trial) {
    for (int c = 0; c < d; ++c) {
      x[c] = 8.0 * rng.uniform() - 4.0;
      x2[c] = x[c] + shift[c];
    }
    CHECK(std::abs(f.eval(x) - f2.eval(x2)) <= 1e-10);
  }
}

TEST_CASE("construction from precomputed marginals matches the direct path") {
  KernelSpec k(1);
  SampleSet s(1, {0.2, -1.4, 2.2});
  ParticleMixture rho = ParticleMixture::from_weights(1, {0.0, 1.0}, {0.4, 0.6});
  MixtureStats st = compute_stats(k, s, rho, false);
  FirstVariationField direct(k, s, rho);
  FirstVariationField reused(k, s, st.log_marginals);
  for (double xv : {-2.0, 0.0, 0.7, 3.5}) {
    std::vector<double> x{xv};
    CHECK(direct.eval(x) == reused.eval(x));  // same inputs, same arithmetic
  }
}
