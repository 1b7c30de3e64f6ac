#include <doctest.h>

#include <cmath>
#include <vector>

#include "npmle/kernel.hpp"
#include "npmle/rng.hpp"

using namespace npmle;

TEST_CASE("log density at reference points") {
  KernelSpec k1(1);
  std::vector<double> z{0.0};
  CHECK(log_density(k1, z) == doctest::Approx(-0.91893853320467274178).epsilon(1e-15));

  // d=3 at (1,1,1): log phi = -1.5 log(2 pi) - 1.5
  KernelSpec k3(3);
  std::vector<double> z3{1.0, 1.0, 1.0};
  CHECK(log_density(k3, z3) ==
        doctest::Approx(-1.5 * kLog2Pi - 1.5).epsilon(1e-15));
}

TEST_CASE("gradient at reference points") {
  KernelSpec k1(1);
  std::vector<double> z{1.0}, g(1);
  grad_density(k1, z, g);
  CHECK(g[0] == doctest::Approx(-0.2419707245191433498).epsilon(1e-15));

  KernelSpec k3(3);
  std::vector<double> z3{1.0, 1.0, 1.0}, g3(3);
  grad_density(k3, z3, g3);
  for (double gc : g3)
    CHECK(gc == doctest::Approx(-0.014167345154413286587).epsilon(1e-14));
}

TEST_CASE("gradient matches central differences") {
  const double h = 1e-5;
  for (int d : {1, 2, 10}) {
    KernelSpec k(d);
    SplitMix64 rng(substream(42, d));
    std::vector<double> z(d), g(d), zp(d), zm(d);
    for (int trial = 0; trial < 100; ++trial) {
      for (int c = 0; c < d; ++c) z[c] = 6.0 * rng.uniform() - 3.0;
      grad_density(k, z, g);
      for (int c = 0; c < d; ++c) {
        zp = z;
        zm = z;
        zp[c] += h;
        zm[c] -= h;
        const double fd =
            (std::exp(log_density(k, zp)) - std::exp(log_density(k, zm))) /
            (2 * h);
        CHECK(std::abs(g[c] - fd) <= 1e-6);
      }
    }
  }
}

TEST_CASE("envelope values and tightness for the isotropic kernel") {
  KernelSpec k(1);
  CHECK(envelope_upper(k, 2.0) ==
        doctest::Approx(0.053990966513188051951).epsilon(1e-15));
  // radial envelope is exact here: upper == lower == phi at radius r
  for (double r : {0.0, 0.5, 1.0, 3.0, 7.0}) {
    std::vector<double> z{r};
    const double val = std::exp(log_density(k, z));
    CHECK(envelope_upper(k, r) == doctest::Approx(val).epsilon(1e-14));
    CHECK(envelope_lower(k, r) == doctest::Approx(val).epsilon(1e-14));
    CHECK(envelope_lower(k, r) <= envelope_upper(k, r));
  }
  CHECK_THROWS_AS(envelope_upper(k, -1.0), std::invalid_argument);
}

TEST_CASE("derivative bounds match a dense radial scan") {
  for (int d : {1, 2, 5}) {
    KernelSpec k(d);
    const DerivativeBounds b = derivative_bounds(k);
    CHECK(b.H == doctest::Approx(std::exp(k.log_norm())).epsilon(1e-15));
    double gmax = 0;
    std::vector<double> z(d, 0.0), g(d);
    for (int i = 0; i <= 4000; ++i) {
      z[0] = 4.0 * i / 4000.0;
      grad_density(k, z, g);
      gmax = std::max(gmax, std::sqrt(squared_norm(g)));
    }
    CHECK(gmax <= b.G * (1 + 1e-12));
    CHECK(gmax >= b.G * (1 - 1e-4));  // scan resolution
  }
  KernelSpec k1(1);
  const DerivativeBounds b1 = derivative_bounds(k1);
  CHECK(b1.G == doctest::Approx(0.2419707245191433498).epsilon(1e-15));
  CHECK(b1.H == doctest::Approx(0.39894228040143267794).epsilon(1e-15));
}

TEST_CASE("dimension checks") {
  CHECK_THROWS_AS(KernelSpec(0), std::invalid_argument);
  KernelSpec k(2);
  std::vector<double> z{1.0};
  CHECK_THROWS_AS(log_density(k, z), std::invalid_argument);
}
