#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "npmle/kernel.hpp"

// Closed-form population-limit benchmarks for target rho* = delta_0:
// the Gaussian-family loss, the Bures-Wasserstein variance ODE with its
// sandwich bounds, the t=0 velocity field of the population transport flow
// (closed form vs direct quadrature), and loss scans along Wasserstein
// geodesics between centered Gaussians.

namespace npmle {

// Population loss of the candidate N(mu, sigma2 I_d) fitted to data
// delta_0 * N(0, I): (d/2) log(1+s2) + (d/2)/(1+s2) + ||mu||^2/(2(1+s2)),
// additive constant dropped. sigma2 = 0 is the degenerate (point-mass)
// limit and evaluates to d/2 + ||mu||^2/2.
inline double gaussian_population_loss(std::span<const double> mu,
                                       double sigma2, int d) {
  if (d < 1) throw std::invalid_argument("gaussian_population_loss: d >= 1");
  if (!(sigma2 >= 0))
    throw std::invalid_argument("gaussian_population_loss: sigma2 must be >= 0");
  if (!mu.empty() && static_cast<int>(mu.size()) != d)
    throw std::invalid_argument("gaussian_population_loss: mu length");
  double mu2 = 0;
  for (double v : mu) mu2 += v * v;
  const double s = 1.0 + sigma2;
  return 0.5 * d * std::log(s) + 0.5 * d / s + 0.5 * mu2 / s;
}

inline double gaussian_population_loss(double sigma2, int d) {
  return gaussian_population_loss(std::span<const double>(), sigma2, d);
}

// ------------------------------------------------------------------- flow

struct BWState {
  double t = 0;
  double sigma2 = 1;  // per-coordinate variance of the isotropic iterate
};

// Variance ODE of the Bures-Wasserstein gradient flow toward delta_0:
//   dv/dt = -2 v^2 / (v + 1)^2,   v(0) = sigma0^2
// integrated with fixed-step RK4. The flow obeys the sandwich
//   1/(1+2t) <= v(t) <= 2/(2+t)   for v(0) = 1.
inline std::vector<BWState> bw_flow(double sigma0_sq, double T, double dt) {
  if (!(sigma0_sq > 0) || !(dt > 0) || T < 0)
    throw std::invalid_argument("bw_flow: need sigma0^2 > 0, dt > 0, T >= 0");
  auto f = [](double v) {
    const double u = v + 1.0;
    return -2.0 * v * v / (u * u);
  };
  std::vector<BWState> out;
  const std::int64_t steps = static_cast<std::int64_t>(std::floor(T / dt + 1e-9));
  out.reserve(steps + 2);
  double v = sigma0_sq;
  double t = 0;
  out.push_back({t, v});
  auto rk4 = [&](double h) {
    const double k1 = f(v);
    const double k2 = f(v + 0.5 * h * k1);
    const double k3 = f(v + 0.5 * h * k2);
    const double k4 = f(v + h * k3);
    v += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += h;
  };
  for (std::int64_t i = 0; i < steps; ++i) {
    rk4(dt);
    out.push_back({t, v});
  }
  const double rem = T - static_cast<double>(steps) * dt;
  if (rem > 1e-12) {
    rk4(rem);
    out.push_back({T, v});
  }
  return out;
}

inline double bw_lower_bound(double t) { return 1.0 / (1.0 + 2.0 * t); }
inline double bw_upper_bound(double t) { return 2.0 / (2.0 + t); }

// ------------------------------------------------------------ t=0 velocity

// Initial velocity of the population transport flow started at N(0, I_d):
//   v0(x) = -(1/3) (4/3)^{d/2} exp(-||x||^2/6) x
inline std::vector<double> pushforward_v0(std::span<const double> x, int d) {
  if (static_cast<int>(x.size()) != d)
    throw std::invalid_argument("pushforward_v0: point length");
  double x2 = 0;
  for (double v : x) x2 += v * v;
  const double coef =
      -(1.0 / 3.0) * std::pow(4.0 / 3.0, 0.5 * d) * std::exp(-x2 / 6.0);
  std::vector<double> out(d);
  for (int c = 0; c < d; ++c) out[c] = coef * x[c];
  return out;
}

// Same velocity from its defining integral,
//   v0(x) = int grad[ phi(y) / q(y) ] phi(y - x) dy,   q = N(0, 2 I_d),
// on a tensor trapezoid grid. The ratio phi/q = 2^{d/2} e^{-||y||^2/4}
// has gradient -(y/2) times itself. Cost is nodes^d, hence the d cap.
inline std::vector<double> pushforward_v0_quadrature(std::span<const double> x,
                                                     int d, int nodes = 200,
                                                     double half_width = 12.0) {
  if (static_cast<int>(x.size()) != d)
    throw std::invalid_argument("pushforward_v0_quadrature: point length");
  if (d > 3)
    throw std::invalid_argument("pushforward_v0_quadrature: d must be <= 3");
  if (nodes < 2) throw std::invalid_argument("pushforward_v0_quadrature: nodes");
  const double h = 2.0 * half_width / (nodes - 1);
  const KernelSpec k(d);
  std::vector<double> out(d, 0.0);
  std::vector<int> idx(d, 0);
  std::vector<double> y(d);
  const double log_ratio0 = 0.5 * d * std::log(2.0);
  for (;;) {
    double trap = 1.0;  // trapezoid endpoint halving per axis
    for (int c = 0; c < d; ++c) {
      y[c] = -half_width + idx[c] * h;
      if (idx[c] == 0 || idx[c] == nodes - 1) trap *= 0.5;
    }
    double y2 = 0, q = 0;
    for (int c = 0; c < d; ++c) {
      y2 += y[c] * y[c];
      const double t = y[c] - x[c];
      q += t * t;
    }
    const double ratio = std::exp(log_ratio0 - y2 / 4.0);
    const double phi = std::exp(k.log_norm() - 0.5 * q);
    const double common = trap * ratio * phi;
    for (int c = 0; c < d; ++c) out[c] += common * (-0.5 * y[c]);
    int c = 0;
    for (; c < d; ++c) {
      if (++idx[c] < nodes) break;
      idx[c] = 0;
    }
    if (c == d) break;
  }
  const double cell = std::pow(h, d);
  for (double& v : out) v *= cell;
  return out;
}

// ---------------------------------------------------------------- geodesic

struct GeodesicPoint {
  double t = 0;
  double loss = 0;
};

// Wasserstein geodesic between N(0, s0^2) and N(0, s1^2) in one dimension:
// the standard deviation interpolates linearly, rho_t = N(0, ((1-t)s0+t s1)^2).
// s1 = 0 is allowed (endpoint delta_0).
inline std::vector<GeodesicPoint> geodesic_scan(double s0, double s1,
                                                int steps) {
  if (steps < 3) throw std::invalid_argument("geodesic_scan: steps must be >= 3");
  if (!(s0 >= 0) || !(s1 >= 0))
    throw std::invalid_argument("geodesic_scan: deviations must be >= 0");
  std::vector<GeodesicPoint> out;
  out.reserve(steps);
  for (int i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) / (steps - 1);
    const double s = (1.0 - t) * s0 + t * s1;
    out.push_back({t, gaussian_population_loss(s * s, 1)});
  }
  return out;
}

}  // namespace npmle
