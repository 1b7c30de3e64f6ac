#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "npmle/first_variation.hpp"
#include "npmle/kernel.hpp"
#include "npmle/mixture.hpp"

// Grid optimality certificate: rho is an NPMLE iff the first variation is
// >= -1 everywhere, so gap_hat = max over a net of max(0, -1 - field(x)).
// Zero gap certifies grid-relaxed optimality; the per-atom deviation
// |field(mu_j) + 1| measures flatness on the support. Plus the closed-form
// diagnostic constants: support radii and the safe step-size bound.

namespace npmle {

struct AtomValue {
  double mu = 0;
  double weight = 0;
  double delta_l = 0;  // field value at the atom
};

struct CertificationReport {
  double gap_hat = 0;
  double grid_min_value = 0;
  std::vector<AtomValue> atom_values;
  double atom_flatness = 0;  // max |delta_l + 1| over atoms with weight > 1e-8
  double grid_lo = 0, grid_hi = 0, grid_spacing = 0;
};

inline CertificationReport certify_1d(const FirstVariationField& f,
                                      const ParticleMixture& rho,
                                      double spacing = 0.01,
                                      double margin = 1.0) {
  if (rho.d != 1)
    throw std::invalid_argument("certify_1d: only d = 1 is supported");
  if (!(spacing > 0) || !(margin >= 0))
    throw std::invalid_argument("certify_1d: need spacing > 0, margin >= 0");

  double lo = rho.locations[0], hi = rho.locations[0];
  for (std::int64_t j = 1; j < rho.count(); ++j) {
    lo = std::min(lo, rho.locations[j]);
    hi = std::max(hi, rho.locations[j]);
  }
  lo -= margin;
  hi += margin;

  CertificationReport rep;
  rep.grid_lo = lo;
  rep.grid_hi = hi;
  rep.grid_spacing = spacing;

  // net anchored at lo so that halving the spacing refines in place
  const std::int64_t points =
      static_cast<std::int64_t>(std::ceil((hi - lo) / spacing - 1e-9)) + 1;
  double mn = 0;  // field is always <= 0 somewhere near the data; 0 is safe
  bool first = true;
  for (std::int64_t t = 0; t < points; ++t) {
    const double x = lo + static_cast<double>(t) * spacing;
    const double v = f.eval(std::span<const double>(&x, 1));
    if (first || v < mn) {
      mn = v;
      first = false;
    }
  }
  rep.grid_min_value = mn;
  rep.gap_hat = std::max(0.0, -1.0 - mn);

  rep.atom_flatness = 0;
  for (std::int64_t j = 0; j < rho.count(); ++j) {
    AtomValue a;
    a.mu = rho.locations[j];
    a.weight = std::exp(rho.log_weights[j]);
    a.delta_l = f.eval(rho.loc(j));
    if (a.weight > 1e-8)
      rep.atom_flatness = std::max(rep.atom_flatness, std::abs(a.delta_l + 1.0));
    rep.atom_values.push_back(a);
  }
  return rep;
}

// Optional refinement loop: halve the spacing until gap_hat stabilizes.
inline CertificationReport certify_1d_refined(const FirstVariationField& f,
                                              const ParticleMixture& rho,
                                              double spacing = 0.01,
                                              double margin = 1.0,
                                              double tol = 1e-6,
                                              int max_halvings = 6) {
  CertificationReport rep = certify_1d(f, rho, spacing, margin);
  for (int i = 0; i < max_halvings; ++i) {
    spacing *= 0.5;
    CertificationReport finer = certify_1d(f, rho, spacing, margin);
    const bool stable = std::abs(finer.gap_hat - rep.gap_hat) <= tol;
    rep = finer;
    if (stable) break;
  }
  return rep;
}

// ------------------------------------------------------------- diagnostics

struct DiagnosticsConstants {
  double R1 = 0;  // envelope threshold radius
  double R = 0;   // support inflation radius: any NPMLE lives in the data
                  // bounding box inflated by R
  std::vector<double> support_lo, support_hi;
  double c0 = 0;  // marginal lower bound at the initialization
  double G = 0, H = 0;
  double eta_bound = 0;  // safe step size for monotone descent
};

// Closed forms for the Gaussian envelopes:
//   R1 solves  env(r) = env(diam)/2          => R1^2 = diam^2 + 2 log 2
//   R  solves  env(r) = env(R1) env(R1+diam)/8
//                                            => R^2 = R1^2 + (R1+diam)^2 + 2 log 8
inline DiagnosticsConstants support_radius(const KernelSpec& k,
                                           const SampleSet& s) {
  DiagnosticsConstants c;
  const double diam = s.diameter_bound;
  c.R1 = std::sqrt(diam * diam + 2.0 * std::log(2.0));
  c.R = std::sqrt(c.R1 * c.R1 + (c.R1 + diam) * (c.R1 + diam) +
                  2.0 * std::log(8.0));
  c.support_lo.resize(k.d);
  c.support_hi.resize(k.d);
  for (int i = 0; i < k.d; ++i) {
    c.support_lo[i] = s.box_min[i] - c.R;
    c.support_hi[i] = s.box_max[i] + c.R;
  }
  return c;
}

// Safe step size from the descent analysis: with l0 the loss at the
// initialization,
//   r*^2 = 2 (l0 - (d/2) log 2pi + log 2)       [env(r*) = e^{-l0}/2]
//   c0   = e^{-l0} env(r* + diam) / (2 env(0))
//   eta_bound = c0 / (H + G^2 / c0)
// c0 lower-bounds every sample marginal along any descending trajectory
// started at rho0, so the bound stays valid as the loss decreases.
inline DiagnosticsConstants step_bound(const KernelSpec& k, const SampleSet& s,
                                       const ParticleMixture& rho0) {
  DiagnosticsConstants c = support_radius(k, s);
  const double l0 = nll(k, s, rho0);
  const double diam = s.diameter_bound;
  const double rstar2 = 2.0 * (l0 + k.log_norm() + std::log(2.0));
  const double rstar = std::sqrt(std::max(rstar2, 0.0));
  c.c0 = std::exp(-l0) * std::exp(-0.5 * (rstar + diam) * (rstar + diam)) / 2.0;
  const DerivativeBounds b = derivative_bounds(k);
  c.G = b.G;
  c.H = b.H;
  c.eta_bound = c.c0 / (c.H + c.G * c.G / c.c0);
  return c;
}

}  // namespace npmle
