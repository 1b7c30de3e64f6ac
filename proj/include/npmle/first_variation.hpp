#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "npmle/kernel.hpp"
#include "npmle/mixture.hpp"

// First variation of the empirical loss at a fixed mixture rho:
//   field(x)  = -(1/N) sum_i phi(x - X_i) / (rho*phi)(X_i)
//   grad(x)   = -(1/N) sum_i (X_i - x) phi(X_i - x) / (rho*phi)(X_i)
// The mixture enters only through its per-sample log marginals, cached at
// construction, so each evaluation is O(N d); grid certification over
// thousands of points never re-evaluates the mixture.
// Optimality certificate: rho is an NPMLE iff field(x) >= -1 everywhere.

namespace npmle {

class FirstVariationField {
 public:
  FirstVariationField(const KernelSpec& k, const SampleSet& s,
                      const ParticleMixture& rho)
      : k_(k), s_(s) {
    if (k.d != s.d || k.d != rho.d)
      throw std::invalid_argument("FirstVariationField: dimension mismatch");
    log_marginals_ = compute_stats(k, s, rho, false).log_marginals;
  }

  // reuse marginals already computed by an optimizer pass
  FirstVariationField(const KernelSpec& k, const SampleSet& s,
                      std::vector<double> log_marginals)
      : k_(k), s_(s), log_marginals_(std::move(log_marginals)) {
    if (k.d != s.d ||
        static_cast<std::int64_t>(log_marginals_.size()) != s.size())
      throw std::invalid_argument("FirstVariationField: marginal size mismatch");
  }

  double eval(std::span<const double> x) const {
    check_dim(k_, x, "FirstVariationField::eval");
    const std::int64_t n = s_.size();
    const int d = k_.d;
    const double log_norm = k_.log_norm();
    double acc = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      const double* xi = s_.data.data() + i * d;
      double q = 0;
      for (int c = 0; c < d; ++c) {
        const double t = x[c] - xi[c];
        q += t * t;
      }
      const double a = log_norm - 0.5 * q - log_marginals_[i];
      if (a >= -746.0) acc += std::exp(a);
    }
    return -acc / static_cast<double>(n);
  }

  void grad(std::span<const double> x, std::span<double> out) const {
    check_dim(k_, x, "FirstVariationField::grad");
    if (out.size() != x.size())
      throw std::invalid_argument("FirstVariationField::grad: output mismatch");
    const std::int64_t n = s_.size();
    const int d = k_.d;
    const double log_norm = k_.log_norm();
    for (int c = 0; c < d; ++c) out[c] = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      const double* xi = s_.data.data() + i * d;
      double q = 0;
      for (int c = 0; c < d; ++c) {
        const double t = x[c] - xi[c];
        q += t * t;
      }
      const double a = log_norm - 0.5 * q - log_marginals_[i];
      if (a < -746.0) continue;
      const double e = std::exp(a);
      for (int c = 0; c < d; ++c) out[c] -= (xi[c] - x[c]) * e;
    }
    for (int c = 0; c < d; ++c) out[c] /= static_cast<double>(n);
  }

  // integral of the field against rho itself; equals -1 for any mixture
  // built on the same marginals
  double integral_against(const ParticleMixture& rho) const {
    double acc = 0;
    for (std::int64_t j = 0; j < rho.count(); ++j)
      acc += std::exp(rho.log_weights[j]) * eval(rho.loc(j));
    return acc;
  }

  const SampleSet& samples() const { return s_; }
  const KernelSpec& kernel() const { return k_; }
  const std::vector<double>& log_marginals() const { return log_marginals_; }

 private:
  KernelSpec k_;
  const SampleSet& s_;
  std::vector<double> log_marginals_;
};

}  // namespace npmle
