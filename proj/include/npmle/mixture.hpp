#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "npmle/kernel.hpp"
#include "npmle/parallel.hpp"

namespace npmle {

// ---------------------------------------------------------------- samples

struct SampleSet {
  int d = 0;
  std::vector<double> data;  // N x d, row major
  std::vector<double> box_min, box_max;
  double diameter_bound = 0;  // bounding-box diagonal, upper bound on diam

  SampleSet() = default;

  SampleSet(int dim, std::vector<double> rows) : d(dim), data(std::move(rows)) {
    if (d < 1) throw std::invalid_argument("SampleSet: d must be >= 1");
    if (data.empty() || data.size() % d != 0)
      throw std::invalid_argument("SampleSet: need N >= 1 full rows");
    for (double v : data)
      if (!std::isfinite(v))
        throw std::invalid_argument("SampleSet: non-finite entry");
    box_min.assign(d, std::numeric_limits<double>::infinity());
    box_max.assign(d, -std::numeric_limits<double>::infinity());
    const std::int64_t n = size();
    for (std::int64_t i = 0; i < n; ++i)
      for (int c = 0; c < d; ++c) {
        const double v = data[i * d + c];
        box_min[c] = std::min(box_min[c], v);
        box_max[c] = std::max(box_max[c], v);
      }
    double s = 0;
    for (int c = 0; c < d; ++c) {
      const double e = box_max[c] - box_min[c];
      s += e * e;
    }
    diameter_bound = std::sqrt(s);
  }

  std::int64_t size() const {
    return d == 0 ? 0 : static_cast<std::int64_t>(data.size()) / d;
  }

  std::span<const double> row(std::int64_t i) const {
    return {data.data() + i * d, static_cast<std::size_t>(d)};
  }
};

// ---------------------------------------------------------------- mixture

struct ParticleMixture {
  int d = 0;
  std::vector<double> locations;    // m x d, row major
  std::vector<double> log_weights;  // m

  ParticleMixture() = default;

  ParticleMixture(int dim, std::vector<double> locs, std::vector<double> logw)
      : d(dim), locations(std::move(locs)), log_weights(std::move(logw)) {
    if (d < 1) throw std::invalid_argument("ParticleMixture: d must be >= 1");
    if (log_weights.empty() ||
        locations.size() != log_weights.size() * static_cast<std::size_t>(d))
      throw std::invalid_argument("ParticleMixture: size mismatch");
  }

  static ParticleMixture from_weights(int dim, std::vector<double> locs,
                                      const std::vector<double>& weights) {
    std::vector<double> lw(weights.size());
    for (std::size_t j = 0; j < weights.size(); ++j) {
      if (!(weights[j] > 0))
        throw std::invalid_argument("ParticleMixture: weights must be > 0");
      lw[j] = std::log(weights[j]);
    }
    ParticleMixture p(dim, std::move(locs), std::move(lw));
    p.renormalize();
    return p;
  }

  std::int64_t count() const {
    return static_cast<std::int64_t>(log_weights.size());
  }

  std::span<const double> loc(std::int64_t j) const {
    return {locations.data() + j * d, static_cast<std::size_t>(d)};
  }

  double weight(std::int64_t j) const { return std::exp(log_weights[j]); }

  std::vector<double> weights() const {
    std::vector<double> w(log_weights.size());
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = std::exp(log_weights[j]);
    return w;
  }

  // linear-space renormalization; weight updates are affine, not
  // multiplicative, so pure log-space arithmetic cannot represent them
  void renormalize() {
    double mx = -std::numeric_limits<double>::infinity();
    for (double lw : log_weights) mx = std::max(mx, lw);
    double s = 0;
    for (double lw : log_weights) s += std::exp(lw - mx);
    const double log_total = mx + std::log(s);
    for (double& lw : log_weights) lw -= log_total;
  }
};

// ------------------------------------------------------- shared statistics

// One pass over the samples produces everything the loss, the first
// variation and all update rules need:
//   log_marginals[i] = log sum_j w_j phi(X_i - mu_j)
//   resp_sum[j]      = sum_i phi(X_i - mu_j) / marginal_i      (= A_j)
//   drift[j,:]       = sum_i [phi(X_i - mu_j)/marginal_i] (X_i - mu_j)
//   nll              = -(1/N) sum_i log_marginals[i]
// A_j relates to responsibilities by r_ij = w_j * phi_ij / marginal_i,
// and -A_j/N is the first variation at atom j.
struct MixtureStats {
  double nll = 0;
  std::vector<double> log_marginals;  // N
  std::vector<double> resp_sum;       // m
  std::vector<double> drift;          // m x d (empty unless requested)
};

namespace detail {

struct StatsPartial {
  double sum_log = 0;
  std::vector<double> resp_sum;
  std::vector<double> drift;
};

}  // namespace detail

// resp_out, when given, receives the full N x m responsibility matrix.
inline MixtureStats compute_stats(const KernelSpec& k, const SampleSet& s,
                                  const ParticleMixture& rho, bool want_drift,
                                  double* resp_out = nullptr,
                                  int threads = parallel::default_threads()) {
  if (k.d != s.d || k.d != rho.d)
    throw std::invalid_argument("compute_stats: dimension mismatch");
  const std::int64_t n = s.size();
  const std::int64_t m = rho.count();
  const int d = k.d;
  const double log_norm = k.log_norm();

  const std::int64_t nb = parallel::block_count(n);
  std::vector<detail::StatsPartial> parts(nb);

  MixtureStats out;
  out.log_marginals.resize(n);

  // inverse weights for the bounded-ratio division path; components at or
  // below the clamp floor fall back to a direct exp of the log ratio
  std::vector<double> inv_w(m);
  for (std::int64_t j = 0; j < m; ++j) {
    const double w = std::exp(rho.log_weights[j]);
    inv_w[j] = w >= 1e-30 ? 1.0 / w : 0.0;
  }

  parallel::for_blocks(n, threads, [&](std::int64_t b, std::int64_t lo,
                                       std::int64_t hi) {
    detail::StatsPartial& p = parts[b];
    p.resp_sum.assign(m, 0.0);
    if (want_drift) p.drift.assign(m * d, 0.0);
    std::vector<double> log_phi(m);  // log phi(X_i - mu_j)
    std::vector<double> ez(m);       // exp(log w_j + log phi_j - max)
    for (std::int64_t i = lo; i < hi; ++i) {
      const double* x = s.data.data() + i * d;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::int64_t j = 0; j < m; ++j) {
        const double* mu = rho.locations.data() + j * d;
        double q = 0;
        for (int c = 0; c < d; ++c) {
          const double t = x[c] - mu[c];
          q += t * t;
        }
        log_phi[j] = log_norm - 0.5 * q;
        const double e = rho.log_weights[j] + log_phi[j];
        if (e > mx) mx = e;
      }
      double sum = 0;
      for (std::int64_t j = 0; j < m; ++j) {
        const double a = rho.log_weights[j] + log_phi[j] - mx;
        ez[j] = a < -746.0 ? 0.0 : std::exp(a);
        sum += ez[j];
      }
      const double log_marginal = mx + std::log(sum);
      out.log_marginals[i] = log_marginal;
      p.sum_log += log_marginal;
      for (std::int64_t j = 0; j < m; ++j) {
        // c = phi_ij / marginal_i
        double c;
        if (inv_w[j] != 0.0) {
          c = ez[j] / sum * inv_w[j];
        } else {
          const double a = log_phi[j] - log_marginal;
          c = a < -746.0 ? 0.0 : std::exp(a);
        }
        p.resp_sum[j] += c;
        if (resp_out) resp_out[i * m + j] = ez[j] / sum;
        if (want_drift) {
          const double* mu = rho.locations.data() + j * d;
          double* g = p.drift.data() + j * d;
          for (int c2 = 0; c2 < d; ++c2) g[c2] += c * (x[c2] - mu[c2]);
        }
      }
    }
  });

  parallel::tree_reduce(nb, [&](std::int64_t a, std::int64_t b) {
    parts[a].sum_log += parts[b].sum_log;
    for (std::int64_t j = 0; j < m; ++j)
      parts[a].resp_sum[j] += parts[b].resp_sum[j];
    if (want_drift)
      for (std::int64_t c = 0; c < m * d; ++c)
        parts[a].drift[c] += parts[b].drift[c];
  });

  out.nll = -parts[0].sum_log / static_cast<double>(n);
  out.resp_sum = std::move(parts[0].resp_sum);
  if (want_drift) out.drift = std::move(parts[0].drift);
  return out;
}

// ------------------------------------------------------- public operations

struct ResponsibilityMatrix {
  std::int64_t n = 0, m = 0;
  std::vector<double> values;         // N x m, rows sum to 1
  std::vector<double> log_marginals;  // N

  double at(std::int64_t i, std::int64_t j) const { return values[i * m + j]; }
};

inline ResponsibilityMatrix responsibilities(const KernelSpec& k,
                                             const SampleSet& s,
                                             const ParticleMixture& rho) {
  ResponsibilityMatrix r;
  r.n = s.size();
  r.m = rho.count();
  r.values.resize(r.n * r.m);
  MixtureStats st = compute_stats(k, s, rho, false, r.values.data());
  r.log_marginals = std::move(st.log_marginals);
  return r;
}

inline double nll(const KernelSpec& k, const SampleSet& s,
                  const ParticleMixture& rho) {
  return compute_stats(k, s, rho, false).nll;
}

// Monte-Carlo estimate of the population loss on a fresh test set; same
// formula as nll, kept as a named operation so call sites say what they mean.
inline double heldout_nll(const KernelSpec& k, const SampleSet& test,
                          const ParticleMixture& rho) {
  if (test.size() == 0) throw std::invalid_argument("heldout_nll: empty test set");
  return nll(k, test, rho);
}

// ----------------------------------------------------------- ground truth

enum class GroundTruthKind { ContinuousGaussian, DiscreteThreeAtom, CustomAtoms };

// Mixing distributions data is simulated from. DiscreteThreeAtom places
// atoms at (-1,0,..), (1,0,..), (10,0,..) with equal weights; Continuous
// is N(0, I_d).
struct GroundTruthMixture {
  GroundTruthKind kind = GroundTruthKind::ContinuousGaussian;
  int d = 1;
  std::vector<double> atom_locations;  // k x d (discrete kinds)
  std::vector<double> atom_weights;    // k

  static GroundTruthMixture continuous(int d) {
    GroundTruthMixture g;
    g.kind = GroundTruthKind::ContinuousGaussian;
    g.d = d;
    return g;
  }

  static GroundTruthMixture discrete_three_atom(int d) {
    GroundTruthMixture g;
    g.kind = GroundTruthKind::DiscreteThreeAtom;
    g.d = d;
    g.atom_locations.assign(3 * d, 0.0);
    g.atom_locations[0] = -1.0;
    g.atom_locations[d] = 1.0;
    g.atom_locations[2 * d] = 10.0;
    g.atom_weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    return g;
  }

  static GroundTruthMixture custom(int d, std::vector<double> locations,
                                   std::vector<double> weights) {
    if (weights.empty() ||
        locations.size() != weights.size() * static_cast<std::size_t>(d))
      throw std::invalid_argument("GroundTruthMixture: size mismatch");
    double s = 0;
    for (double w : weights) {
      if (!(w > 0)) throw std::invalid_argument("GroundTruthMixture: weights must be > 0");
      s += w;
    }
    for (double& w : weights) w /= s;
    GroundTruthMixture g;
    g.kind = GroundTruthKind::CustomAtoms;
    g.d = d;
    g.atom_locations = std::move(locations);
    g.atom_weights = std::move(weights);
    return g;
  }
};

}  // namespace npmle
