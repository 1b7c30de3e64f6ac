#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "npmle/certify.hpp"
#include "npmle/first_variation.hpp"
#include "npmle/mixture.hpp"
#include "npmle/rng.hpp"

// Update rules for the three geometries plus the two EM baselines.
// All steps are pure: mixture in, new mixture out. With A_j and B_j from
// the shared statistics pass (marginal s_i = (rho*phi)(X_i)),
//   A_j = sum_i phi(X_i - mu_j)/s_i        B_j = sum_i [phi_ij/s_i](X_i - mu_j)
// the updates read
//   transport:  mu_j   <- mu_j + (eta/N) B_j          (= mu_j - eta grad dl(mu_j))
//   reaction:   w_j    <- w_j (1 - gamma(1 + dl(mu_j))) = w_j((1-gamma) + gamma A_j/N)
// The composite scheme does transport first, then reaction evaluated at the
// new locations with the old weights; the abstract form with reaction first
// is kept behind UpdateOrder since the two disagree in the source dynamics.

namespace npmle {

enum class Scheme {
  WFR,             // transport + reaction
  FisherRao,       // reaction only
  Wasserstein,     // transport only
  EMKnownWeights,  // location M-steps at fixed true weights
  FixedLocationEM  // weight M-steps at fixed locations
};

enum class UpdateOrder { LocationsFirst, WeightsFirst };

struct StepFlags {
  bool clamped_weight = false;  // some weight hit the floor
  bool dead_component = false;  // EM component with zero total responsibility
};

inline constexpr double kWeightFloor = 1e-300;

// --------------------------------------------------------- initialization

// locations drawn uniformly with replacement from the samples, weights 1/m
inline ParticleMixture init_particles(const SampleSet& s, std::int64_t m,
                                      std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("init_particles: m must be >= 1");
  SplitMix64 g(substream(seed, 0x696e6974));  // tag keeps data substreams distinct
  const std::int64_t n = s.size();
  std::vector<double> locs(m * s.d);
  for (std::int64_t j = 0; j < m; ++j) {
    std::int64_t idx = static_cast<std::int64_t>(g.uniform() * n);
    if (idx >= n) idx = n - 1;
    for (int c = 0; c < s.d; ++c) locs[j * s.d + c] = s.data[idx * s.d + c];
  }
  std::vector<double> lw(m, -std::log(static_cast<double>(m)));
  return ParticleMixture(s.d, std::move(locs), std::move(lw));
}

// ------------------------------------------------------------- step rules

namespace detail {

inline void reweight_from_resp_sum(ParticleMixture& rho,
                                   const std::vector<double>& resp_sum,
                                   double gamma, double n, StepFlags* flags) {
  const std::int64_t m = rho.count();
  for (std::int64_t j = 0; j < m; ++j) {
    const double w = std::exp(rho.log_weights[j]);
    double nw = w * (1.0 - gamma) + gamma * (w * resp_sum[j] / n);
    if (!(nw > 0)) {
      nw = kWeightFloor;
      if (flags) flags->clamped_weight = true;
    }
    rho.log_weights[j] = std::log(nw);
  }
  rho.renormalize();
}

inline void move_from_drift(ParticleMixture& rho,
                            const std::vector<double>& drift, double eta,
                            double n) {
  const std::int64_t md = rho.count() * rho.d;
  for (std::int64_t c = 0; c < md; ++c)
    rho.locations[c] += eta * drift[c] / n;
}

}  // namespace detail

inline ParticleMixture wfr_step(const KernelSpec& k, const SampleSet& s,
                                const ParticleMixture& rho, double eta,
                                UpdateOrder order = UpdateOrder::LocationsFirst,
                                StepFlags* flags = nullptr) {
  const double n = static_cast<double>(s.size());
  ParticleMixture out = rho;
  if (order == UpdateOrder::LocationsFirst) {
    MixtureStats st = compute_stats(k, s, rho, true);
    detail::move_from_drift(out, st.drift, eta, n);
    MixtureStats st2 = compute_stats(k, s, out, false);
    detail::reweight_from_resp_sum(out, st2.resp_sum, eta, n, flags);
  } else {
    MixtureStats st = compute_stats(k, s, rho, false);
    detail::reweight_from_resp_sum(out, st.resp_sum, eta, n, flags);
    MixtureStats st2 = compute_stats(k, s, out, true);
    detail::move_from_drift(out, st2.drift, eta, n);
  }
  return out;
}

inline ParticleMixture fr_step(const KernelSpec& k, const SampleSet& s,
                               const ParticleMixture& rho, double gamma,
                               StepFlags* flags = nullptr) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("fr_step: gamma must lie in [0, 1]");
  ParticleMixture out = rho;
  MixtureStats st = compute_stats(k, s, rho, false);
  detail::reweight_from_resp_sum(out, st.resp_sum, gamma,
                                 static_cast<double>(s.size()), flags);
  return out;
}

inline ParticleMixture w_step(const KernelSpec& k, const SampleSet& s,
                              const ParticleMixture& rho, double eta) {
  ParticleMixture out = rho;
  MixtureStats st = compute_stats(k, s, rho, true);
  detail::move_from_drift(out, st.drift, eta, static_cast<double>(s.size()));
  return out;
}

// One location M-step at fixed component weights, via the responsibility
// matrix directly: mu_j <- sum_i r_ij X_i / sum_i r_ij.
inline ParticleMixture em_known_weights_step(const KernelSpec& k,
                                             const SampleSet& s,
                                             const ParticleMixture& rho,
                                             StepFlags* flags = nullptr) {
  const std::int64_t n = s.size();
  const std::int64_t m = rho.count();
  const int d = k.d;
  ResponsibilityMatrix r = responsibilities(k, s, rho);
  ParticleMixture out = rho;
  std::vector<double> total(m, 0.0), moment(m * d, 0.0);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < m; ++j) {
      const double rij = r.values[i * m + j];
      total[j] += rij;
      for (int c = 0; c < d; ++c) moment[j * d + c] += rij * s.data[i * d + c];
    }
  for (std::int64_t j = 0; j < m; ++j) {
    if (total[j] <= 0) {
      if (flags) flags->dead_component = true;
      continue;  // keeps its location
    }
    for (int c = 0; c < d; ++c) out.locations[j * d + c] = moment[j * d + c] / total[j];
  }
  return out;
}

// One weight M-step at fixed locations: w_j <- (1/N) sum_i r_ij. This is a
// separate accumulation path from fr_step on purpose; their gamma=1
// agreement is a cross-check, not a tautology.
inline ParticleMixture fixed_location_em_step(const KernelSpec& k,
                                              const SampleSet& s,
                                              const ParticleMixture& rho) {
  const std::int64_t n = s.size();
  const std::int64_t m = rho.count();
  ResponsibilityMatrix r = responsibilities(k, s, rho);
  std::vector<double> col(m, 0.0);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < m; ++j) col[j] += r.values[i * m + j];
  ParticleMixture out = rho;
  for (std::int64_t j = 0; j < m; ++j) {
    double nw = col[j] / static_cast<double>(n);
    if (!(nw > 0)) nw = kWeightFloor;
    out.log_weights[j] = std::log(nw);
  }
  out.renormalize();
  return out;
}

// ------------------------------------------------------------ trajectories

struct OptimizerConfig {
  Scheme scheme = Scheme::WFR;
  double eta = 0.1;
  double gamma = 0.1;  // reaction step; tied to eta by callers that want one knob
  std::int64_t max_iters = 1000;
  std::uint64_t seed = 0;
  std::int64_t record_every = 1;
  UpdateOrder order = UpdateOrder::LocationsFirst;

  void validate() const {
    if (scheme != Scheme::FisherRao && scheme != Scheme::FixedLocationEM &&
        !(eta > 0))
      throw std::invalid_argument("OptimizerConfig: eta must be > 0");
    if ((scheme == Scheme::WFR || scheme == Scheme::FisherRao) &&
        !(gamma > 0 && gamma <= 1.0))
      throw std::invalid_argument("OptimizerConfig: gamma must lie in (0, 1]");
    if (max_iters < 0)
      throw std::invalid_argument("OptimizerConfig: max_iters must be >= 0");
    if (record_every < 1)
      throw std::invalid_argument("OptimizerConfig: record_every must be >= 1");
  }
};

struct TrajectoryPoint {
  std::int64_t iter = 0;
  double train_nll = std::numeric_limits<double>::quiet_NaN();
  double test_nll = std::numeric_limits<double>::quiet_NaN();
  double gap_hat = std::numeric_limits<double>::quiet_NaN();
  bool clamped = false;
};

struct TrajectoryRecord {
  std::vector<TrajectoryPoint> points;
  std::vector<std::pair<std::int64_t, ParticleMixture>> snapshots;
  bool aborted = false;
  std::string abort_message;
};

struct RecordOptions {
  const SampleSet* heldout = nullptr;
  bool record_particles = false;
  bool record_gap = false;  // d=1 only
  double gap_spacing = 0.01;
  double gap_margin = 1.0;
};

struct RunResult {
  ParticleMixture mixture;
  TrajectoryRecord record;
};

// Applies the configured step max_iters times. Metrics are recorded at
// iteration 0, every record_every iterations, and at the final state.
// Recording reuses the step's own statistics pass wherever possible.
inline RunResult run(const KernelSpec& k, const SampleSet& s,
                     const ParticleMixture& rho0, const OptimizerConfig& cfg,
                     const RecordOptions& rec = {}) {
  cfg.validate();
  if (rec.record_gap && k.d != 1)
    throw std::invalid_argument("run: gap recording needs d = 1");
  const double n = static_cast<double>(s.size());
  RunResult res{rho0, {}};
  ParticleMixture& rho = res.mixture;

  auto record_point = [&](std::int64_t iter, double train,
                          const std::vector<double>& log_marginals,
                          bool clamped) {
    TrajectoryPoint pt;
    pt.iter = iter;
    pt.train_nll = train;
    pt.clamped = clamped;
    if (rec.heldout) pt.test_nll = heldout_nll(k, *rec.heldout, rho);
    if (rec.record_gap) {
      FirstVariationField f(k, s, log_marginals);
      pt.gap_hat =
          certify_1d(f, rho, rec.gap_spacing, rec.gap_margin).gap_hat;
    }
    res.record.points.push_back(pt);
    if (rec.record_particles) res.record.snapshots.emplace_back(iter, rho);
  };

  bool clamped_since_record = false;
  for (std::int64_t t = 0; t < cfg.max_iters; ++t) {
    StepFlags flags;
    const bool recording = (t % cfg.record_every == 0);
    double train = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> marginals;

    switch (cfg.scheme) {
      case Scheme::WFR: {
        if (cfg.order == UpdateOrder::LocationsFirst) {
          MixtureStats st = compute_stats(k, s, rho, true);
          train = st.nll;
          marginals = std::move(st.log_marginals);
          if (recording) record_point(t, train, marginals, clamped_since_record);
          detail::move_from_drift(rho, st.drift, cfg.eta, n);
          MixtureStats st2 = compute_stats(k, s, rho, false);
          detail::reweight_from_resp_sum(rho, st2.resp_sum, cfg.gamma, n, &flags);
        } else {
          MixtureStats st = compute_stats(k, s, rho, false);
          train = st.nll;
          marginals = std::move(st.log_marginals);
          if (recording) record_point(t, train, marginals, clamped_since_record);
          detail::reweight_from_resp_sum(rho, st.resp_sum, cfg.gamma, n, &flags);
          MixtureStats st2 = compute_stats(k, s, rho, true);
          detail::move_from_drift(rho, st2.drift, cfg.eta, n);
        }
        break;
      }
      case Scheme::FisherRao: {
        MixtureStats st = compute_stats(k, s, rho, false);
        train = st.nll;
        marginals = std::move(st.log_marginals);
        if (recording) record_point(t, train, marginals, clamped_since_record);
        detail::reweight_from_resp_sum(rho, st.resp_sum, cfg.gamma, n, &flags);
        break;
      }
      case Scheme::Wasserstein: {
        MixtureStats st = compute_stats(k, s, rho, true);
        train = st.nll;
        marginals = std::move(st.log_marginals);
        if (recording) record_point(t, train, marginals, clamped_since_record);
        detail::move_from_drift(rho, st.drift, cfg.eta, n);
        break;
      }
      case Scheme::EMKnownWeights: {
        if (recording) {
          MixtureStats st = compute_stats(k, s, rho, false);
          train = st.nll;
          record_point(t, train, st.log_marginals, clamped_since_record);
        }
        rho = em_known_weights_step(k, s, rho, &flags);
        break;
      }
      case Scheme::FixedLocationEM: {
        if (recording) {
          MixtureStats st = compute_stats(k, s, rho, false);
          train = st.nll;
          record_point(t, train, st.log_marginals, clamped_since_record);
        }
        rho = fixed_location_em_step(k, s, rho);
        break;
      }
    }

    if (recording)
      clamped_since_record = flags.clamped_weight;
    else
      clamped_since_record |= flags.clamped_weight;

    // train stays NaN for EM schemes on non-recorded iterations; only
    // computed values are checked
    if (!std::isnan(train) && !std::isfinite(train)) {
      res.record.aborted = true;
      res.record.abort_message =
          "non-finite loss at iteration " + std::to_string(t);
      TrajectoryPoint pt;
      pt.iter = t;
      pt.train_nll = train;
      res.record.points.push_back(pt);
      return res;
    }
  }

  MixtureStats st = compute_stats(k, s, rho, false);
  if (!std::isfinite(st.nll)) {
    res.record.aborted = true;
    res.record.abort_message = "non-finite loss at final state";
  }
  record_point(cfg.max_iters, st.nll, st.log_marginals, clamped_since_record);
  return res;
}

// ------------------------------------------------------------- flow oracle

// Classical fixed-step RK4 on the coupled particle ODEs
//   d/dt mu_j = B_j / N                  (transport schemes)
//   d/dt w_j  = w_j (A_j / N - 1)        (reaction schemes)
// used as the continuous-time reference the Euler iterations are checked
// against. Weights are renormalized after every step unless disabled
// (the reaction drift sums to zero, so this only corrects rounding).
inline ParticleMixture integrate_flow(const KernelSpec& k, const SampleSet& s,
                                      const ParticleMixture& rho0,
                                      Scheme scheme, double T, double dt,
                                      bool renormalize_each_step = true) {
  if (scheme != Scheme::WFR && scheme != Scheme::FisherRao &&
      scheme != Scheme::Wasserstein)
    throw std::invalid_argument("integrate_flow: not a flow scheme");
  if (!(dt > 0) || T < 0)
    throw std::invalid_argument("integrate_flow: need dt > 0, T >= 0");
  const std::int64_t m = rho0.count();
  const int d = rho0.d;
  const double n = static_cast<double>(s.size());
  const bool move = scheme != Scheme::FisherRao;
  const bool react = scheme != Scheme::Wasserstein;

  std::vector<double> locs = rho0.locations;
  std::vector<double> w = rho0.weights();

  auto deriv = [&](const std::vector<double>& L, const std::vector<double>& W,
                   std::vector<double>& dL, std::vector<double>& dW) {
    std::vector<double> lw(m);
    for (std::int64_t j = 0; j < m; ++j)
      lw[j] = std::log(std::max(W[j], kWeightFloor));
    ParticleMixture tmp(d, L, std::move(lw));
    MixtureStats st = compute_stats(k, s, tmp, move);
    if (!std::isfinite(st.nll))
      throw std::runtime_error("integrate_flow: non-finite state");
    dL.assign(m * d, 0.0);
    dW.assign(m, 0.0);
    if (move)
      for (std::int64_t c = 0; c < m * d; ++c) dL[c] = st.drift[c] / n;
    if (react)
      for (std::int64_t j = 0; j < m; ++j)
        dW[j] = W[j] * (st.resp_sum[j] / n - 1.0);
  };

  std::vector<double> k1L, k1W, k2L, k2W, k3L, k3W, k4L, k4W, tL(m * d), tW(m);
  auto rk4_step = [&](double h) {
    deriv(locs, w, k1L, k1W);
    for (std::int64_t c = 0; c < m * d; ++c) tL[c] = locs[c] + 0.5 * h * k1L[c];
    for (std::int64_t j = 0; j < m; ++j) tW[j] = w[j] + 0.5 * h * k1W[j];
    deriv(tL, tW, k2L, k2W);
    for (std::int64_t c = 0; c < m * d; ++c) tL[c] = locs[c] + 0.5 * h * k2L[c];
    for (std::int64_t j = 0; j < m; ++j) tW[j] = w[j] + 0.5 * h * k2W[j];
    deriv(tL, tW, k3L, k3W);
    for (std::int64_t c = 0; c < m * d; ++c) tL[c] = locs[c] + h * k3L[c];
    for (std::int64_t j = 0; j < m; ++j) tW[j] = w[j] + h * k3W[j];
    deriv(tL, tW, k4L, k4W);
    for (std::int64_t c = 0; c < m * d; ++c)
      locs[c] += h / 6.0 * (k1L[c] + 2 * k2L[c] + 2 * k3L[c] + k4L[c]);
    for (std::int64_t j = 0; j < m; ++j)
      w[j] += h / 6.0 * (k1W[j] + 2 * k2W[j] + 2 * k3W[j] + k4W[j]);
    if (renormalize_each_step && react) {
      double sum = 0;
      for (double v : w) sum += v;
      for (double& v : w) v /= sum;
    }
  };

  const std::int64_t steps = static_cast<std::int64_t>(std::floor(T / dt + 1e-9));
  for (std::int64_t i = 0; i < steps; ++i) rk4_step(dt);
  const double rem = T - static_cast<double>(steps) * dt;
  if (rem > 1e-12) rk4_step(rem);

  std::vector<double> lw(m);
  for (std::int64_t j = 0; j < m; ++j)
    lw[j] = std::log(std::max(w[j], kWeightFloor));
  ParticleMixture out(d, std::move(locs), std::move(lw));
  return out;
}

}  // namespace npmle
