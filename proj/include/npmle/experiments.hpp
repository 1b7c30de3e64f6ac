#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "npmle/certify.hpp"
#include "npmle/datagen.hpp"
#include "npmle/first_variation.hpp"
#include "npmle/mixture.hpp"
#include "npmle/optimizers.hpp"
#include "npmle/parallel.hpp"
#include "npmle/population_lab.hpp"

// Scripted experiment drivers. Each returns plain result structs; file and
// figure emission lives in the CLI. Trials are independent and may run on
// separate threads; per-trial randomness comes from base_seed + trial index,
// with data/init/test substreams split off by fixed tags, so results do not
// depend on the schedule.

namespace npmle {

inline constexpr std::uint64_t kTagData = 0x64617461;  // dataset draw
inline constexpr std::uint64_t kTagInit = 0x696e6974;  // particle init
inline constexpr std::uint64_t kTagTest = 0x74657374;  // heldout draw

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double ols_slope(const std::vector<double>& x,
                        const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("ols_slope: need >= 2 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// run trial bodies on `threads` threads, one trial per task
template <typename Body>
void for_trials(int trials, int threads, Body&& body) {
  parallel::for_blocks(
      trials, threads,
      [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
        for (std::int64_t t = lo; t < hi; ++t) body(static_cast<int>(t));
      },
      /*block=*/1);
}

// ------------------------------------------------------- multistart study

// Fixed dataset; randomness across trials is the initialization only.
// EM (known weights, k=3) and plain transport descent (m=3) are classified
// global vs bad local minimum; the composite scheme is certified instead.
struct InstabilityConfig {
  std::int64_t n = 1500;
  std::uint64_t data_seed = 1;
  int em_trials = 100;
  std::int64_t em_iters = 200;
  int gd_trials = 100;
  double gd_eta = 0.1;
  std::int64_t gd_iters = 1000;
  int wfr_trials = 20;
  std::int64_t wfr_m = 500;
  double wfr_eta = 0.1;
  std::int64_t wfr_iters = 1000;
  std::uint64_t base_seed = 100;
  int threads = 1;
};

// assign each fitted center to the nearest of {-1, 1, 10}; global iff the
// assignment is a bijection and every center lands within `tol`
inline bool is_global_three_center(const std::array<double, 3>& centers,
                                   double tol = 0.5) {
  static const double targets[3] = {-1.0, 1.0, 10.0};
  bool used[3] = {false, false, false};
  for (double c : centers) {
    int best = 0;
    double bd = std::abs(c - targets[0]);
    for (int t = 1; t < 3; ++t) {
      const double dd = std::abs(c - targets[t]);
      if (dd < bd) {
        bd = dd;
        best = t;
      }
    }
    if (bd >= tol || used[best]) return false;
    used[best] = true;
  }
  return true;
}

struct InstabilityResult {
  SampleSet data;
  int em_bad = 0, gd_bad = 0;
  std::vector<std::array<double, 3>> em_centers, gd_centers;
  std::vector<bool> em_global, gd_global;
  std::vector<double> wfr_final_gap, wfr_final_nll;
  ParticleMixture wfr_example;            // first composite-scheme endpoint
  int em_example_global = -1, em_example_bad = -1;  // trial indices for plots
};

inline InstabilityResult run_instability(const InstabilityConfig& cfg) {
  InstabilityResult res;
  const KernelSpec k(1);
  res.data = sample(GroundTruthMixture::discrete_three_atom(1), 1, cfg.n,
                    cfg.data_seed);
  const SampleSet& s = res.data;

  res.em_centers.resize(cfg.em_trials);
  res.em_global.resize(cfg.em_trials);
  for_trials(cfg.em_trials, cfg.threads, [&](int t) {
    ParticleMixture rho = init_particles(s, 3, substream(cfg.base_seed + t, kTagInit));
    // known weights: the true 1/3 each
    OptimizerConfig oc;
    oc.scheme = Scheme::EMKnownWeights;
    oc.max_iters = cfg.em_iters;
    oc.record_every = cfg.em_iters + 1;
    RunResult rr = run(k, s, rho, oc);
    std::array<double, 3> c{rr.mixture.locations[0], rr.mixture.locations[1],
                            rr.mixture.locations[2]};
    std::sort(c.begin(), c.end());
    res.em_centers[t] = c;
    res.em_global[t] = is_global_three_center(c);
  });

  res.gd_centers.resize(cfg.gd_trials);
  res.gd_global.resize(cfg.gd_trials);
  for_trials(cfg.gd_trials, cfg.threads, [&](int t) {
    ParticleMixture rho = init_particles(s, 3, substream(cfg.base_seed + t, kTagInit));
    OptimizerConfig oc;
    oc.scheme = Scheme::Wasserstein;
    oc.eta = cfg.gd_eta;
    oc.max_iters = cfg.gd_iters;
    oc.record_every = cfg.gd_iters + 1;
    RunResult rr = run(k, s, rho, oc);
    std::array<double, 3> c{rr.mixture.locations[0], rr.mixture.locations[1],
                            rr.mixture.locations[2]};
    std::sort(c.begin(), c.end());
    res.gd_centers[t] = c;
    res.gd_global[t] = is_global_three_center(c);
  });

  for (int t = 0; t < cfg.em_trials; ++t) {
    if (res.em_global[t] && res.em_example_global < 0) res.em_example_global = t;
    if (!res.em_global[t] && res.em_example_bad < 0) res.em_example_bad = t;
    res.em_bad += res.em_global[t] ? 0 : 1;
  }
  for (int t = 0; t < cfg.gd_trials; ++t) res.gd_bad += res.gd_global[t] ? 0 : 1;

  res.wfr_final_gap.resize(cfg.wfr_trials);
  res.wfr_final_nll.resize(cfg.wfr_trials);
  std::vector<ParticleMixture> finals(cfg.wfr_trials);
  for_trials(cfg.wfr_trials, cfg.threads, [&](int t) {
    ParticleMixture rho =
        init_particles(s, cfg.wfr_m, substream(cfg.base_seed + t, kTagInit));
    OptimizerConfig oc;
    oc.scheme = Scheme::WFR;
    oc.eta = cfg.wfr_eta;
    oc.gamma = cfg.wfr_eta;  // single step size
    oc.max_iters = cfg.wfr_iters;
    oc.record_every = cfg.wfr_iters + 1;
    RunResult rr = run(k, s, rho, oc);
    FirstVariationField f(k, s, rr.mixture);
    res.wfr_final_gap[t] = certify_1d(f, rr.mixture).gap_hat;
    res.wfr_final_nll[t] = rr.record.points.back().train_nll;
    finals[t] = std::move(rr.mixture);
  });
  if (!finals.empty()) res.wfr_example = std::move(finals.front());
  return res;
}

// ----------------------------------------------------- geometry comparison

struct ComparisonConfig {
  std::int64_t n = 1500;
  int d = 10;
  std::vector<std::int64_t> m_grid = {100, 500};
  std::int64_t iters = 1000;
  double eta_fr = 0.1;
  double eta_w = 0.1;
  double eta_wfr = 0.01;
  int trials = 5;
  std::uint64_t base_seed = 200;
  std::int64_t heldout_factor = 10;
  std::int64_t record_every = 100;
  int threads = 1;
};

struct ComparisonCell {  // one (m, scheme) combination
  std::int64_t m = 0;
  Scheme scheme = Scheme::WFR;
  double eta = 0;
  std::vector<TrajectoryRecord> trials;
  std::vector<double> final_train, final_test;
};

struct ComparisonResult {
  std::vector<ComparisonCell> cells;

  const ComparisonCell& cell(std::int64_t m, Scheme sc) const {
    for (const auto& c : cells)
      if (c.m == m && c.scheme == sc) return c;
    throw std::invalid_argument("ComparisonResult: no such cell");
  }
};

inline ComparisonResult run_comparison(const ComparisonConfig& cfg) {
  ComparisonResult res;
  const KernelSpec k(cfg.d);
  const GroundTruthMixture gt = GroundTruthMixture::discrete_three_atom(cfg.d);

  // fresh data per trial, shared across schemes and m for comparability
  std::vector<SampleSet> train(cfg.trials), test(cfg.trials);
  for (int t = 0; t < cfg.trials; ++t) {
    const std::uint64_t seed_t = cfg.base_seed + t;
    train[t] = sample(gt, cfg.d, cfg.n, substream(seed_t, kTagData));
    test[t] = sample(gt, cfg.d, cfg.n * cfg.heldout_factor,
                     substream(seed_t, kTagTest));
  }

  const std::array<std::pair<Scheme, double>, 3> schemes = {
      std::pair{Scheme::FisherRao, cfg.eta_fr},
      std::pair{Scheme::Wasserstein, cfg.eta_w},
      std::pair{Scheme::WFR, cfg.eta_wfr}};

  for (std::int64_t m : cfg.m_grid)
    for (const auto& [sc, eta] : schemes) {
      ComparisonCell cell;
      cell.m = m;
      cell.scheme = sc;
      cell.eta = eta;
      cell.trials.resize(cfg.trials);
      cell.final_train.resize(cfg.trials);
      cell.final_test.resize(cfg.trials);
      for_trials(cfg.trials, cfg.threads, [&](int t) {
        const std::uint64_t seed_t = cfg.base_seed + t;
        ParticleMixture rho0 =
            init_particles(train[t], m, substream(seed_t, kTagInit));
        OptimizerConfig oc;
        oc.scheme = sc;
        oc.eta = eta;
        oc.gamma = eta;
        oc.max_iters = cfg.iters;
        oc.record_every = cfg.record_every;
        RecordOptions ro;
        ro.heldout = &test[t];
        RunResult rr = run(k, train[t], rho0, oc, ro);
        cell.final_train[t] = rr.record.points.back().train_nll;
        cell.final_test[t] = rr.record.points.back().test_nll;
        cell.trials[t] = std::move(rr.record);
      });
      res.cells.push_back(std::move(cell));
    }
  return res;
}

// ------------------------------------------------------- certificate decay

struct GapDecayConfig {
  std::int64_t n = 1500;
  std::int64_t m = 500;
  double eta = 0.1;
  double gamma = 0.1;
  std::int64_t iters = 1000;
  int trials = 20;
  std::uint64_t base_seed = 300;
  std::int64_t record_every = 50;
  double gap_spacing = 0.01;
  double gap_margin = 1.0;
  std::int64_t fit_lo = 100, fit_hi = 1000;  // slope window (iterations)
  int threads = 1;
};

struct GapDecayResult {
  std::vector<TrajectoryRecord> trials;
  std::vector<double> slopes;  // per-trial log-log slope over the window
  double median_slope = 0;
  SampleSet first_data;          // trial 0 inputs, for figures
  ParticleMixture first_mixture; // trial 0 endpoint
};

inline GapDecayResult run_gap_decay(const GapDecayConfig& cfg) {
  GapDecayResult res;
  const KernelSpec k(1);
  const GroundTruthMixture gt = GroundTruthMixture::discrete_three_atom(1);
  res.trials.resize(cfg.trials);
  res.slopes.resize(cfg.trials);
  std::vector<ParticleMixture> finals(cfg.trials);
  std::vector<SampleSet> data(cfg.trials);
  for (int t = 0; t < cfg.trials; ++t)
    data[t] = sample(gt, 1, cfg.n, substream(cfg.base_seed + t, kTagData));

  for_trials(cfg.trials, cfg.threads, [&](int t) {
    const std::uint64_t seed_t = cfg.base_seed + t;
    ParticleMixture rho0 = init_particles(data[t], cfg.m, substream(seed_t, kTagInit));
    OptimizerConfig oc;
    oc.scheme = Scheme::WFR;
    oc.eta = cfg.eta;
    oc.gamma = cfg.gamma;
    oc.max_iters = cfg.iters;
    oc.record_every = cfg.record_every;
    RecordOptions ro;
    ro.record_gap = true;
    ro.gap_spacing = cfg.gap_spacing;
    ro.gap_margin = cfg.gap_margin;
    RunResult rr = run(k, data[t], rho0, oc, ro);

    std::vector<double> lx, ly;
    for (const auto& pt : rr.record.points)
      if (pt.iter >= cfg.fit_lo && pt.iter <= cfg.fit_hi && !std::isnan(pt.gap_hat)) {
        lx.push_back(std::log(static_cast<double>(pt.iter)));
        ly.push_back(std::log(std::max(pt.gap_hat, 1e-12)));
      }
    res.slopes[t] = ols_slope(lx, ly);
    res.trials[t] = std::move(rr.record);
    finals[t] = std::move(rr.mixture);
  });
  res.median_slope = median(res.slopes);
  res.first_data = std::move(data.front());
  res.first_mixture = std::move(finals.front());
  return res;
}

// ----------------------------------------------------------- population lab

struct LabConfig {
  double bw_T = 100.0;
  double bw_dt = 1e-3;
  int scan_steps = 201;
  double wide_sigma0 = 3.0, wide_sigma1 = 1.0;  // std deviations
  int quad_nodes = 200;
};

struct V0CheckRow {
  int d = 1;
  double r = 0;            // ||x||
  double closed_radial = 0;  // component of v0 along x/||x||
  double quad_radial = 0;
  double rel_err = 0;
};

struct LabResult {
  std::vector<BWState> bw;
  double bw_max_lower_violation = 0, bw_max_upper_violation = 0;
  std::vector<GeodesicPoint> wide_narrow;   // N(0,9) -> N(0,1)
  std::vector<GeodesicPoint> narrow_delta;  // N(0,1) -> delta_0
  std::vector<V0CheckRow> v0_rows;
  double v0_max_rel_err = 0;                // closed form vs quadrature, d=1,2
  bool wide_narrow_nonconvex = false;
};

inline LabResult run_lab(const LabConfig& cfg = {}) {
  LabResult res;
  res.bw = bw_flow(1.0, cfg.bw_T, cfg.bw_dt);
  for (const auto& st : res.bw) {
    res.bw_max_lower_violation =
        std::max(res.bw_max_lower_violation, bw_lower_bound(st.t) - st.sigma2);
    res.bw_max_upper_violation =
        std::max(res.bw_max_upper_violation, st.sigma2 - bw_upper_bound(st.t));
  }

  res.wide_narrow = geodesic_scan(cfg.wide_sigma0, cfg.wide_sigma1, cfg.scan_steps);
  res.narrow_delta = geodesic_scan(1.0, 0.0, cfg.scan_steps);
  for (std::size_t i = 1; i + 1 < res.wide_narrow.size(); ++i) {
    const double dd = res.wide_narrow[i + 1].loss - 2 * res.wide_narrow[i].loss +
                      res.wide_narrow[i - 1].loss;
    if (dd < 0) res.wide_narrow_nonconvex = true;
  }

  for (int d = 1; d <= 2; ++d)
    for (double r : {0.5, 1.0, 2.0, 4.0}) {
      // point at radius r, off-axis in d=2
      std::vector<double> x(d, r / std::sqrt(static_cast<double>(d)));
      const auto closed = pushforward_v0(x, d);
      const auto quad = pushforward_v0_quadrature(x, d, cfg.quad_nodes);
      double diff2 = 0, norm2 = 0;
      V0CheckRow row{d, r, 0, 0, 0};
      for (int c = 0; c < d; ++c) {
        diff2 += (closed[c] - quad[c]) * (closed[c] - quad[c]);
        norm2 += closed[c] * closed[c];
        row.closed_radial += closed[c] * x[c] / r;
        row.quad_radial += quad[c] * x[c] / r;
      }
      row.rel_err = std::sqrt(diff2 / norm2);
      res.v0_max_rel_err = std::max(res.v0_max_rel_err, row.rel_err);
      res.v0_rows.push_back(row);
    }
  return res;
}

}  // namespace npmle
