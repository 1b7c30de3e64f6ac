// Command-line front end: dataset generation, fitting, certification, and
// scripted experiments with CSV/SVG/manifest output.
//
// Exit codes: 0 success, 2 config error, 3 numerical abort, 4 I/O error.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "npmle/datagen.hpp"
#include "npmle/experiments.hpp"
#include "npmle/io.hpp"
#include "npmle/svg.hpp"

namespace {

using npmle::json;

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json j = json::parse(npmle::read_file(path));  // parse_error -> exit 2
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  return j;
}

template <typename T>
void jset(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

// mixture density rho*phi on a 1-D grid
std::vector<double> density_curve(const std::vector<double>& centers,
                                  const std::vector<double>& weights,
                                  const std::vector<double>& grid) {
  std::vector<double> out(grid.size(), 0.0);
  const double c0 = 1.0 / std::sqrt(2.0 * 3.14159265358979323846);
  for (std::size_t g = 0; g < grid.size(); ++g)
    for (std::size_t j = 0; j < centers.size(); ++j) {
      const double z = grid[g] - centers[j];
      out[g] += weights[j] * c0 * std::exp(-0.5 * z * z);
    }
  return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
  return out;
}

// ------------------------------------------------------------------ generate

struct GenerateOpts {
  std::string kind = "discrete";
  int d = 1;
  std::int64_t n = 1500;
  std::uint64_t seed = 1;
  std::string out = "out/generate";
  std::vector<double> atom_weights;     // custom kind
  std::vector<double> atom_locations;   // custom kind, row major
};

int cmd_generate(const GenerateOpts& o) {
  npmle::GroundTruthMixture gt;
  if (o.kind == "continuous") {
    gt = npmle::GroundTruthMixture::continuous(o.d);
  } else if (o.kind == "discrete") {
    gt = npmle::GroundTruthMixture::discrete_three_atom(o.d);
  } else if (o.kind == "custom") {
    gt = npmle::GroundTruthMixture::custom(o.d, o.atom_locations, o.atom_weights);
  } else {
    throw std::invalid_argument("unknown kind '" + o.kind + "'");
  }
  npmle::SampleSet s = npmle::sample(gt, o.d, o.n, o.seed);
  json cfg{{"kind", o.kind}, {"d", o.d}, {"N", o.n}, {"seed", o.seed}};
  npmle::RunManifest man(o.out, "generate", cfg);
  man.emit("samples.csv", npmle::samples_to_csv(s));
  man.emit("metadata.json",
           npmle::dataset_metadata(o.kind, o.d, o.n, o.seed).dump(2) + "\n");
  man.finalize();
  std::cout << "wrote " << (man.dir() / "samples.csv").string() << " (N=" << o.n
            << ", d=" << o.d << ")\n";
  return 0;
}

// ----------------------------------------------------------------------- fit

struct FitOpts {
  std::string data;
  std::string heldout;
  std::string scheme = "wfr";
  std::int64_t m = 500;
  double eta = 0.1;
  double gamma = -1;  // default: tied to eta
  std::int64_t iters = 1000;
  std::uint64_t seed = 1;
  std::int64_t record_every = 10;
  std::string order = "locations-first";
  bool snapshots = false;
  bool record_gap = false;
  std::vector<double> weights;  // em-known initial/fixed weights
  std::string out = "out/fit";
  int threads = 1;
};

npmle::Scheme parse_scheme(const std::string& s) {
  if (s == "wfr") return npmle::Scheme::WFR;
  if (s == "fr") return npmle::Scheme::FisherRao;
  if (s == "w") return npmle::Scheme::Wasserstein;
  if (s == "em-known") return npmle::Scheme::EMKnownWeights;
  if (s == "em-fixed") return npmle::Scheme::FixedLocationEM;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

int cmd_fit(const FitOpts& o) {
  npmle::parallel::set_default_threads(o.threads);
  const npmle::SampleSet s = npmle::samples_from_csv(npmle::read_file(o.data));
  const npmle::KernelSpec k(s.d);

  npmle::ParticleMixture rho0 = npmle::init_particles(s, o.m, o.seed);
  if (!o.weights.empty()) {
    if (static_cast<std::int64_t>(o.weights.size()) != o.m)
      throw std::invalid_argument("--weights length must equal m");
    rho0 = npmle::ParticleMixture::from_weights(s.d, rho0.locations, o.weights);
  }

  npmle::OptimizerConfig oc;
  oc.scheme = parse_scheme(o.scheme);
  oc.eta = o.eta;
  oc.gamma = o.gamma > 0 ? o.gamma : o.eta;
  oc.max_iters = o.iters;
  oc.seed = o.seed;
  oc.record_every = o.record_every;
  if (o.order == "weights-first")
    oc.order = npmle::UpdateOrder::WeightsFirst;
  else if (o.order != "locations-first")
    throw std::invalid_argument("unknown order '" + o.order + "'");

  npmle::RecordOptions ro;
  std::optional<npmle::SampleSet> held;
  if (!o.heldout.empty()) {
    held = npmle::samples_from_csv(npmle::read_file(o.heldout));
    ro.heldout = &*held;
  }
  ro.record_particles = o.snapshots;
  ro.record_gap = o.record_gap;

  npmle::RunResult rr = npmle::run(k, s, rho0, oc, ro);

  json cfg{{"data", o.data},       {"scheme", o.scheme},
           {"m", o.m},             {"eta", oc.eta},
           {"gamma", oc.gamma},    {"iters", o.iters},
           {"seed", o.seed},       {"record_every", o.record_every},
           {"order", o.order},     {"heldout", o.heldout},
           {"heldout_note", "test loss is a Monte-Carlo population-loss estimate"},
           {"threads", o.threads}};
  npmle::RunManifest man(o.out, "fit", cfg);
  man.emit("trajectory.csv", npmle::trajectory_to_csv(rr.record));
  man.emit("mixture.csv", npmle::mixture_to_csv(rr.mixture));
  if (o.snapshots) man.emit("snapshots.csv", npmle::snapshots_to_csv(rr.record));
  man.finalize();

  if (rr.record.aborted) {
    std::cerr << "fit aborted: " << rr.record.abort_message << "\n";
    return 3;
  }
  std::cout << "final nll " << npmle::fmt17(rr.record.points.back().train_nll)
            << " after " << o.iters << " iterations\n";
  return 0;
}

// ------------------------------------------------------------------- certify

struct CertifyOpts {
  std::string data;
  std::string mixture;
  double spacing = 0.01;
  double margin = 1.0;
  bool refine = false;
  std::string out = "out/certify";
};

int cmd_certify(const CertifyOpts& o) {
  const npmle::SampleSet s = npmle::samples_from_csv(npmle::read_file(o.data));
  const npmle::ParticleMixture rho =
      npmle::mixture_from_csv(npmle::read_file(o.mixture));
  const npmle::KernelSpec k(s.d);
  npmle::FirstVariationField f(k, s, rho);
  const npmle::CertificationReport rep =
      o.refine ? npmle::certify_1d_refined(f, rho, o.spacing, o.margin)
               : npmle::certify_1d(f, rho, o.spacing, o.margin);

  json cfg{{"data", o.data},
           {"mixture", o.mixture},
           {"spacing", o.spacing},
           {"margin", o.margin},
           {"refine", o.refine}};
  npmle::RunManifest man(o.out, "certify", cfg);
  man.emit("certification.json", npmle::certification_to_json(rep).dump(2) + "\n");
  man.finalize();
  std::cout << "gap_hat " << npmle::fmt17(rep.gap_hat) << ", atom_flatness "
            << npmle::fmt17(rep.atom_flatness) << "\n";
  return 0;
}

// ---------------------------------------------------------------- experiment

struct ExperimentOpts {
  std::string name;
  std::string config;
  std::string out = "out/experiment";
  std::uint64_t seed = 0;  // overrides base_seed when nonzero
  int threads = 1;
  bool seed_given = false;
};

int cmd_experiment_instability(const ExperimentOpts& eo, const json& file_cfg) {
  npmle::InstabilityConfig c;
  c.threads = eo.threads;
  jset(file_cfg, "N", c.n);
  jset(file_cfg, "data_seed", c.data_seed);
  jset(file_cfg, "em_trials", c.em_trials);
  jset(file_cfg, "em_iters", c.em_iters);
  jset(file_cfg, "gd_trials", c.gd_trials);
  jset(file_cfg, "gd_eta", c.gd_eta);
  jset(file_cfg, "gd_iters", c.gd_iters);
  jset(file_cfg, "wfr_trials", c.wfr_trials);
  jset(file_cfg, "wfr_m", c.wfr_m);
  jset(file_cfg, "wfr_eta", c.wfr_eta);
  jset(file_cfg, "wfr_iters", c.wfr_iters);
  jset(file_cfg, "base_seed", c.base_seed);
  jset(file_cfg, "threads", c.threads);
  if (eo.seed_given) c.base_seed = eo.seed;

  const npmle::InstabilityResult r = npmle::run_instability(c);

  json cfg{{"experiment", "instability"}, {"N", c.n},
           {"data_seed", c.data_seed},    {"em_trials", c.em_trials},
           {"em_iters", c.em_iters},      {"gd_trials", c.gd_trials},
           {"gd_eta", c.gd_eta},          {"gd_iters", c.gd_iters},
           {"wfr_trials", c.wfr_trials},  {"wfr_m", c.wfr_m},
           {"wfr_eta", c.wfr_eta},        {"wfr_iters", c.wfr_iters},
           {"base_seed", c.base_seed},    {"threads", c.threads},
           {"seed_rule", "per-trial seed = base_seed + trial index"}};
  npmle::RunManifest man(eo.out, "experiment instability", cfg);

  {
    std::ostringstream csv;
    csv << "method,bad,total\n";
    csv << "em," << r.em_bad << "," << c.em_trials << "\n";
    csv << "gd," << r.gd_bad << "," << c.gd_trials << "\n";
    man.emit("counts.csv", csv.str());
  }
  {
    std::ostringstream csv;
    csv << "method,trial,c1,c2,c3,global\n";
    for (int t = 0; t < c.em_trials; ++t)
      csv << "em," << t << "," << npmle::fmt17(r.em_centers[t][0]) << ","
          << npmle::fmt17(r.em_centers[t][1]) << ","
          << npmle::fmt17(r.em_centers[t][2]) << "," << (r.em_global[t] ? 1 : 0)
          << "\n";
    for (int t = 0; t < c.gd_trials; ++t)
      csv << "gd," << t << "," << npmle::fmt17(r.gd_centers[t][0]) << ","
          << npmle::fmt17(r.gd_centers[t][1]) << ","
          << npmle::fmt17(r.gd_centers[t][2]) << "," << (r.gd_global[t] ? 1 : 0)
          << "\n";
    man.emit("centers.csv", csv.str());
  }
  {
    std::ostringstream csv;
    csv << "trial,gap_hat,final_nll\n";
    for (std::size_t t = 0; t < r.wfr_final_gap.size(); ++t)
      csv << t << "," << npmle::fmt17(r.wfr_final_gap[t]) << ","
          << npmle::fmt17(r.wfr_final_nll[t]) << "\n";
    man.emit("wfr_gaps.csv", csv.str());
  }
  {
    // fitted-vs-true density overlays
    const auto grid = linspace(-5.0, 14.0, 420);
    npmle::LineChart chart("fitted mixture densities", "x", "density");
    chart.add_line("true", grid,
                   density_curve({-1, 1, 10}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, grid));
    const std::vector<double> third{1.0 / 3, 1.0 / 3, 1.0 / 3};
    if (r.em_example_global >= 0) {
      const auto& cc = r.em_centers[r.em_example_global];
      chart.add_line("em (global)", grid,
                     density_curve({cc[0], cc[1], cc[2]}, third, grid));
    }
    if (r.em_example_bad >= 0) {
      const auto& cc = r.em_centers[r.em_example_bad];
      chart.add_line("em (bad minimum)", grid,
                     density_curve({cc[0], cc[1], cc[2]}, third, grid));
    }
    if (r.wfr_example.count() > 0)
      chart.add_line("composite", grid,
                     density_curve(r.wfr_example.locations,
                                   r.wfr_example.weights(), grid));
    man.emit("densities.svg", chart.render());
  }
  man.finalize();
  std::cout << "em bad " << r.em_bad << "/" << c.em_trials << ", gd bad "
            << r.gd_bad << "/" << c.gd_trials << "\n";
  return 0;
}

const char* scheme_label(npmle::Scheme s) {
  switch (s) {
    case npmle::Scheme::WFR: return "wfr";
    case npmle::Scheme::FisherRao: return "fr";
    case npmle::Scheme::Wasserstein: return "w";
    case npmle::Scheme::EMKnownWeights: return "em-known";
    case npmle::Scheme::FixedLocationEM: return "em-fixed";
  }
  return "?";
}

int cmd_experiment_comparison(const ExperimentOpts& eo, const json& file_cfg) {
  npmle::ComparisonConfig c;
  c.threads = eo.threads;
  jset(file_cfg, "N", c.n);
  jset(file_cfg, "d", c.d);
  jset(file_cfg, "m_grid", c.m_grid);
  jset(file_cfg, "iters", c.iters);
  jset(file_cfg, "eta_fr", c.eta_fr);
  jset(file_cfg, "eta_w", c.eta_w);
  jset(file_cfg, "eta_wfr", c.eta_wfr);
  jset(file_cfg, "trials", c.trials);
  jset(file_cfg, "base_seed", c.base_seed);
  jset(file_cfg, "heldout_factor", c.heldout_factor);
  jset(file_cfg, "record_every", c.record_every);
  jset(file_cfg, "threads", c.threads);
  if (eo.seed_given) c.base_seed = eo.seed;

  const npmle::ComparisonResult r = npmle::run_comparison(c);

  json cfg{{"experiment", "comparison"},
           {"N", c.n},
           {"d", c.d},
           {"m_grid", c.m_grid},
           {"iters", c.iters},
           {"eta_fr", c.eta_fr},
           {"eta_w", c.eta_w},
           {"eta_wfr", c.eta_wfr},
           {"trials", c.trials},
           {"base_seed", c.base_seed},
           {"heldout_factor", c.heldout_factor},
           {"record_every", c.record_every},
           {"threads", c.threads},
           {"heldout_note", "test loss is a Monte-Carlo population-loss estimate "
                            "on a fresh sample of heldout_factor*N points"},
           {"seed_rule", "per-trial seed = base_seed + trial index"}};
  npmle::RunManifest man(eo.out, "experiment comparison", cfg);

  {
    std::ostringstream csv;
    csv << "m,scheme,trial,final_train,final_test\n";
    for (const auto& cell : r.cells)
      for (int t = 0; t < c.trials; ++t)
        csv << cell.m << "," << scheme_label(cell.scheme) << "," << t << ","
            << npmle::fmt17(cell.final_train[t]) << ","
            << npmle::fmt17(cell.final_test[t]) << "\n";
    man.emit("final_losses.csv", csv.str());
  }
  {
    std::ostringstream csv;
    csv << "m,scheme,iter,train_mean,train_sd,test_mean,test_sd\n";
    for (const auto& cell : r.cells) {
      const std::size_t pts = cell.trials.front().points.size();
      for (std::size_t p = 0; p < pts; ++p) {
        double tm = 0, ts = 0, hm = 0, hs = 0;
        for (const auto& tr : cell.trials) {
          tm += tr.points[p].train_nll;
          hm += tr.points[p].test_nll;
        }
        tm /= c.trials;
        hm /= c.trials;
        for (const auto& tr : cell.trials) {
          ts += (tr.points[p].train_nll - tm) * (tr.points[p].train_nll - tm);
          hs += (tr.points[p].test_nll - hm) * (tr.points[p].test_nll - hm);
        }
        ts = c.trials > 1 ? std::sqrt(ts / (c.trials - 1)) : 0;
        hs = c.trials > 1 ? std::sqrt(hs / (c.trials - 1)) : 0;
        csv << cell.m << "," << scheme_label(cell.scheme) << ","
            << cell.trials.front().points[p].iter << "," << npmle::fmt17(tm)
            << "," << npmle::fmt17(ts) << "," << npmle::fmt17(hm) << ","
            << npmle::fmt17(hs) << "\n";
      }
    }
    man.emit("trajectories.csv", csv.str());
  }
  for (std::int64_t m : c.m_grid) {
    npmle::LineChart chart("train loss, m = " + std::to_string(m), "iteration",
                           "train nll");
    for (npmle::Scheme sc :
         {npmle::Scheme::FisherRao, npmle::Scheme::Wasserstein, npmle::Scheme::WFR}) {
      const auto& cell = r.cell(m, sc);
      std::vector<double> xs, ys, es;
      const std::size_t pts = cell.trials.front().points.size();
      for (std::size_t p = 0; p < pts; ++p) {
        double tm = 0;
        for (const auto& tr : cell.trials) tm += tr.points[p].train_nll;
        tm /= c.trials;
        double ts = 0;
        for (const auto& tr : cell.trials)
          ts += (tr.points[p].train_nll - tm) * (tr.points[p].train_nll - tm);
        ts = c.trials > 1 ? std::sqrt(ts / (c.trials - 1)) : 0;
        xs.push_back(static_cast<double>(cell.trials.front().points[p].iter));
        ys.push_back(tm);
        es.push_back(ts);
      }
      chart.add_line(scheme_label(sc), xs, ys, es);
    }
    man.emit("train_m" + std::to_string(m) + ".svg", chart.render());
  }
  man.finalize();
  for (std::int64_t m : c.m_grid) {
    std::cout << "m=" << m << ":";
    for (npmle::Scheme sc :
         {npmle::Scheme::FisherRao, npmle::Scheme::Wasserstein, npmle::Scheme::WFR})
      std::cout << " " << scheme_label(sc) << " median "
                << npmle::fmt17(npmle::median(r.cell(m, sc).final_train));
    std::cout << "\n";
  }
  return 0;
}

int cmd_experiment_gap_decay(const ExperimentOpts& eo, const json& file_cfg) {
  npmle::GapDecayConfig c;
  c.threads = eo.threads;
  jset(file_cfg, "N", c.n);
  jset(file_cfg, "m", c.m);
  jset(file_cfg, "eta", c.eta);
  jset(file_cfg, "gamma", c.gamma);
  jset(file_cfg, "iters", c.iters);
  jset(file_cfg, "trials", c.trials);
  jset(file_cfg, "base_seed", c.base_seed);
  jset(file_cfg, "record_every", c.record_every);
  jset(file_cfg, "gap_spacing", c.gap_spacing);
  jset(file_cfg, "gap_margin", c.gap_margin);
  jset(file_cfg, "fit_lo", c.fit_lo);
  jset(file_cfg, "fit_hi", c.fit_hi);
  jset(file_cfg, "threads", c.threads);
  if (eo.seed_given) c.base_seed = eo.seed;

  const npmle::GapDecayResult r = npmle::run_gap_decay(c);

  json cfg{{"experiment", "gap-decay"},
           {"N", c.n},
           {"m", c.m},
           {"eta", c.eta},
           {"gamma", c.gamma},
           {"iters", c.iters},
           {"trials", c.trials},
           {"base_seed", c.base_seed},
           {"record_every", c.record_every},
           {"gap_spacing", c.gap_spacing},
           {"gap_margin", c.gap_margin},
           {"fit_lo", c.fit_lo},
           {"fit_hi", c.fit_hi},
           {"threads", c.threads},
           {"seed_rule", "per-trial seed = base_seed + trial index"}};
  npmle::RunManifest man(eo.out, "experiment gap-decay", cfg);

  {
    std::ostringstream csv;
    csv << "trial,iter,gap_hat\n";
    for (std::size_t t = 0; t < r.trials.size(); ++t)
      for (const auto& pt : r.trials[t].points)
        if (!std::isnan(pt.gap_hat))
          csv << t << "," << pt.iter << "," << npmle::fmt17(pt.gap_hat) << "\n";
    man.emit("gaps.csv", csv.str());
  }
  {
    std::ostringstream csv;
    csv << "trial,slope\n";
    for (std::size_t t = 0; t < r.slopes.size(); ++t)
      csv << t << "," << npmle::fmt17(r.slopes[t]) << "\n";
    csv << "median," << npmle::fmt17(r.median_slope) << "\n";
    man.emit("slopes.csv", csv.str());
  }
  {
    npmle::LineChart chart("suboptimality gap decay", "iteration", "gap");
    chart.set_log_x(true);
    chart.set_log_y(true);
    std::vector<double> xs, ys;
    for (const auto& pt : r.trials.front().points)
      if (!std::isnan(pt.gap_hat) && pt.iter > 0) {
        xs.push_back(static_cast<double>(pt.iter));
        ys.push_back(std::max(pt.gap_hat, 1e-12));
      }
    chart.add_line("trial 0", xs, ys);
    // cross-trial median at each recorded iteration
    std::vector<double> mx, my;
    for (std::size_t p = 0; p < r.trials.front().points.size(); ++p) {
      const auto& pt0 = r.trials.front().points[p];
      if (std::isnan(pt0.gap_hat) || pt0.iter == 0) continue;
      std::vector<double> vals;
      for (const auto& tr : r.trials) vals.push_back(tr.points[p].gap_hat);
      mx.push_back(static_cast<double>(pt0.iter));
      my.push_back(std::max(npmle::median(vals), 1e-12));
    }
    chart.add_line("median", mx, my);
    man.emit("gap_decay.svg", chart.render());
  }
  {
    // first-variation landscape at the trial-0 endpoint, atoms sized by weight
    const npmle::KernelSpec k(1);
    npmle::FirstVariationField f(k, r.first_data, r.first_mixture);
    double lo = r.first_mixture.locations[0], hi = lo;
    for (std::int64_t j = 0; j < r.first_mixture.count(); ++j) {
      lo = std::min(lo, r.first_mixture.locations[j]);
      hi = std::max(hi, r.first_mixture.locations[j]);
    }
    const auto grid = linspace(lo - 1.0, hi + 1.0, 600);
    std::vector<double> fv(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g)
      fv[g] = f.eval(std::span<const double>(&grid[g], 1));
    npmle::LineChart chart("first variation at the endpoint", "x",
                           "first variation");
    chart.add_line("field", grid, fv);
    chart.add_line("optimality level", {grid.front(), grid.back()}, {-1.0, -1.0});
    std::vector<double> ax, ay, ar;
    for (std::int64_t j = 0; j < r.first_mixture.count(); ++j) {
      const double w = r.first_mixture.weight(j);
      if (w < 1e-8) continue;
      ax.push_back(r.first_mixture.locations[j]);
      ay.push_back(f.eval(r.first_mixture.loc(j)));
      ar.push_back(2.0 + 40.0 * std::sqrt(w));
    }
    chart.add_markers("atoms (area ~ weight)", ax, ay, ar);
    man.emit("first_variation.svg", chart.render());
  }
  {
    const auto grid = linspace(-5.0, 14.0, 420);
    npmle::LineChart chart("fitted vs true density", "x", "density");
    chart.add_line("true", grid,
                   density_curve({-1, 1, 10}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, grid));
    chart.add_line("fitted", grid,
                   density_curve(r.first_mixture.locations,
                                 r.first_mixture.weights(), grid));
    man.emit("density.svg", chart.render());
  }
  man.finalize();
  std::cout << "median log-log slope " << npmle::fmt17(r.median_slope) << "\n";
  return 0;
}

int cmd_lab(const ExperimentOpts& eo, const json& file_cfg) {
  npmle::LabConfig c;
  jset(file_cfg, "bw_T", c.bw_T);
  jset(file_cfg, "bw_dt", c.bw_dt);
  jset(file_cfg, "scan_steps", c.scan_steps);
  jset(file_cfg, "wide_sigma0", c.wide_sigma0);
  jset(file_cfg, "wide_sigma1", c.wide_sigma1);
  jset(file_cfg, "quad_nodes", c.quad_nodes);

  const npmle::LabResult r = npmle::run_lab(c);

  json cfg{{"experiment", "lab"},
           {"bw_T", c.bw_T},
           {"bw_dt", c.bw_dt},
           {"scan_steps", c.scan_steps},
           {"wide_sigma0", c.wide_sigma0},
           {"wide_sigma1", c.wide_sigma1},
           {"quad_nodes", c.quad_nodes}};
  npmle::RunManifest man(eo.out, "lab", cfg);

  const std::int64_t stride =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(r.bw.size()) / 2000);
  man.emit("bw_flow.csv", npmle::bw_to_csv(r.bw, stride));
  man.emit("geodesic_wide_narrow.csv", npmle::scan_to_csv(r.wide_narrow));
  man.emit("geodesic_narrow_delta.csv", npmle::scan_to_csv(r.narrow_delta));
  {
    std::ostringstream csv;
    csv << "d,r,closed_radial,quad_radial,rel_err\n";
    for (const auto& row : r.v0_rows)
      csv << row.d << "," << npmle::fmt17(row.r) << ","
          << npmle::fmt17(row.closed_radial) << ","
          << npmle::fmt17(row.quad_radial) << "," << npmle::fmt17(row.rel_err)
          << "\n";
    man.emit("v0_check.csv", csv.str());
  }
  {
    npmle::LineChart chart("variance flow toward the point target", "t",
                           "variance");
    std::vector<double> ts, vs, lb, ub;
    for (std::size_t i = 0; i < r.bw.size(); i += stride) {
      ts.push_back(r.bw[i].t);
      vs.push_back(r.bw[i].sigma2);
      lb.push_back(npmle::bw_lower_bound(r.bw[i].t));
      ub.push_back(npmle::bw_upper_bound(r.bw[i].t));
    }
    chart.set_log_x(false);
    chart.add_line("flow", ts, vs);
    chart.add_line("lower bound", ts, lb);
    chart.add_line("upper bound", ts, ub);
    man.emit("bw_flow.svg", chart.render());
  }
  {
    npmle::LineChart chart("population loss along geodesics", "t", "loss");
    std::vector<double> t1, l1, t2, l2;
    for (const auto& p : r.wide_narrow) {
      t1.push_back(p.t);
      l1.push_back(p.loss);
    }
    for (const auto& p : r.narrow_delta) {
      t2.push_back(p.t);
      l2.push_back(p.loss);
    }
    chart.add_line("wide to narrow", t1, l1);
    chart.add_line("narrow to point", t2, l2);
    man.emit("geodesics.svg", chart.render());
  }
  man.finalize();
  std::cout << "bw bound violation " << npmle::fmt17(std::max(
                   r.bw_max_lower_violation, r.bw_max_upper_violation))
            << ", v0 max rel err " << npmle::fmt17(r.v0_max_rel_err)
            << ", nonconvex segment " << (r.wide_narrow_nonconvex ? "yes" : "no")
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"interacting-particle maximum likelihood for Gaussian mixtures"};
  app.require_subcommand(1);

  GenerateOpts gen;
  std::string gen_config;
  CLI::App* cgen = app.add_subcommand("generate", "draw a synthetic dataset");
  cgen->add_option("--config", gen_config, "JSON config file");
  cgen->add_option("--kind", gen.kind, "continuous | discrete | custom");
  cgen->add_option("--d", gen.d, "dimension");
  cgen->add_option("--N", gen.n, "sample count");
  cgen->add_option("--seed", gen.seed, "generator seed");
  cgen->add_option("--out", gen.out, "output directory");

  FitOpts fit;
  std::string fit_config;
  CLI::App* cfit = app.add_subcommand("fit", "run one optimizer on a dataset");
  cfit->add_option("--config", fit_config, "JSON config file");
  cfit->add_option("--data", fit.data, "samples CSV");
  cfit->add_option("--heldout", fit.heldout, "heldout samples CSV");
  cfit->add_option("--scheme", fit.scheme, "wfr | fr | w | em-known | em-fixed");
  cfit->add_option("--m", fit.m, "particle count");
  cfit->add_option("--eta", fit.eta, "transport step size");
  cfit->add_option("--gamma", fit.gamma, "reaction step size (default: eta)");
  cfit->add_option("--iters", fit.iters, "iteration count");
  cfit->add_option("--seed", fit.seed, "initialization seed");
  cfit->add_option("--record-every", fit.record_every, "metric recording stride");
  cfit->add_option("--order", fit.order, "locations-first | weights-first");
  cfit->add_flag("--snapshots", fit.snapshots, "write particle snapshots CSV");
  cfit->add_flag("--record-gap", fit.record_gap, "record the certificate gap (d=1)");
  cfit->add_option("--weights", fit.weights, "fixed component weights")
      ->delimiter(',');
  cfit->add_option("--out", fit.out, "output directory");
  cfit->add_option("--threads", fit.threads, "threads for the sample pass");

  CertifyOpts cert;
  std::string cert_config;
  CLI::App* ccert = app.add_subcommand("certify", "grid optimality certificate (d=1)");
  ccert->add_option("--config", cert_config, "JSON config file");
  ccert->add_option("--data", cert.data, "samples CSV");
  ccert->add_option("--mixture", cert.mixture, "mixture CSV");
  ccert->add_option("--spacing", cert.spacing, "grid spacing");
  ccert->add_option("--margin", cert.margin, "grid margin beyond atom range");
  ccert->add_flag("--refine", cert.refine, "halve spacing until the gap stabilizes");
  ccert->add_option("--out", cert.out, "output directory");

  ExperimentOpts exp;
  CLI::App* cexp = app.add_subcommand("experiment", "scripted multi-trial studies");
  cexp->add_option("name", exp.name, "instability | comparison | gap-decay")
      ->required();
  cexp->add_option("--config", exp.config, "JSON config file");
  cexp->add_option("--out", exp.out, "output directory");
  CLI::Option* seed_opt = cexp->add_option("--seed", exp.seed, "base seed override");
  cexp->add_option("--threads", exp.threads, "trial-level threads");

  ExperimentOpts lab;
  lab.out = "out/lab";
  CLI::App* clab = app.add_subcommand("lab", "closed-form population benchmarks");
  clab->add_option("--config", lab.config, "JSON config file");
  clab->add_option("--out", lab.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*cgen) {
      const json jc = load_config(gen_config);
      // flags win over file values: re-apply only unset fields from the file
      GenerateOpts merged = gen;
      if (!cgen->count("--kind")) jset(jc, "kind", merged.kind);
      if (!cgen->count("--d")) jset(jc, "d", merged.d);
      if (!cgen->count("--N")) jset(jc, "N", merged.n);
      if (!cgen->count("--seed")) jset(jc, "seed", merged.seed);
      if (!cgen->count("--out")) jset(jc, "out", merged.out);
      jset(jc, "atom_weights", merged.atom_weights);
      jset(jc, "atom_locations", merged.atom_locations);
      return cmd_generate(merged);
    }
    if (*cfit) {
      const json jc = load_config(fit_config);
      FitOpts merged = fit;
      if (!cfit->count("--data")) jset(jc, "data", merged.data);
      if (!cfit->count("--heldout")) jset(jc, "heldout", merged.heldout);
      if (!cfit->count("--scheme")) jset(jc, "scheme", merged.scheme);
      if (!cfit->count("--m")) jset(jc, "m", merged.m);
      if (!cfit->count("--eta")) jset(jc, "eta", merged.eta);
      if (!cfit->count("--gamma")) jset(jc, "gamma", merged.gamma);
      if (!cfit->count("--iters")) jset(jc, "iters", merged.iters);
      if (!cfit->count("--seed")) jset(jc, "seed", merged.seed);
      if (!cfit->count("--record-every")) jset(jc, "record_every", merged.record_every);
      if (!cfit->count("--order")) jset(jc, "order", merged.order);
      if (!cfit->count("--out")) jset(jc, "out", merged.out);
      if (!cfit->count("--threads")) jset(jc, "threads", merged.threads);
      if (merged.data.empty())
        throw std::invalid_argument("fit: --data is required");
      return cmd_fit(merged);
    }
    if (*ccert) {
      const json jc = load_config(cert_config);
      CertifyOpts merged = cert;
      if (!ccert->count("--data")) jset(jc, "data", merged.data);
      if (!ccert->count("--mixture")) jset(jc, "mixture", merged.mixture);
      if (!ccert->count("--spacing")) jset(jc, "spacing", merged.spacing);
      if (!ccert->count("--margin")) jset(jc, "margin", merged.margin);
      if (!ccert->count("--out")) jset(jc, "out", merged.out);
      if (merged.data.empty() || merged.mixture.empty())
        throw std::invalid_argument("certify: --data and --mixture are required");
      return cmd_certify(merged);
    }
    if (*cexp) {
      exp.seed_given = seed_opt->count() > 0;
      const json jc = load_config(exp.config);
      if (exp.name == "instability") return cmd_experiment_instability(exp, jc);
      if (exp.name == "comparison") return cmd_experiment_comparison(exp, jc);
      if (exp.name == "gap-decay") return cmd_experiment_gap_decay(exp, jc);
      throw std::invalid_argument("unknown experiment '" + exp.name + "'");
    }
    if (*clab) {
      const json jc = load_config(lab.config);
      if (!clab->count("--out")) jset(jc, "out", lab.out);
      return cmd_lab(lab, jc);
    }
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
