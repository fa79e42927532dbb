#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "takens/config.hpp"
#include "takens/io.hpp"
#include "takens/lyapunov.hpp"
#include "takens/prediction.hpp"
#include "takens/regularity.hpp"

#ifndef TAKENS_BUILD_ID
#define TAKENS_BUILD_ID "unknown"
#endif

namespace takens {

/// Delay map for a config: basis of degree 2k-1 over the ambient space of
/// the system's manifold, base preset, and the canonical seed-derived alpha.
inline DelayMap delay_map_from_config(const ExperimentConfig& cfg) {
  Diffeo dyn = dynamics_from_id(cfg.system);
  MonomialBasis basis(dyn.manifold.ambient_dim(), 2 * cfg.k - 1);
  Observable obs(basis, base_kind_from_id(cfg.base), draw_alpha(basis, cfg.radius, cfg.seed));
  return DelayMap(std::move(dyn), std::move(obs), cfg.k);
}

/// Measure sampler for a config, with the periodic screen at p <= k-1.
inline MeasureSampler sampler_from_config(const ExperimentConfig& cfg) {
  Diffeo dyn = dynamics_from_id(cfg.system);
  MeasureSpec spec = measure_from_id(cfg.measure);
  std::uint64_t sampler_seed = Rng::stream(cfg.seed, "sampler").next_u64();
  MeasureSampler s = [&] {
    switch (spec.kind) {
      case MeasureKind::orbit_empirical:
        return MeasureSampler::orbit_empirical(dyn, spec.param, sampler_seed);
      case MeasureKind::cantor_product:
        return MeasureSampler::cantor_product(dyn.manifold, spec.param == 0 ? 8 : spec.param,
                                              sampler_seed);
      case MeasureKind::lebesgue:
      default:
        return MeasureSampler::lebesgue(dyn.manifold, sampler_seed);
    }
  }();
  if (cfg.k > 1) s.set_periodic_screen(dyn, cfg.k - 1, 1e-8);
  return s;
}

inline std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> grid;
  std::string token;
  std::istringstream in(csv);
  while (std::getline(in, token, ',')) {
    if (token.empty()) continue;
    try {
      grid.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw ConfigError("m_grid", "bad entry '" + token + "'");
    }
  }
  if (grid.empty()) throw ConfigError("m_grid", "empty grid");
  return grid;
}

struct RunResult {
  std::filesystem::path dir;
  nlohmann::ordered_json record;
  bool pass = true;
};

namespace runners {

struct Outputs {
  nlohmann::ordered_json results;
  std::vector<std::pair<std::string, CsvTable>> tables;
  bool pass = true;
};

inline Outputs run_embed(const ExperimentConfig& cfg) {
  DelayMap dm = delay_map_from_config(cfg);
  auto pts = sampler_from_config(cfg).sample(static_cast<int>(cfg.points));
  const int d = dm.dynamics.manifold.intrinsic_dim();
  std::vector<std::string> header;
  for (int c = 0; c < d; ++c) header.push_back("chart_" + std::to_string(c));
  for (int i = 0; i < dm.k; ++i) header.push_back("phi_" + std::to_string(i));
  CsvTable table(header);
  for (const auto& x : pts) {
    Eigen::VectorXd phi = delay_eval(dm, x);
    std::vector<std::string> row;
    for (int c = 0; c < d; ++c) row.push_back(cell(x.chart[c]));
    for (int i = 0; i < dm.k; ++i) row.push_back(cell(phi[i]));
    table.row(std::move(row));
  }
  Outputs out;
  out.results["rows"] = cfg.points;
  out.results["delay_length"] = dm.k;
  out.results["basis_size"] = dm.observable.basis().size();
  out.tables.emplace_back("embedded.csv", std::move(table));
  return out;
}

inline Outputs run_project(const ExperimentConfig& cfg) {
  Diffeo dyn = dynamics_from_id(cfg.system);
  const Manifold& m = dyn.manifold;
  if (cfg.k > m.ambient_dim()) throw ConfigError("k", "projection rank exceeds the ambient dimension");
  Rng rng = Rng::stream(cfg.seed, "projection");
  Projection proj = sample_projection(m.ambient_dim(), cfg.k, rng);
  auto pts = sampler_from_config(cfg).sample(static_cast<int>(cfg.points));
  const int d = m.intrinsic_dim();
  std::vector<std::string> header;
  for (int c = 0; c < d; ++c) header.push_back("chart_" + std::to_string(c));
  for (int i = 0; i < cfg.k; ++i) header.push_back("proj_" + std::to_string(i));
  CsvTable table(header);
  for (const auto& x : pts) {
    Eigen::VectorXd y = project_eval(proj, x);
    std::vector<std::string> row;
    for (int c = 0; c < d; ++c) row.push_back(cell(x.chart[c]));
    for (int i = 0; i < cfg.k; ++i) row.push_back(cell(y[i]));
    table.row(std::move(row));
  }
  Outputs out;
  out.results["rows"] = cfg.points;
  out.results["rank"] = cfg.k;
  nlohmann::ordered_json basis = nlohmann::ordered_json::array();
  for (int r = 0; r < proj.v_basis.rows(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int c = 0; c < proj.v_basis.cols(); ++c) row.push_back(proj.v_basis(r, c));
    basis.push_back(row);
  }
  out.results["v_basis"] = basis;
  out.tables.emplace_back("projected.csv", std::move(table));
  return out;
}

inline std::vector<int> probe_indices(int cloud_size, int probes, Rng& rng) {
  std::vector<int> idx;
  idx.reserve(probes);
  for (int i = 0; i < probes; ++i) idx.push_back(static_cast<int>(rng.uniform_int(cloud_size)));
  return idx;
}

inline Outputs run_bilip(const ExperimentConfig& cfg) {
  DelayMap dm = delay_map_from_config(cfg);
  auto pts = sampler_from_config(cfg).sample(static_cast<int>(cfg.points));
  PointCloud pc(dm.dynamics.manifold, std::move(pts), as_embed(dm));
  Rng rng = Rng::stream(cfg.seed, "probes");
  std::vector<int> probes = probe_indices(pc.size(), std::min<int>(cfg.probes, pc.size()), rng);
  BilipReport rep = bilip_report(pc, as_embed(dm), probes);
  CsvTable table({"index", "c_global", "c_local", "witness", "exact_collision"});
  for (const auto& r : rep.records) {
    table.row({cell(r.index), cell(r.c_global), cell(r.c_local), cell(r.witness),
               cell(r.exact_collision)});
  }
  Outputs out;
  out.results["probes"] = static_cast<long long>(probes.size());
  out.results["finite_count"] = rep.finite_count;
  out.results["collision_count"] = rep.collision_count;
  out.results["median_c_global"] = rep.median_c_global;
  out.results["max_finite_c_global"] = rep.max_finite_c_global;
  out.tables.emplace_back("bilip.csv", std::move(table));
  return out;
}

inline Outputs run_intersect(const ExperimentConfig& cfg) {
  DelayMap dm = delay_map_from_config(cfg);
  auto pts = sampler_from_config(cfg).sample(static_cast<int>(cfg.points));
  PointCloud pc(dm.dynamics.manifold, std::move(pts), as_embed(dm));
  Rng rng = Rng::stream(cfg.seed, "pairs");
  std::vector<std::pair<int, int>> violations;
  double rate = self_intersection_rate(pc, cfg.eps_sep, cfg.delta_emb,
                                       static_cast<int>(cfg.pairs), rng, &violations);
  CsvTable table({"i", "j", "rho", "embedded_distance"});
  for (const auto& [i, j] : violations) {
    table.row({cell(i), cell(j), cell(pc.rho(i, j)),
               cell((pc.embedded()[i] - pc.embedded()[j]).norm())});
  }
  Outputs out;
  out.results["pairs"] = cfg.pairs;
  out.results["eps_sep"] = cfg.eps_sep;
  out.results["delta_emb"] = cfg.delta_emb;
  out.results["violations"] = static_cast<long long>(violations.size());
  out.results["rate"] = rate;
  out.tables.emplace_back("violations.csv", std::move(table));
  return out;
}

inline Outputs run_immersion(const ExperimentConfig& cfg) {
  DelayMap dm = delay_map_from_config(cfg);
  auto pts = sampler_from_config(cfg).sample(static_cast<int>(cfg.points));
  Rng rng = Rng::stream(cfg.seed, "immersion");
  std::vector<double> per_draw;
  double fraction = immersion_scan(dm, pts, static_cast<int>(cfg.draws), cfg.radius, rng, &per_draw);
  CsvTable table({"draw", "full_rank_fraction"});
  for (size_t i = 0; i < per_draw.size(); ++i) table.row({cell(static_cast<long long>(i)), cell(per_draw[i])});
  Outputs out;
  out.results["points"] = static_cast<long long>(pts.size());
  out.results["alpha_draws"] = cfg.draws;
  out.results["fraction"] = fraction;
  out.tables.emplace_back("immersion.csv", std::move(table));
  return out;
}

inline Outputs run_svbound(const ExperimentConfig& cfg) {
  Rng rng = Rng::stream(cfg.seed, "svbound");
  Outputs out;

  // analytic strip: m=2, k=1, L=(1,0), z=0, r=1, eps=0.1
  Eigen::MatrixXd strip_l(1, 2);
  strip_l << 1.0, 0.0;
  SvBoundResult strip =
      svalue_measure_bound(strip_l, Eigen::VectorXd::Zero(1), 1.0, 0.1, 1, static_cast<int>(cfg.draws), rng);
  double strip_exact = (2.0 / M_PI) * (std::asin(0.1) + 0.1 * std::sqrt(1.0 - 0.01));
  out.results["strip"] = {{"fraction", strip.fraction},
                          {"exact", strip_exact},
                          {"bound", strip.bound},
                          {"draws", cfg.draws}};

  // 100-instance sweep of k = p = 1 slabs across coefficient dimensions
  CsvTable table({"instance", "m", "k", "p", "eps", "sigma_p", "fraction", "bound", "ratio"});
  std::vector<int> m_values = {5, 20, 56, 126};
  std::vector<double> widths = {0.5, 0.65, 0.8, 0.95};
  struct Instance {
    double fraction;
    double bound;
  };
  std::vector<Instance> instances;
  double c_fitted = 0.0;
  nlohmann::ordered_json per_m = nlohmann::ordered_json::object();
  for (int m : m_values) {
    double cmax = 0.0;
    for (int rep = 0; rep < 25; ++rep) {
      double u = widths[rep % widths.size()];
      Eigen::MatrixXd l = rng.gaussian_matrix(1, m);
      double eps = u * l.norm();
      SvBoundResult res = svalue_measure_bound(l, Eigen::VectorXd::Zero(1), 1.0, eps, 1,
                                               static_cast<int>(cfg.draws), rng);
      double ratio = res.bound > 0 ? res.fraction / res.bound : 0.0;
      cmax = std::max(cmax, ratio);
      table.row({cell(static_cast<long long>(instances.size())), cell(m), cell(1), cell(1),
                 cell(eps), cell(res.sigma_p), cell(res.fraction), cell(res.bound), cell(ratio)});
      instances.push_back(Instance{res.fraction, res.bound});
    }
    per_m[std::to_string(m)] = cmax;
    c_fitted = std::max(c_fitted, cmax);
  }
  bool all_within = true;
  for (const auto& inst : instances) {
    if (inst.fraction > c_fitted * inst.bound * (1 + 1e-12)) all_within = false;
  }
  out.results["sweep"] = {{"instances", static_cast<long long>(instances.size())},
                          {"c_fitted", c_fitted},
                          {"per_m", per_m},
                          {"all_within_fitted", all_within}};
  out.tables.emplace_back("svbound.csv", std::move(table));
  return out;
}

inline Outputs run_predict_error(const ExperimentConfig& cfg) {
  DelayMap dm = delay_map_from_config(cfg);
  auto pts = sampler_from_config(cfg).sample(static_cast<int>(cfg.points));
  auto ds = PredictionDataset::from_delay(dm, std::move(pts));
  Rng rng = Rng::stream(cfg.seed, "probes");
  auto grid = log_spaced(cfg.eps_min, cfg.eps_max, cfg.cells);
  ErrorCurve curve = error_curve(ds, cfg.probes, grid, rng);
  CsvTable table({"eps", "median_sigma", "mean_occupancy"});
  for (size_t e = 0; e < curve.eps_grid.size(); ++e) {
    table.row({cell(curve.eps_grid[e]), cell(curve.median_sigma[e]), cell(curve.mean_occupancy[e])});
  }
  CsvTable cells_table({"probe", "eps", "occupancy", "sigma", "dropped"});
  for (const auto& c : curve.cells) {
    cells_table.row({cell(c.probe), cell(c.eps), cell(c.occupancy), cell(c.sigma_value), cell(c.dropped)});
  }
  Outputs out;
  out.results["slope"] = curve.slope;
  out.results["intercept"] = curve.intercept;
  out.results["fitted_cells"] = curve.fitted_cells;
  out.results["dropped_cells"] = curve.dropped_cells;
  out.results["nn_floor"] = curve.nn_floor;
  out.tables.emplace_back("curve.csv", std::move(table));
  out.tables.emplace_back("cells.csv", std::move(cells_table));
  return out;
}

inline Outputs run_lyapunov(const ExperimentConfig& cfg) {
  DelayMap dm = delay_map_from_config(cfg);
  const Diffeo& dyn = dm.dynamics;
  ExperimentConfig start_cfg = cfg;
  start_cfg.measure = "lebesgue";
  auto sampler = sampler_from_config(start_cfg);
  ManifoldPoint x = sampler.sample(1)[0];

  DirectExponents de = direct_exponents(dyn, x, static_cast<int>(cfg.n_steps));
  OseledetsData osel = (dyn.name == "cat") ? cat_map_oseledets() : rotation_oseledets();
  FrequencyReport freq = observed_frequency(dm, x, osel, static_cast<int>(cfg.n_steps), cfg.eps);
  OrbitSegment seg = orbit(dyn, x, static_cast<int>(std::min<long long>(cfg.n_steps, 5000)));
  OccupancyCurve occ = em_occupancy(dm, seg, parse_grid(cfg.m_grid));

  CsvTable table({"n", "deviation", "good"});
  for (size_t i = 0; i < freq.deviations.size(); ++i) {
    table.row({cell(static_cast<long long>(i + 1)), cell(freq.deviations[i]),
               cell(!std::isnan(freq.deviations[i]) && freq.deviations[i] < cfg.eps)});
  }
  Outputs out;
  nlohmann::ordered_json exps = nlohmann::ordered_json::array();
  for (double e : de.exponents) exps.push_back(e);
  out.results["direct_exponents"] = exps;
  out.results["eps"] = cfg.eps;
  out.results["frequency"] = freq.fraction;
  out.results["dropped"] = freq.dropped;
  out.results["final_deviation"] = freq.deviations.empty() ? 0.0 : freq.deviations.back();
  nlohmann::ordered_json occj = nlohmann::ordered_json::array();
  for (size_t i = 0; i < occ.m_grid.size(); ++i) {
    occj.push_back({{"M", occ.m_grid[i]}, {"occupancy", occ.occupancy[i]}});
  }
  out.results["em_occupancy"] = occj;
  out.tables.emplace_back("deviations.csv", std::move(table));
  return out;
}

}  // namespace runners

/// Dispatch a validated config, write record.json plus the op's CSV tables
/// under the run directory, and return the record.
inline RunResult run(const ExperimentConfig& cfg) {
  validate(cfg);
  auto t0 = std::chrono::steady_clock::now();
  runners::Outputs outputs;
  if (cfg.op == "embed") outputs = runners::run_embed(cfg);
  else if (cfg.op == "project") outputs = runners::run_project(cfg);
  else if (cfg.op == "bilip") outputs = runners::run_bilip(cfg);
  else if (cfg.op == "intersect") outputs = runners::run_intersect(cfg);
  else if (cfg.op == "immersion") outputs = runners::run_immersion(cfg);
  else if (cfg.op == "svbound") outputs = runners::run_svbound(cfg);
  else if (cfg.op == "predict-error") outputs = runners::run_predict_error(cfg);
  else if (cfg.op == "lyapunov") outputs = runners::run_lyapunov(cfg);
  else throw ConfigError("op", "unknown subcommand '" + cfg.op + "'");
  auto t1 = std::chrono::steady_clock::now();

  RunResult rr;
  rr.pass = outputs.pass;
  rr.dir = make_run_dir(output_root(cfg.out), cfg.op, cfg.seed);
  rr.record["config"] = config_to_json(cfg);
  rr.record["build"] = TAKENS_BUILD_ID;
  rr.record["results"] = outputs.results;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& [name, table] : outputs.tables) {
    table.write(rr.dir / name);
    files.push_back(name);
  }
  rr.record["files"] = files;
  rr.record["timing"] = {
      {"wall_ms", std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()}};
  write_json(rr.dir / "record.json", rr.record);
  return rr;
}

/// The record with volatile fields removed; two runs of the same config must
/// agree byte-for-byte on the dump of this view.
inline nlohmann::ordered_json stable_view(nlohmann::ordered_json record) {
  record.erase("timing");
  return record;
}

}  // namespace takens
