#pragma once

#include <cmath>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "takens/harness.hpp"

namespace takens {

/// Sample sizes for one acceptance pass. "full" pins the battery exactly as
/// specified; "quick" shrinks the Monte Carlo sizes roughly tenfold and
/// relaxes the two statistical thresholds that depend on them (slope 0.9 ->
/// 0.85; the 3-standard-error windows widen on their own).
struct AcceptanceProfile {
  std::string name = "full";
  long long orbit_points = 100000;   // C2 training orbit
  int curve_probes = 64;             // C2 probes
  double slope_floor = 0.9;          // C2 threshold
  double curve_eps_lo = 0.0031622776601683794;  // C2 window, 10^-2.5
  double curve_eps_hi = 0.1;
  long long circle_points = 10000;   // C3 cloud
  long long intersect_pairs = 10000; // C3 pair draws
  long long rank_pairs = 10000;      // C4 pair draws
  int immersion_side = 100;          // C4/C8: draws x points
  int surjectivity_targets = 100;    // C4
  long long strip_draws = 100000;    // C5
  long long sweep_draws = 10000;     // C5 per-instance draws
  long long cantor_points = 10000;   // C6 cloud
  int bilip_probes = 100;            // C6
  long long haar_draws = 10000;      // C8
};

inline AcceptanceProfile acceptance_profile(const std::string& name, std::ostream* log = nullptr) {
  AcceptanceProfile p;
  if (name == "full") return p;
  if (name != "quick" && log) {
    *log << "warning: unknown profile '" << name << "', falling back to quick\n";
  }
  p.name = "quick";
  p.orbit_points = 10000;
  p.curve_probes = 32;
  p.slope_floor = 0.85;
  // the resolution floor scales like n^{-1/2}: shift the window up sqrt(10)
  p.curve_eps_lo = 0.01;
  p.curve_eps_hi = 0.31622776601683794;
  p.circle_points = 1000;
  p.rank_pairs = 1000;
  p.immersion_side = 32;
  p.surjectivity_targets = 20;
  p.strip_draws = 10000;
  p.sweep_draws = 1000;
  p.cantor_points = 1000;
  p.haar_draws = 1000;
  return p;
}

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  nlohmann::ordered_json details;
};

namespace acceptance_detail {

inline DelayMap cat_delay_seed0(int k = 3) {
  Diffeo cat = make_cat_map();
  MonomialBasis basis(4, 2 * k - 1);
  Observable obs(basis, BaseKind::cos_chart1, draw_alpha(basis, 1.0, 0));
  return DelayMap(std::move(cat), std::move(obs), k);
}

inline ManifoldPoint screened_start(const Diffeo& dyn, int p_max, const std::string& stream) {
  auto sampler = MeasureSampler::lebesgue(dyn.manifold, Rng::stream(0, stream).next_u64());
  sampler.set_periodic_screen(dyn, p_max, 1e-8);
  return sampler.sample(1)[0];
}

inline EmbedMap circle_first_coordinate() {
  EmbedMap em;
  em.dim = 1;
  em.eval = [](const ManifoldPoint& x) { return x.ambient.head(1).eval(); };
  em.differential = [](const TangentFrame& f) { return f.basis.row(0).eval(); };
  return em;
}

// Criterion 1: exponent recovery through the embedded system.
inline CriterionResult c1_lyapunov(const AcceptanceProfile&) {
  CriterionResult cr{1, "lyapunov-recovery", false, {}};
  DelayMap dm = cat_delay_seed0();
  ManifoldPoint x = screened_start(dm.dynamics, 2, "accept-c1");
  double chi = std::log((3.0 + std::sqrt(5.0)) / 2.0);

  DirectExponents de = direct_exponents(dm.dynamics, x, 1000);
  double err_lo = std::abs(de.exponents[0] + chi);
  double err_hi = std::abs(de.exponents[1] - chi);

  FrequencyReport freq = observed_frequency(dm, x, cat_map_oseledets(), 1000, 0.05);
  double final_dev = freq.deviations.back();

  cr.details["direct_error"] = std::max(err_lo, err_hi);
  cr.details["final_deviation"] = final_dev;
  cr.details["frequency"] = freq.fraction;
  cr.details["dropped"] = freq.dropped;
  cr.pass = err_lo < 1e-6 && err_hi < 1e-6 && final_dev < 0.02 && freq.fraction >= 0.95;
  return cr;
}

// Criterion 2: prediction error decays linearly in the ball radius.
inline CriterionResult c2_prediction_decay(const AcceptanceProfile& prof) {
  CriterionResult cr{2, "prediction-error-decay", false, {}};
  DelayMap dm = cat_delay_seed0();
  auto sampler = MeasureSampler::orbit_empirical(dm.dynamics, 0, Rng::stream(0, "accept-c2").next_u64());
  sampler.set_periodic_screen(dm.dynamics, 2, 1e-8);
  auto ds = PredictionDataset::from_delay(dm, sampler.sample(static_cast<int>(prof.orbit_points)));
  Rng rng = Rng::stream(0, "accept-c2-probes");
  ErrorCurve curve =
      error_curve(ds, prof.curve_probes, log_spaced(prof.curve_eps_lo, prof.curve_eps_hi, 8), rng);
  cr.details["slope"] = curve.slope;
  cr.details["fitted_cells"] = curve.fitted_cells;
  cr.details["dropped_cells"] = curve.dropped_cells;
  cr.details["nn_floor"] = curve.nn_floor;
  cr.details["threshold"] = prof.slope_floor;
  cr.pass = curve.fitted_cells >= 2 && curve.slope >= prof.slope_floor;
  return cr;
}

// Criterion 3: the k=1 circle embedding must fail, detectably.
inline CriterionResult c3_negative_control(const AcceptanceProfile& prof) {
  CriterionResult cr{3, "negative-control", false, {}};
  Diffeo rot = make_rotation(0.6180339887);
  auto sampler = MeasureSampler::lebesgue(rot.manifold, Rng::stream(0, "accept-c3").next_u64());
  auto pts = sampler.sample(static_cast<int>(prof.circle_points));
  EmbedMap em = circle_first_coordinate();
  PointCloud pc(rot.manifold, pts, em);
  Rng pair_rng = Rng::stream(0, "accept-c3-pairs");
  double rate = self_intersection_rate(pc, 0.2, 1e-3, static_cast<int>(prof.intersect_pairs), pair_rng);

  auto ds = PredictionDataset::from_embed(rot, em, pts);
  double lo = pc.embedded()[0][0], hi = lo;
  for (const auto& v : pc.embedded()) {
    lo = std::min(lo, v[0]);
    hi = std::max(hi, v[0]);
  }
  double diam = hi - lo;
  double sigma_min_probe = std::numeric_limits<double>::infinity();
  for (double u : {0.2, 0.25, 0.3}) {  // mirror pairs u and 1-u collapse here
    Eigen::VectorXd probe(1);
    probe << std::cos(kTwoPi * u) / kTwoPi;
    sigma_min_probe = std::min(sigma_min_probe, sigma(ds, probe, 5e-3));
  }
  cr.details["rate"] = rate;
  cr.details["sigma_at_mirrors"] = sigma_min_probe;
  cr.details["image_diameter"] = diam;
  cr.pass = rate > 0.0 && sigma_min_probe > 0.1 * diam;
  return cr;
}

// Criterion 4: rank of the pair matrix, immersion prevalence, surjectivity.
inline CriterionResult c4_rank_prevalence(const AcceptanceProfile& prof) {
  CriterionResult cr{4, "rank-prevalence", false, {}};
  DelayMap dm = cat_delay_seed0();
  const Diffeo& cat = dm.dynamics;
  auto sampler = MeasureSampler::lebesgue(cat.manifold, Rng::stream(0, "accept-c4").next_u64());
  sampler.set_periodic_screen(cat, 2, 1e-8);

  long long full_rank = 0;
  long long tested = 0;
  while (tested < prof.rank_pairs) {
    ManifoldPoint x = sampler.sample(1)[0];
    ManifoldPoint y = sampler.sample(1)[0];
    bool near_orbit = false;
    ManifoldPoint fwd = x, bwd = x;
    for (int i = 0; i <= 2 * dm.k && !near_orbit; ++i) {
      if (cat.manifold.distance(fwd, y) < 1e-6 || cat.manifold.distance(bwd, y) < 1e-6)
        near_orbit = true;
      fwd = cat.step(fwd);
      bwd = cat.step_back(bwd);
    }
    if (near_orbit) continue;
    PairMatrix pm = pair_matrix(dm, x, y);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(pm.d);
    const auto& sv = svd.singularValues();
    if (sv[dm.k - 1] > 1e-10 * sv[0]) ++full_rank;
    ++tested;
  }

  auto points_sampler = MeasureSampler::lebesgue(cat.manifold, Rng::stream(0, "accept-c4-pts").next_u64());
  points_sampler.set_periodic_screen(cat, 2, 1e-8);
  Rng imm_rng = Rng::stream(0, "accept-c4-immersion");
  double immersion = immersion_scan(dm, points_sampler.sample(prof.immersion_side),
                                    prof.immersion_side, 1.0, imm_rng);

  Rng surj_rng = Rng::stream(0, "accept-c4-surjectivity");
  double worst_residual = 0.0;
  int trials_per_point = 10;
  int base_points = std::max(1, prof.surjectivity_targets / trials_per_point);
  for (int b = 0; b < base_points; ++b) {
    ManifoldPoint x = sampler.sample(1)[0];
    worst_residual = std::max(worst_residual, surjectivity_check(dm, x, trials_per_point, surj_rng));
  }

  cr.details["pairs"] = tested;
  cr.details["full_rank_fraction"] = static_cast<double>(full_rank) / tested;
  cr.details["immersion_fraction"] = immersion;
  cr.details["surjectivity_max_residual"] = worst_residual;
  cr.pass = full_rank == tested && immersion == 1.0 && worst_residual < 1e-7;
  return cr;
}

// Criterion 5: singular-value measure bound.
inline CriterionResult c5_svalue_bound(const AcceptanceProfile& prof) {
  CriterionResult cr{5, "singular-value-measure-bound", false, {}};
  Rng rng = Rng::stream(0, "accept-c5");
  Eigen::MatrixXd l(1, 2);
  l << 1.0, 0.0;
  SvBoundResult strip = svalue_measure_bound(l, Eigen::VectorXd::Zero(1), 1.0, 0.1, 1,
                                             static_cast<int>(prof.strip_draws), rng);
  double exact = (2.0 / M_PI) * (std::asin(0.1) + 0.1 * std::sqrt(1.0 - 0.01));
  double se = std::sqrt(exact * (1.0 - exact) / prof.strip_draws);
  bool strip_ok = std::abs(strip.fraction - exact) <= 3.0 * se;

  // sweep: fit the constant, then check every instance against it
  std::vector<SvBoundResult> sweep;
  std::vector<int> m_values = {5, 20, 56, 126};
  std::vector<double> widths = {0.5, 0.65, 0.8, 0.95};
  double c_fitted = 0.0;
  for (int m : m_values) {
    for (int rep = 0; rep < 25; ++rep) {
      Eigen::MatrixXd lm = rng.gaussian_matrix(1, m);
      double eps = widths[rep % widths.size()] * lm.norm();
      SvBoundResult res = svalue_measure_bound(lm, Eigen::VectorXd::Zero(1), 1.0, eps, 1,
                                               static_cast<int>(prof.sweep_draws), rng);
      sweep.push_back(res);
      if (res.bound > 0) c_fitted = std::max(c_fitted, res.fraction / res.bound);
    }
  }
  bool sweep_ok = true;
  for (const auto& res : sweep) {
    if (res.fraction > c_fitted * res.bound * (1 + 1e-12)) sweep_ok = false;
  }
  cr.details["strip_fraction"] = strip.fraction;
  cr.details["strip_exact"] = exact;
  cr.details["strip_se"] = se;
  cr.details["sweep_instances"] = static_cast<long long>(sweep.size());
  cr.details["c_fitted"] = c_fitted;
  cr.pass = strip_ok && sweep_ok && sweep.size() == 100;
  return cr;
}

// Criterion 6: bi-Lipschitz diagnostics on the Cantor-product set.
inline CriterionResult c6_bilip(const AcceptanceProfile& prof) {
  CriterionResult cr{6, "bilip-diagnostics", false, {}};
  DelayMap dm = cat_delay_seed0();
  auto sampler = MeasureSampler::cantor_product(dm.dynamics.manifold, 8,
                                                Rng::stream(0, "accept-c6").next_u64());
  sampler.set_periodic_screen(dm.dynamics, 2, 1e-8);
  auto pts = sampler.sample(static_cast<int>(prof.cantor_points));
  EmbedMap em = as_embed(dm);
  PointCloud pc(dm.dynamics.manifold, pts, em);
  Rng probe_rng = Rng::stream(0, "accept-c6-probes");
  std::vector<int> probes = runners::probe_indices(pc.size(), prof.bilip_probes, probe_rng);
  BilipReport rep = bilip_report(pc, em, probes);

  // homogeneity: doubling the embedding halves the constants, exactly
  EmbedMap doubled = scaled(em, 2.0);
  PointCloud pc2(dm.dynamics.manifold, pts, doubled);
  bool homogeneity = true;
  for (int i = 0; i < 10; ++i) {
    BilipRecord a = bilip_constant(pc, em, probes[i]);
    BilipRecord b = bilip_constant(pc2, doubled, probes[i]);
    if (b.c_global != a.c_global / 2.0 || b.c_local != a.c_local / 2.0) homogeneity = false;
  }
  // and the intersection rate is unchanged when the tolerance scales along
  Rng pair_rng_a = Rng::stream(0, "accept-c6-pairs");
  Rng pair_rng_b = Rng::stream(0, "accept-c6-pairs");
  double rate_a = self_intersection_rate(pc, 0.2, 1e-4, 1000, pair_rng_a);
  double rate_b = self_intersection_rate(pc2, 0.2, 2e-4, 1000, pair_rng_b);

  cr.details["probes"] = static_cast<long long>(probes.size());
  cr.details["finite_count"] = rep.finite_count;
  cr.details["collision_count"] = rep.collision_count;
  cr.details["median_c_global"] = rep.median_c_global;
  cr.details["homogeneity_exact"] = homogeneity;
  cr.details["rate_match"] = (rate_a == rate_b);
  cr.pass = rep.finite_count >= (99 * prof.bilip_probes) / 100 && rep.collision_count == 0 &&
            homogeneity && rate_a == rate_b;
  return cr;
}

// Criterion 7: interpolation and differential fidelity.
inline CriterionResult c7_interpolation(const AcceptanceProfile&) {
  CriterionResult cr{7, "interpolation-and-differentials", false, {}};
  Manifold torus = make_flat_torus();
  Rng rng = Rng::stream(0, "accept-c7");
  double worst_interp = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    int k = 1 + static_cast<int>(rng.uniform_int(5));
    MonomialBasis basis(4, 2 * k - 1);
    std::vector<Eigen::VectorXd> pts;
    std::vector<Eigen::VectorXd> targets;
    for (int i = 0; i < k; ++i) {
      pts.push_back(torus.point(rng.uniform(), rng.uniform()).ambient);
      targets.push_back(rng.gaussian_vector(4));
    }
    Eigen::VectorXd alpha = interpolate_gradients(basis, pts, targets);
    Observable p = Observable::with_zero_base(basis, alpha);
    for (int i = 0; i < k; ++i)
      worst_interp = std::max(worst_interp, (p.ambient_gradient(pts[i]) - targets[i]).norm());
  }

  double worst_fd = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    bool use_cat = (trial % 2 == 0);
    Diffeo dyn = use_cat ? make_cat_map() : make_rotation(0.6180339887);
    int k = use_cat ? 2 + static_cast<int>(rng.uniform_int(3)) : 1 + static_cast<int>(rng.uniform_int(3));
    MonomialBasis basis(dyn.manifold.ambient_dim(), 2 * k - 1);
    Observable obs(basis, BaseKind::cos_chart1, rng.ball(basis.size(), 1.0));
    DelayMap dm(dyn, obs, k);
    const Manifold& m = dyn.manifold;
    Eigen::VectorXd c(m.intrinsic_dim());
    for (int i = 0; i < c.size(); ++i) c[i] = rng.uniform();
    ManifoldPoint x = m.point(c);
    Eigen::MatrixXd a = delay_differential_chart(dm, x);
    Eigen::MatrixXd fd(dm.k, m.intrinsic_dim());
    double h = 1e-5;
    for (int col = 0; col < m.intrinsic_dim(); ++col) {
      Eigen::VectorXd up = x.chart, dn = x.chart;
      up[col] += h;
      dn[col] -= h;
      fd.col(col) = (delay_eval(dm, m.point(up)) - delay_eval(dm, m.point(dn))) / (2 * h);
    }
    worst_fd = std::max(worst_fd, (a - fd).norm() / a.norm());
  }

  cr.details["interpolation_max_residual"] = worst_interp;
  cr.details["fd_max_rel_err"] = worst_fd;
  cr.pass = worst_interp < 1e-8 && worst_fd < 1e-6;
  return cr;
}

// Criterion 8: orthogonal projections.
inline CriterionResult c8_projections(const AcceptanceProfile& prof) {
  CriterionResult cr{8, "projections", false, {}};
  Rng rng = Rng::stream(0, "accept-c8");
  double worst_idem = 0.0, worst_sym = 0.0;
  for (int i = 0; i < 50; ++i) {
    Projection p = sample_projection(4, 1 + static_cast<int>(rng.uniform_int(4)), rng);
    Eigen::MatrixXd pv = p.projector();
    worst_idem = std::max(worst_idem, (pv * pv - pv).norm());
    worst_sym = std::max(worst_sym, (pv - pv.transpose()).norm());
  }

  Eigen::VectorXd u = Eigen::VectorXd::Unit(4, 0);
  double mean = 0.0, m2 = 0.0;
  for (long long i = 1; i <= prof.haar_draws; ++i) {
    Projection p = sample_projection(4, 3, rng);
    double v = (p.v_basis.transpose() * u).squaredNorm();
    double delta = v - mean;
    mean += delta / i;
    m2 += delta * (v - mean);
  }
  double se = std::sqrt(m2 / (prof.haar_draws - 1) / prof.haar_draws);
  bool mean_ok = std::abs(mean - 0.75) <= 3.0 * se;

  // torus immersed through random rank-3 projections
  Manifold torus = make_flat_torus();
  auto sampler = MeasureSampler::lebesgue(torus, Rng::stream(0, "accept-c8-pts").next_u64());
  auto pts = sampler.sample(prof.immersion_side);
  long long full = 0, total = 0;
  for (int vdraw = 0; vdraw < prof.immersion_side; ++vdraw) {
    Projection p = sample_projection(4, 3, rng);
    for (const auto& x : pts) {
      TangentFrame f = tangent_frame(torus, x);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(p.v_basis.transpose() * f.basis);
      const auto& sv = svd.singularValues();
      if (sv[0] > 0 && sv[1] > 1e-10 * sv[0]) ++full;
      ++total;
    }
  }
  double immersion = static_cast<double>(full) / total;

  cr.details["idempotence"] = worst_idem;
  cr.details["symmetry"] = worst_sym;
  cr.details["mean_shadow"] = mean;
  cr.details["mean_se"] = se;
  cr.details["immersion_fraction"] = immersion;
  cr.pass = worst_idem < 1e-12 && worst_sym < 1e-12 && mean_ok && immersion == 1.0;
  return cr;
}

// Criterion 9: byte-identical reruns.
inline CriterionResult c9_reproducibility(const AcceptanceProfile&) {
  CriterionResult cr{9, "reproducibility", false, {}};
  namespace fs = std::filesystem;
  fs::path root = fs::temp_directory_path() / "takens-accept-repro";
  fs::remove_all(root);

  auto run_pair = [&](ExperimentConfig cfg, const std::string& tag) {
    cfg.out = (root / tag).string();
    RunResult a = run(cfg);
    RunResult b = run(cfg);
    bool records_equal = stable_view(a.record).dump() == stable_view(b.record).dump();
    bool files_equal = true;
    for (const auto& f : a.record["files"]) {
      std::string name = f.get<std::string>();
      files_equal &= read_file(a.dir / name) == read_file(b.dir / name);
    }
    return records_equal && files_equal;
  };

  ExperimentConfig embed_cfg;
  embed_cfg.op = "embed";
  embed_cfg.system = "rotation:0.6180339887";
  embed_cfg.k = 3;
  embed_cfg.points = 100;
  bool embed_ok = run_pair(embed_cfg, "embed");

  ExperimentConfig lyap_cfg;
  lyap_cfg.op = "lyapunov";
  lyap_cfg.system = "cat";
  lyap_cfg.k = 3;
  lyap_cfg.n_steps = 200;
  bool lyap_ok = run_pair(lyap_cfg, "lyapunov");

  ExperimentConfig sv_cfg;
  sv_cfg.op = "svbound";
  sv_cfg.draws = 1000;
  bool sv_ok = run_pair(sv_cfg, "svbound");

  fs::remove_all(root);
  cr.details["embed"] = embed_ok;
  cr.details["lyapunov"] = lyap_ok;
  cr.details["svbound"] = sv_ok;
  cr.pass = embed_ok && lyap_ok && sv_ok;
  return cr;
}

}  // namespace acceptance_detail

/// Runs the acceptance battery; prints one PASS/FAIL line per criterion when
/// a log stream is given. Failures are reported, never thrown.
inline std::vector<CriterionResult> acceptance_suite(const std::string& profile_name,
                                                     std::ostream* log = nullptr) {
  AcceptanceProfile prof = acceptance_profile(profile_name, log);
  using Runner = CriterionResult (*)(const AcceptanceProfile&);
  const Runner runners_list[] = {
      acceptance_detail::c1_lyapunov,        acceptance_detail::c2_prediction_decay,
      acceptance_detail::c3_negative_control, acceptance_detail::c4_rank_prevalence,
      acceptance_detail::c5_svalue_bound,    acceptance_detail::c6_bilip,
      acceptance_detail::c7_interpolation,   acceptance_detail::c8_projections,
      acceptance_detail::c9_reproducibility};
  std::vector<CriterionResult> results;
  for (auto fn : runners_list) {
    CriterionResult cr;
    try {
      cr = fn(prof);
    } catch (const std::exception& e) {
      cr.pass = false;
      cr.details["error"] = e.what();
      cr.id = static_cast<int>(results.size()) + 1;
      cr.name = "criterion-" + std::to_string(cr.id);
    }
    if (log) {
      *log << (cr.pass ? "PASS" : "FAIL") << " C" << cr.id << " " << cr.name << " "
           << cr.details.dump() << "\n";
    }
    results.push_back(std::move(cr));
  }
  return results;
}

inline nlohmann::ordered_json acceptance_to_json(const std::string& profile,
                                                 const std::vector<CriterionResult>& results) {
  nlohmann::ordered_json j;
  j["profile"] = profile;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  bool all = true;
  for (const auto& r : results) {
    arr.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"details", r.details}});
    all &= r.pass;
  }
  j["criteria"] = arr;
  j["all_pass"] = all;
  return j;
}

}  // namespace takens
