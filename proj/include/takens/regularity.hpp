#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "takens/embedding.hpp"
#include "takens/sampling.hpp"

namespace takens {

/// Per-base-point bi-Lipschitz diagnostics: the global constant realized on
/// the sampled cloud and the infinitesimal bound from the differential.
struct BilipRecord {
  int index = -1;
  double c_global = 0.0;        // max over the cloud of rho / ||dphi||
  double c_local = 0.0;         // 1 / sigma_min of the delay differential at x
  int witness = -1;             // argmax y for c_global
  bool exact_collision = false; // some y != x with identical embedded image
};

/// Global term: scans every other cloud point y with rho(x,y) >= exclusion
/// radius; exact collisions are reported (c_global = inf), not fatal.
/// Local term: reciprocal smallest singular value of the differential on an
/// orthonormal tangent frame, i.e. the infinitesimal bi-Lipschitz bound.
inline BilipRecord bilip_constant(const PointCloud& pc, const EmbedMap& em, int i,
                                  double exclusion_radius = 0.0) {
  BilipRecord rec;
  rec.index = i;
  const auto& pts = pc.points();
  const auto& emb = pc.embedded();
  for (int j = 0; j < pc.size(); ++j) {
    if (j == i) continue;
    double rho = pc.rho(i, j);
    if (rho < exclusion_radius) continue;
    double image = (emb[i] - emb[j]).norm();
    if (image == 0.0) {
      if (rho > 0.0) {
        rec.exact_collision = true;
        rec.c_global = std::numeric_limits<double>::infinity();
        rec.witness = j;
      }
      continue;
    }
    double ratio = rho / image;
    if (ratio > rec.c_global) {
      rec.c_global = ratio;
      rec.witness = j;
    }
  }
  if (em.differential) {
    TangentFrame f = tangent_frame(pc.manifold(), pts[i]);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(em.differential(f));
    double smin = svd.singularValues().minCoeff();
    rec.c_local = (smin > 0.0) ? 1.0 / smin : std::numeric_limits<double>::infinity();
  }
  return rec;
}

struct BilipReport {
  std::vector<BilipRecord> records;
  int finite_count = 0;
  int collision_count = 0;
  double median_c_global = 0.0;
  double max_finite_c_global = 0.0;
};

inline BilipReport bilip_report(const PointCloud& pc, const EmbedMap& em,
                                const std::vector<int>& probes, double exclusion_radius = 0.0) {
  BilipReport rep;
  std::vector<double> finite;
  for (int i : probes) {
    BilipRecord rec = bilip_constant(pc, em, i, exclusion_radius);
    if (rec.exact_collision) {
      ++rep.collision_count;
    } else if (std::isfinite(rec.c_global)) {
      ++rep.finite_count;
      finite.push_back(rec.c_global);
    }
    rep.records.push_back(std::move(rec));
  }
  if (!finite.empty()) {
    std::sort(finite.begin(), finite.end());
    rep.median_c_global = finite[finite.size() / 2];
    rep.max_finite_c_global = finite.back();
  }
  return rep;
}

/// Fraction of (alpha, x) draws where the delay differential has full rank d
/// (relative singular value threshold kRankTol). alpha is drawn uniformly
/// from B_m(0, radius). per_draw, when given, receives the per-alpha fraction.
inline double immersion_scan(const DelayMap& dm, const std::vector<ManifoldPoint>& points,
                             int alpha_draws, double radius, Rng& rng,
                             std::vector<double>* per_draw = nullptr) {
  const Manifold& m = dm.dynamics.manifold;
  const int d = m.intrinsic_dim();
  if (dm.k < d) throw ConfigError("k", "immersion scan needs k >= dim M");
  long long full = 0;
  long long total = 0;
  for (int a = 0; a < alpha_draws; ++a) {
    DelayMap dma = dm.with_alpha(rng.ball(dm.observable.basis().size(), radius));
    long long full_here = 0;
    for (const auto& x : points) {
      TangentFrame f = tangent_frame(m, x);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(delay_differential(dma, f));
      const auto& sv = svd.singularValues();
      if (sv[0] > 0.0 && sv[d - 1] > kRankTol * sv[0]) ++full_here;
      ++total;
    }
    full += full_here;
    if (per_draw) per_draw->push_back(static_cast<double>(full_here) / points.size());
  }
  return static_cast<double>(full) / static_cast<double>(total);
}

/// Executable core of the prevalence argument: for random targets
/// L in Lin(T_x M, R^k), builds the coefficient vector whose delay
/// differential at x equals L (gradient interpolation along the orbit with
/// the inverse cocycle) and returns the worst reconstruction residual.
inline double surjectivity_check(const DelayMap& dm, const ManifoldPoint& x, int trials, Rng& rng) {
  const Diffeo& t = dm.dynamics;
  const Manifold& m = t.manifold;
  const int d = m.intrinsic_dim();
  const int k = dm.k;
  if (is_periodic_up_to(t, x, k - 1, 1e-8)) {
    throw PeriodicPoint("base point is numerically periodic below the delay length");
  }
  // frames and frame-coordinate cocycle matrices along x, Tx, ..., T^{k-1}x
  TangentFrame fx = tangent_frame(m, x);
  std::vector<TangentFrame> frames;
  std::vector<Eigen::MatrixXd> cocycle;  // D_x T^i in frame coordinates
  frames.reserve(k);
  cocycle.reserve(k);
  for (int i = 0; i < k; ++i) {
    Pushforward p = pushforward(t, fx, i);
    frames.push_back(p.frame);
    cocycle.push_back(p.matrix);
  }
  const MonomialBasis& basis = dm.observable.basis();
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    Eigen::MatrixXd target = rng.gaussian_matrix(k, d);
    std::vector<Eigen::VectorXd> covectors;
    covectors.reserve(k);
    for (int i = 0; i < k; ++i) {
      // row i acts at x; transport to T^i x through the inverse cocycle
      Eigen::VectorXd row = target.row(i).transpose();
      covectors.push_back(cocycle[i].transpose().fullPivLu().solve(row));
    }
    Eigen::VectorXd alpha = tangential_interpolation(basis, frames, covectors);
    DelayMap dma(t, Observable::with_zero_base(basis, alpha), k);
    Eigen::MatrixXd got = delay_differential(dma, fx);
    worst = std::max(worst, (got - target).norm());
  }
  return worst;
}

/// Fraction of sampled index pairs that are far on M but close in the
/// embedding: rho > eps_sep while ||phi_i - phi_j|| < delta_emb.
/// Pairs are i.i.d. product draws from the cloud (mu x mu surrogate).
inline double self_intersection_rate(const PointCloud& pc, double eps_sep, double delta_emb,
                                     int pairs, Rng& rng,
                                     std::vector<std::pair<int, int>>* violations = nullptr) {
  if (eps_sep <= 0 || delta_emb <= 0) throw ConfigError("eps_sep", "separation thresholds must be positive");
  const auto& emb = pc.embedded();
  long long bad = 0;
  for (int s = 0; s < pairs; ++s) {
    int i = static_cast<int>(rng.uniform_int(pc.size()));
    int j = static_cast<int>(rng.uniform_int(pc.size()));
    if (pc.rho(i, j) > eps_sep && (emb[i] - emb[j]).norm() < delta_emb) {
      ++bad;
      if (violations) violations->emplace_back(i, j);
    }
  }
  return static_cast<double>(bad) / static_cast<double>(pairs);
}

struct SvBoundResult {
  double fraction = 0.0;  // empirical measure of {alpha : ||L alpha + z|| <= eps} in B_m(0,r)
  double bound = 0.0;     // (eps / (sigma_p r))^p
  double sigma_p = 0.0;
};

/// Monte Carlo check of the singular-value measure bound: the fraction of
/// ball draws landing in the eps-tube, against (eps/(sigma_p r))^p. The
/// proportionality constant is reported by the caller as fraction/bound.
inline SvBoundResult svalue_measure_bound(const Eigen::MatrixXd& l, const Eigen::VectorXd& z,
                                          double r, double eps, int p, int draws, Rng& rng) {
  const int k = static_cast<int>(l.rows());
  const int m = static_cast<int>(l.cols());
  if (p < 1 || p > k) throw ConfigError("p", "singular value index out of range");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(l);
  double sigma_p = svd.singularValues()[p - 1];
  if (sigma_p < 1e-14) throw DegenerateSingularValue("sigma_p below 1e-14");
  long long hits = 0;
  for (int i = 0; i < draws; ++i) {
    Eigen::VectorXd alpha = rng.ball(m, r);
    if ((l * alpha + z).norm() <= eps) ++hits;
  }
  SvBoundResult res;
  res.fraction = static_cast<double>(hits) / static_cast<double>(draws);
  res.sigma_p = sigma_p;
  res.bound = std::pow(eps / (sigma_p * r), p);
  return res;
}

}  // namespace takens
