#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "takens/dynamics.hpp"
#include "takens/embedding.hpp"
#include "takens/errors.hpp"
#include "takens/kdtree.hpp"
#include "takens/rng.hpp"

namespace takens {

enum class MeasureKind { lebesgue, orbit_empirical, cantor_product };

/// Seeded sampler for the reference measures used in the experiments:
/// Lebesgue on the manifold, the empirical measure of an orbit, and a
/// middle-third Cantor product set of known Hausdorff dimension.
///
/// Samples are deterministic given the construction seed and call sequence.
/// When a periodic screen is configured, sampled starting points that are
/// numerically periodic are rejected and resampled.
class MeasureSampler {
public:
  static MeasureSampler lebesgue(Manifold m, std::uint64_t seed) {
    MeasureSampler s(std::move(m), MeasureKind::lebesgue, seed);
    return s;
  }

  /// Consecutive orbit points of a seeded random start; burn_in iterates are
  /// discarded before collection.
  static MeasureSampler orbit_empirical(Diffeo t, int burn_in, std::uint64_t seed) {
    MeasureSampler s(t.manifold, MeasureKind::orbit_empirical, seed);
    s.dynamics_ = std::move(t);
    s.burn_in_ = burn_in;
    return s;
  }

  /// Level-L truncation of the middle-third Cantor set in the first chart
  /// coordinate; remaining coordinates fixed at 0.5. The truncated set is a
  /// union of 2^L intervals of width 3^-L, sampled uniformly.
  static MeasureSampler cantor_product(Manifold m, int level, std::uint64_t seed) {
    MeasureSampler s(std::move(m), MeasureKind::cantor_product, seed);
    s.cantor_level_ = level;
    return s;
  }

  MeasureKind kind() const { return kind_; }
  const Manifold& manifold() const { return manifold_; }

  /// Reject sampled points that are numerically p-periodic for p <= p_max.
  void set_periodic_screen(Diffeo t, int p_max, double tol = 1e-8) {
    screen_dynamics_ = std::move(t);
    screen_p_max_ = p_max;
    screen_tol_ = tol;
  }

  std::vector<ManifoldPoint> sample(int n) {
    if (n < 1) throw ConfigError("n", "sample count must be >= 1");
    std::vector<ManifoldPoint> out;
    out.reserve(n);
    if (kind_ == MeasureKind::orbit_empirical) {
      ManifoldPoint x = screened();
      for (int i = 0; i < burn_in_; ++i) x = dynamics_->step(x);
      out.push_back(x);
      for (int i = 1; i < n; ++i) out.push_back(dynamics_->step(out.back()));
      return out;
    }
    for (int i = 0; i < n; ++i) out.push_back(screened());
    return out;
  }

private:
  MeasureSampler(Manifold m, MeasureKind kind, std::uint64_t seed)
      : manifold_(std::move(m)), kind_(kind), rng_(seed) {}

  ManifoldPoint draw() {
    const int d = manifold_.intrinsic_dim();
    Eigen::VectorXd c(d);
    if (kind_ == MeasureKind::cantor_product) {
      double u = 0.0;
      double w = 1.0;
      for (int l = 0; l < cantor_level_; ++l) {
        w /= 3.0;
        if (rng_.uniform() < 0.5) u += 2.0 * w;  // digits 0 or 2 in base 3
      }
      u += w * rng_.uniform();  // uniform within the surviving interval
      c[0] = u;
      for (int j = 1; j < d; ++j) c[j] = 0.5;
    } else {
      for (int j = 0; j < d; ++j) c[j] = rng_.uniform();
    }
    return manifold_.point(c);
  }

  ManifoldPoint screened() {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      ManifoldPoint x = draw();
      if (!screen_dynamics_ || screen_p_max_ < 1 ||
          !is_periodic_up_to(*screen_dynamics_, x, screen_p_max_, screen_tol_)) {
        return x;
      }
    }
    throw Error("periodic screen rejected 1000 consecutive samples");
  }

  Manifold manifold_;
  MeasureKind kind_;
  Rng rng_;
  std::optional<Diffeo> dynamics_;
  int burn_in_ = 0;
  int cantor_level_ = 8;
  std::optional<Diffeo> screen_dynamics_;
  int screen_p_max_ = 0;
  double screen_tol_ = 1e-8;
};

/// Point set on M together with its embedded image in R^k and an exact
/// spatial index over the image.
class PointCloud {
public:
  PointCloud(Manifold m, std::vector<ManifoldPoint> points, const EmbedMap& embed)
      : manifold_(std::move(m)), points_(std::move(points)), embed_dim_(embed.dim) {
    embedded_.reserve(points_.size());
    for (const auto& p : points_) embedded_.push_back(embed.eval(p));
    index_.build(embedded_);
  }

  const Manifold& manifold() const { return manifold_; }
  int size() const { return static_cast<int>(points_.size()); }
  int embed_dim() const { return embed_dim_; }
  const std::vector<ManifoldPoint>& points() const { return points_; }
  const std::vector<Eigen::VectorXd>& embedded() const { return embedded_; }
  const KdTree& index() const { return index_; }

  double rho(int i, int j) const { return manifold_.distance(points_[i], points_[j]); }

  /// Median distance to the 5th nearest neighbour over a deterministic
  /// subsample (resolution floor diagnostic).
  double knn_floor(int neighbours = 5, int max_sample = 4096) const {
    int n = size();
    if (n <= neighbours) return 0.0;
    int stride = std::max(1, n / max_sample);
    std::vector<double> dists;
    for (int i = 0; i < n; i += stride) {
      auto d = index_.knn_distances(embedded_[i], neighbours + 1);  // includes self at 0
      dists.push_back(d.back());
    }
    std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
    return dists[dists.size() / 2];
  }

private:
  Manifold manifold_;
  std::vector<ManifoldPoint> points_;
  std::vector<Eigen::VectorXd> embedded_;
  KdTree index_;
  int embed_dim_;
};

/// Indices of cloud points with ||embedded - center|| < eps (strict).
inline std::vector<int> ball_query(const PointCloud& pc, const Eigen::VectorXd& center, double eps) {
  if (eps <= 0) throw ConfigError("eps", "ball radius must be positive");
  return pc.index().radius_search(center, eps);
}

/// Least-squares slope of log(occupied boxes) against log(1/scale) in chart
/// coordinates; a box-counting surrogate for dimension diagnostics.
inline double boxcount_dimension(const std::vector<ManifoldPoint>& points,
                                 const std::vector<double>& scales) {
  if (scales.size() < 4) throw InsufficientScales("box counting needs at least 4 scales");
  std::vector<double> log_inv_scale;
  std::vector<double> log_boxes;
  for (double s : scales) {
    std::map<std::vector<long long>, int> boxes;
    for (const auto& p : points) {
      std::vector<long long> cell(p.chart.size());
      for (int c = 0; c < p.chart.size(); ++c)
        cell[c] = static_cast<long long>(std::floor(p.chart[c] / s));
      boxes[cell] += 1;
    }
    log_inv_scale.push_back(std::log(1.0 / s));
    log_boxes.push_back(std::log(static_cast<double>(boxes.size())));
  }
  const int m = static_cast<int>(scales.size());
  double mx = 0, my = 0;
  for (int i = 0; i < m; ++i) {
    mx += log_inv_scale[i];
    my += log_boxes[i];
  }
  mx /= m;
  my /= m;
  double num = 0, den = 0;
  for (int i = 0; i < m; ++i) {
    num += (log_inv_scale[i] - mx) * (log_boxes[i] - my);
    den += (log_inv_scale[i] - mx) * (log_inv_scale[i] - mx);
  }
  return num / den;
}

}  // namespace takens
