#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "takens/embedding.hpp"
#include "takens/sampling.hpp"

namespace takens {

/// Embedded training set for the empirical prediction map: the cloud
/// phi(x_i) together with the one-step futures phi(T x_i).
///
/// For delay maps the futures are assembled from the same observable values
/// as the cloud, so images[i] shares its first k-1 coordinates with
/// embedded[i] shifted by one, exactly.
class PredictionDataset {
public:
  static PredictionDataset from_delay(const DelayMap& dm, std::vector<ManifoldPoint> pts) {
    const Diffeo& t = dm.dynamics;
    std::vector<Eigen::VectorXd> embedded;
    std::vector<Eigen::VectorXd> images;
    embedded.reserve(pts.size());
    images.reserve(pts.size());
    for (const auto& x : pts) {
      // one evaluation pass over the k+1 point window
      Eigen::VectorXd window(dm.k + 1);
      ManifoldPoint p = x;
      for (int i = 0; i <= dm.k; ++i) {
        window[i] = dm.observable.eval(p.ambient);
        if (i < dm.k) p = t.step(p);
      }
      embedded.push_back(window.head(dm.k));
      images.push_back(window.tail(dm.k));
    }
    return PredictionDataset(t, std::move(pts), std::move(embedded), std::move(images), dm.k);
  }

  /// Assemble from precomputed columns (diagnostics and counterexample studies).
  static PredictionDataset from_parts(Diffeo t, std::vector<ManifoldPoint> pts,
                                      std::vector<Eigen::VectorXd> embedded,
                                      std::vector<Eigen::VectorXd> images) {
    int dim = embedded.empty() ? 0 : static_cast<int>(embedded.front().size());
    return PredictionDataset(std::move(t), std::move(pts), std::move(embedded), std::move(images), dim);
  }

  static PredictionDataset from_embed(const Diffeo& t, const EmbedMap& em,
                                      std::vector<ManifoldPoint> pts) {
    std::vector<Eigen::VectorXd> embedded;
    std::vector<Eigen::VectorXd> images;
    embedded.reserve(pts.size());
    images.reserve(pts.size());
    for (const auto& x : pts) {
      embedded.push_back(em.eval(x));
      images.push_back(em.eval(t.step(x)));
    }
    return PredictionDataset(t, std::move(pts), std::move(embedded), std::move(images), em.dim);
  }

  int size() const { return static_cast<int>(embedded_.size()); }
  int dim() const { return dim_; }
  const std::vector<ManifoldPoint>& points() const { return points_; }
  const std::vector<Eigen::VectorXd>& embedded() const { return embedded_; }
  const std::vector<Eigen::VectorXd>& images() const { return images_; }
  const KdTree& index() const { return index_; }

  std::vector<int> ball(const Eigen::VectorXd& y, double eps) const {
    return index_.radius_search(y, eps);
  }

  double knn_floor(int neighbours = 5, int max_sample = 4096) const {
    int n = size();
    if (n <= neighbours) return 0.0;
    int stride = std::max(1, n / max_sample);
    std::vector<double> dists;
    for (int i = 0; i < n; i += stride) {
      auto d = index_.knn_distances(embedded_[i], neighbours + 1);
      dists.push_back(d.back());
    }
    std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
    return dists[dists.size() / 2];
  }

private:
  PredictionDataset(Diffeo t, std::vector<ManifoldPoint> pts, std::vector<Eigen::VectorXd> embedded,
                    std::vector<Eigen::VectorXd> images, int dim)
      : dynamics_(std::move(t)),
        points_(std::move(pts)),
        embedded_(std::move(embedded)),
        images_(std::move(images)),
        dim_(dim) {
    index_.build(embedded_);
  }

  Diffeo dynamics_;
  std::vector<ManifoldPoint> points_;
  std::vector<Eigen::VectorXd> embedded_;
  std::vector<Eigen::VectorXd> images_;
  KdTree index_;
  int dim_;
};

/// Ball-averaged one-step future: the mean of images over the eps-ball
/// preimage (the empirical measure replaces mu). Throws EmptyBall.
inline Eigen::VectorXd chi(const PredictionDataset& ds, const Eigen::VectorXd& y, double eps) {
  std::vector<int> idx = ds.ball(y, eps);
  if (idx.empty()) throw EmptyBall("no cloud point within eps of the probe");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(ds.dim());
  for (int i : idx) mean += ds.images()[i];
  return mean / static_cast<double>(idx.size());
}

/// Root mean squared spread of the one-step futures over the eps-ball.
inline double sigma(const PredictionDataset& ds, const Eigen::VectorXd& y, double eps) {
  std::vector<int> idx = ds.ball(y, eps);
  if (idx.empty()) throw EmptyBall("no cloud point within eps of the probe");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(ds.dim());
  for (int i : idx) mean += ds.images()[i];
  mean /= static_cast<double>(idx.size());
  double s = 0.0;
  for (int i : idx) s += (ds.images()[i] - mean).squaredNorm();
  return std::sqrt(s / static_cast<double>(idx.size()));
}

/// Nearest-neighbour realization of the prediction map; exact ties go to the
/// lowest index.
inline Eigen::VectorXd predict(const PredictionDataset& ds, const Eigen::VectorXd& y) {
  if (ds.size() == 0) throw EmptyBall("empty training cloud");
  return ds.images()[ds.index().nearest(y)];
}

struct ErrorCell {
  int probe = -1;       // index into the probe list
  double eps = 0.0;
  int occupancy = 0;
  double sigma_value = 0.0;
  bool dropped = false;  // below the minimum occupancy
};

struct ErrorCurve {
  std::vector<double> eps_grid;
  std::vector<double> median_sigma;    // per eps, over surviving probes (nan when none)
  std::vector<double> mean_occupancy;  // per eps
  std::vector<bool> below_floor;       // eps below the 5-NN resolution floor
  std::vector<ErrorCell> cells;        // probe-major table
  std::vector<int> probe_indices;      // cloud indices used as probes
  double slope = 0.0;
  double intercept = 0.0;
  int fitted_cells = 0;
  int dropped_cells = 0;
  double nn_floor = 0.0;
};

/// sigma(eps) sweep at probe points phi(x_j), x_j drawn from the empirical
/// measure of the cloud; least-squares slope of log median-sigma against
/// log eps. Cells with fewer than min_occupancy points are dropped, and only
/// radii at or above the measured 5-NN floor enter the fit: below it the few
/// surviving balls sample density spikes, not the decay.
inline ErrorCurve error_curve(const PredictionDataset& ds, int probes,
                              const std::vector<double>& eps_grid, Rng& rng,
                              int min_occupancy = 5) {
  ErrorCurve curve;
  curve.eps_grid = eps_grid;
  curve.nn_floor = ds.knn_floor();
  for (int j = 0; j < probes; ++j)
    curve.probe_indices.push_back(static_cast<int>(rng.uniform_int(ds.size())));

  const int ne = static_cast<int>(eps_grid.size());
  std::vector<std::vector<double>> sigma_by_eps(ne);
  for (int pi = 0; pi < probes; ++pi) {
    const Eigen::VectorXd& y = ds.embedded()[curve.probe_indices[pi]];
    for (int e = 0; e < ne; ++e) {
      ErrorCell cell;
      cell.probe = pi;
      cell.eps = eps_grid[e];
      std::vector<int> idx = ds.ball(y, eps_grid[e]);
      cell.occupancy = static_cast<int>(idx.size());
      if (cell.occupancy < min_occupancy) {
        cell.dropped = true;
        ++curve.dropped_cells;
      } else {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(ds.dim());
        for (int i : idx) mean += ds.images()[i];
        mean /= static_cast<double>(idx.size());
        double s = 0.0;
        for (int i : idx) s += (ds.images()[i] - mean).squaredNorm();
        cell.sigma_value = std::sqrt(s / static_cast<double>(idx.size()));
        sigma_by_eps[e].push_back(cell.sigma_value);
      }
      curve.cells.push_back(cell);
    }
  }

  std::vector<double> log_eps;
  std::vector<double> log_sigma;
  for (int e = 0; e < ne; ++e) {
    double occ = 0.0;
    for (const auto& c : curve.cells)
      if (c.eps == eps_grid[e]) occ += c.occupancy;
    curve.mean_occupancy.push_back(occ / probes);
    curve.below_floor.push_back(eps_grid[e] < curve.nn_floor);
    if (sigma_by_eps[e].empty()) {
      curve.median_sigma.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    auto& v = sigma_by_eps[e];
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    double med = v[v.size() / 2];
    curve.median_sigma.push_back(med);
    if (med > 0.0 && !curve.below_floor.back()) {
      log_eps.push_back(std::log(eps_grid[e]));
      log_sigma.push_back(std::log(med));
    }
  }
  curve.fitted_cells = static_cast<int>(log_eps.size());
  if (curve.fitted_cells >= 2) {
    double mx = 0, my = 0;
    for (size_t i = 0; i < log_eps.size(); ++i) {
      mx += log_eps[i];
      my += log_sigma[i];
    }
    mx /= log_eps.size();
    my /= log_eps.size();
    double num = 0, den = 0;
    for (size_t i = 0; i < log_eps.size(); ++i) {
      num += (log_eps[i] - mx) * (log_sigma[i] - my);
      den += (log_eps[i] - mx) * (log_eps[i] - mx);
    }
    curve.slope = num / den;
    curve.intercept = my - curve.slope * mx;
  }
  return curve;
}

/// Log-spaced grid helper (inclusive endpoints).
inline std::vector<double> log_spaced(double lo, double hi, int cells) {
  std::vector<double> grid;
  if (cells == 1) {
    grid.push_back(lo);
    return grid;
  }
  double la = std::log10(lo), lb = std::log10(hi);
  for (int i = 0; i < cells; ++i) grid.push_back(std::pow(10.0, la + (lb - la) * i / (cells - 1)));
  return grid;
}

}  // namespace takens
