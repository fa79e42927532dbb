#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "takens/embedding.hpp"

namespace takens {

/// One Oseledets block: exponent, multiplicity (columns), and the subspace
/// H_i(x) as chart-coordinate directions. The two test systems have constant
/// splittings, so the basis does not depend on x.
struct OseledetsBlock {
  double exponent = 0.0;
  Eigen::MatrixXd chart_basis;  // d x d_i
};

/// Exponents ascending; multiplicities sum to dim M.
struct OseledetsData {
  std::vector<OseledetsBlock> blocks;
};

/// Analytic splitting of the cat map: eigen-directions of [[2,1],[1,1]],
/// exponents -log((3+sqrt5)/2) < +log((3+sqrt5)/2).
inline OseledetsData cat_map_oseledets() {
  double s5 = std::sqrt(5.0);
  double chi = std::log((3.0 + s5) / 2.0);
  Eigen::MatrixXd contracting(2, 1), expanding(2, 1);
  contracting << 1.0, -(s5 + 1.0) / 2.0;
  expanding << 1.0, (s5 - 1.0) / 2.0;
  contracting.normalize();
  expanding.normalize();
  return OseledetsData{{OseledetsBlock{-chi, contracting}, OseledetsBlock{chi, expanding}}};
}

/// Rotation: single zero exponent on the full tangent line.
inline OseledetsData rotation_oseledets() {
  return OseledetsData{{OseledetsBlock{0.0, Eigen::MatrixXd::Identity(1, 1)}}};
}

struct DirectExponents {
  std::vector<double> exponents;  // ascending, nats per step
  Eigen::MatrixXd directions;     // chart coordinates; column i pairs with exponents[i]
};

/// QR cocycle estimator: pushes an orthonormal chart frame through the
/// derivative cocycle, re-orthonormalizing each step and averaging the log
/// diagonal of R. The first burn_in steps are excluded from the average so
/// the frame can settle (burn_in < 0 selects min(100, n/10)).
inline DirectExponents direct_exponents(const Diffeo& t, const ManifoldPoint& x, int n,
                                        int burn_in = -1) {
  if (n < 10) throw ConfigError("n", "exponent estimation needs n >= 10");
  const int d = t.manifold.intrinsic_dim();
  if (burn_in < 0) burn_in = std::min(100, n / 10);
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(d);
  ManifoldPoint p = x;
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd a = t.chart_derivative(p.chart) * q;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd r = q.transpose() * a;
    for (int c = 0; c < d; ++c) {
      if (r(c, c) < 0) {  // normalize R diagonal positive
        q.col(c) = -q.col(c);
        r.row(c) = -r.row(c);
      }
      if (i >= burn_in) sums[c] += std::log(r(c, c));
    }
    p = t.step(p);
  }
  sums /= static_cast<double>(n - burn_in);
  std::vector<int> order(d);
  for (int i = 0; i < d; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return sums[a] < sums[b]; });
  DirectExponents out;
  out.directions.resize(d, d);
  for (int i = 0; i < d; ++i) {
    out.exponents.push_back(sums[order[i]]);
    out.directions.col(i) = q.col(order[i]);
  }
  return out;
}

namespace detail {

// chart coords -> frame coords at a point: v_frame = F^T J w
inline Eigen::MatrixXd chart_to_frame(const Manifold& m, const TangentFrame& f) {
  return f.basis.transpose() * m.chart_jacobian(f.base.chart);
}

struct RankInfo {
  double sigma_max = 0.0;
  double sigma_min = 0.0;
  bool full_rank = false;
};

inline RankInfo rank_info(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  RankInfo info;
  info.sigma_max = svd.singularValues().maxCoeff();
  info.sigma_min = svd.singularValues().minCoeff();
  info.full_rank = info.sigma_max > 0.0 && info.sigma_min > kRankTol * info.sigma_max;
  return info;
}

}  // namespace detail

/// D_z(S^n) restricted to the embedded tangent space T_z phi(M), z = phi(x):
/// (delay differential at T^n x) o (cocycle of T) o (inverse of the delay
/// differential on its image). Returned as a k x d matrix acting on
/// coordinates in the orthonormal basis of T_z phi(M) that is also returned.
///
/// Direct products are used, so this is meant for moderate n; the frequency
/// scan below carries logs instead and has no range limit.
struct ObservedOperator {
  Eigen::MatrixXd matrix;        // k x d
  Eigen::MatrixXd domain_basis;  // k x d, orthonormal basis of T_z phi(M)
};

inline ObservedOperator observed_cocycle(const DelayMap& dm, const ManifoldPoint& x, int n) {
  const Diffeo& t = dm.dynamics;
  const Manifold& m = t.manifold;
  const int d = m.intrinsic_dim();
  TangentFrame fx = tangent_frame(m, x);
  Eigen::MatrixXd dphi_x = delay_differential(dm, fx);
  detail::RankInfo rx = detail::rank_info(dphi_x);
  if (!rx.full_rank) throw RankDeficient("delay differential rank deficient at the base point");

  // orthonormal basis of the image
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(dphi_x);
  Eigen::MatrixXd basis = qr.householderQ() * Eigen::MatrixXd::Identity(dm.k, d);

  // pseudoinverse of dphi_x through its SVD
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dphi_x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd inv_sv = svd.singularValues();
  for (int i = 0; i < inv_sv.size(); ++i) inv_sv[i] = 1.0 / inv_sv[i];
  Eigen::MatrixXd pinv = svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();

  // frame-coordinate cocycle along the orbit
  Pushforward pf = pushforward(t, fx, n);
  Eigen::MatrixXd dphi_y = delay_differential(dm, pf.frame);
  detail::RankInfo ry = detail::rank_info(dphi_y);
  if (!ry.full_rank) throw RankDeficient("delay differential rank deficient at the orbit endpoint");

  ObservedOperator op;
  op.domain_basis = basis;
  op.matrix = dphi_y * (pf.matrix * (pinv * basis));
  return op;
}

struct FrequencyReport {
  double fraction = 0.0;                          // good times over n = 1..N (n=0 is vacuous)
  int total = 0;                                  // N
  int dropped = 0;                                // rank-deficient cells, excluded
  std::vector<double> deviations;                 // sup over blocks, n = 1..N
  std::vector<std::vector<double>> per_block;     // observed deviation per block, n = 1..N
  std::vector<std::vector<double>> per_block_mid; // tangent-cocycle deviation per block
  std::vector<double> log_norm_bound;             // log max(||Dphi||, 1/sigma_min) at T^n x
  double eps = 0.0;
};

/// Per-time deviations of the observed cocycle growth from the Lyapunov
/// exponents, and the frequency of eps-good times. The sup over each
/// pushed-forward block H~_i is evaluated exactly through the extreme
/// singular values of the restricted operator; block growth is accumulated
/// in log scale so long products cannot overflow.
inline FrequencyReport observed_frequency(const DelayMap& dm, const ManifoldPoint& x,
                                          const OseledetsData& osel, int big_n, double eps) {
  const Diffeo& t = dm.dynamics;
  const Manifold& m = t.manifold;
  const int d = m.intrinsic_dim();
  const int nblocks = static_cast<int>(osel.blocks.size());
  if (big_n < 1) throw ConfigError("n", "frequency scan needs N >= 1");

  // orbit with k-1 extra points so the delay window at T^N x is covered
  OrbitSegment seg = orbit(t, x, big_n + dm.k - 1);

  TangentFrame fx = tangent_frame(m, seg.points[0]);
  Eigen::MatrixXd dphi_x = delay_differential(dm, fx);
  if (!detail::rank_info(dphi_x).full_rank)
    throw RankDeficient("delay differential rank deficient at the base point");
  Eigen::MatrixXd g_prev = detail::chart_to_frame(m, fx);

  // Orthonormal frame-coordinate basis of an invariant block at a point.
  // Blocks are re-anchored onto the provider's subspace every step, so the
  // accumulated restriction cannot be contaminated by faster directions.
  auto block_basis = [&](const Eigen::MatrixXd& g_at, int b) {
    Eigen::MatrixXd w = g_at * osel.blocks[b].chart_basis;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(w);
    return (qr.householderQ() * Eigen::MatrixXd::Identity(d, w.cols())).eval();
  };

  // base correction K0 * Sigma0^{-1} per block, from the thin SVD of
  // Dphi_x restricted to the block
  std::vector<Eigen::MatrixXd> base_corr(nblocks);
  std::vector<Eigen::MatrixXd> anchor(nblocks);   // orthonormal block basis at T^n x
  std::vector<Eigen::MatrixXd> t_block(nblocks);  // accumulated d_i x d_i restriction
  std::vector<double> log_scale(nblocks, 0.0);
  for (int b = 0; b < nblocks; ++b) {
    anchor[b] = block_basis(g_prev, b);
    Eigen::MatrixXd b0 = dphi_x * anchor[b];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b0, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd inv_sv = svd.singularValues();
    if (inv_sv.minCoeff() <= 0.0)
      throw RankDeficient("embedded Oseledets block is degenerate at the base point");
    for (int i = 0; i < inv_sv.size(); ++i) inv_sv[i] = 1.0 / inv_sv[i];
    base_corr[b] = svd.matrixV() * inv_sv.asDiagonal();
    t_block[b] = Eigen::MatrixXd::Identity(anchor[b].cols(), anchor[b].cols());
  }

  FrequencyReport rep;
  rep.total = big_n;
  rep.eps = eps;
  rep.per_block.resize(nblocks);
  rep.per_block_mid.resize(nblocks);

  TangentFrame frame = fx;
  long long good = 0;
  int counted = 0;
  for (int n = 1; n <= big_n; ++n) {
    // advance the frame cocycle by one step
    TangentFrame next = tangent_frame(m, seg.points[n]);
    Eigen::MatrixXd g_next = detail::chart_to_frame(m, next);
    Eigen::MatrixXd step = g_next * seg.cocycle[n - 1] *
                           g_prev.fullPivLu().inverse();
    for (int b = 0; b < nblocks; ++b) {
      Eigen::MatrixXd next_anchor = block_basis(g_next, b);
      Eigen::MatrixXd restriction = next_anchor.transpose() * (step * anchor[b]);
      t_block[b] = restriction * t_block[b];
      anchor[b] = std::move(next_anchor);
      double s = t_block[b].norm();
      t_block[b] /= s;
      log_scale[b] += std::log(s);
    }
    frame = next;
    g_prev = g_next;

    // delay differential at T^n x (walks the window ahead of position n)
    Eigen::MatrixXd dphi_n = delay_differential(dm, frame);
    detail::RankInfo info = detail::rank_info(dphi_n);
    rep.log_norm_bound.push_back(
        std::log(std::max(info.sigma_max, info.sigma_min > 0 ? 1.0 / info.sigma_min : 0.0)));
    double worst = 0.0;
    bool dropped = !info.full_rank;
    if (!dropped) {
      for (int b = 0; b < nblocks; ++b) {
        double chi = osel.blocks[b].exponent;
        Eigen::MatrixXd small = t_block[b] * base_corr[b];  // d_i x d_i
        Eigen::MatrixXd z = dphi_n * (anchor[b] * small);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(z);
        double hi = (log_scale[b] + std::log(svd.singularValues().maxCoeff())) / n - chi;
        double lo = (log_scale[b] + std::log(svd.singularValues().minCoeff())) / n - chi;
        double dev = std::max(std::abs(hi), std::abs(lo));
        rep.per_block[b].push_back(dev);
        // same growth through the tangent cocycle alone (the proof's middle
        // term); the anchor has orthonormal columns, so the small factor
        // carries all singular values
        Eigen::JacobiSVD<Eigen::MatrixXd> svd_mid(small);
        double mid_hi = (log_scale[b] + std::log(svd_mid.singularValues().maxCoeff())) / n - chi;
        double mid_lo = (log_scale[b] + std::log(svd_mid.singularValues().minCoeff())) / n - chi;
        rep.per_block_mid[b].push_back(std::max(std::abs(mid_hi), std::abs(mid_lo)));
        worst = std::max(worst, dev);
      }
      rep.deviations.push_back(worst);
      ++counted;
      if (worst < eps) ++good;
    } else {
      for (int b = 0; b < nblocks; ++b) {
        rep.per_block[b].push_back(std::numeric_limits<double>::quiet_NaN());
        rep.per_block_mid[b].push_back(std::numeric_limits<double>::quiet_NaN());
      }
      rep.deviations.push_back(std::numeric_limits<double>::quiet_NaN());
      ++rep.dropped;
    }
  }
  rep.fraction = counted > 0 ? static_cast<double>(good) / static_cast<double>(counted) : 0.0;
  return rep;
}

struct OccupancyCurve {
  std::vector<double> m_grid;
  std::vector<double> occupancy;  // Birkhoff fraction of E_M along the orbit
  int dropped = 0;                // rank-deficient differentials, excluded
};

/// Birkhoff occupancy of E_M = { ||Dphi|| <= M and ||Dphi^{-1} on image|| <= M }
/// along a sampled orbit, for each M in the grid.
inline OccupancyCurve em_occupancy(const DelayMap& dm, const OrbitSegment& seg,
                                   const std::vector<double>& m_grid) {
  const Manifold& m = dm.dynamics.manifold;
  std::vector<double> hi_norms;
  std::vector<double> inv_norms;
  int dropped = 0;
  for (const auto& p : seg.points) {
    TangentFrame f = tangent_frame(m, p);
    detail::RankInfo info = detail::rank_info(delay_differential(dm, f));
    if (!info.full_rank) {
      ++dropped;
      continue;
    }
    hi_norms.push_back(info.sigma_max);
    inv_norms.push_back(1.0 / info.sigma_min);
  }
  OccupancyCurve curve;
  curve.m_grid = m_grid;
  curve.dropped = dropped;
  const double count = static_cast<double>(hi_norms.size());
  for (double big_m : m_grid) {
    long long inside = 0;
    for (size_t i = 0; i < hi_norms.size(); ++i) {
      if (hi_norms[i] <= big_m && inv_norms[i] <= big_m) ++inside;
    }
    curve.occupancy.push_back(count > 0 ? inside / count : 0.0);
  }
  return curve;
}

}  // namespace takens
