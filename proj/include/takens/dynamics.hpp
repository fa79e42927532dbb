#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "takens/geometry.hpp"

namespace takens {

/// C^r diffeomorphism T : M -> M given in chart coordinates, with its exact
/// chart derivative. Immutable after construction.
struct Diffeo {
  Manifold manifold;
  std::string name;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> forward;   // canonical chart in, canonical chart out
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> inverse;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> chart_derivative;  // d x d

  ManifoldPoint step(const ManifoldPoint& x) const { return manifold.point(forward(x.chart)); }
  ManifoldPoint step_back(const ManifoldPoint& x) const { return manifold.point(inverse(x.chart)); }
};

/// Arnold cat map (u,v) -> (2u+v, u+v) mod 1 on the flat torus.
/// Constant chart derivative [[2,1],[1,1]]; preserves Lebesgue and is ergodic.
inline Diffeo make_cat_map() {
  Manifold torus = make_flat_torus();
  Eigen::MatrixXd deriv(2, 2);
  deriv << 2, 1, 1, 1;
  auto fwd = [torus](const Eigen::VectorXd& c) {
    Eigen::VectorXd out(2);
    out[0] = wrap_unit(2.0 * c[0] + c[1]);
    out[1] = wrap_unit(c[0] + c[1]);
    return out;
  };
  auto inv = [torus](const Eigen::VectorXd& c) {
    Eigen::VectorXd out(2);
    out[0] = wrap_unit(c[0] - c[1]);
    out[1] = wrap_unit(-c[0] + 2.0 * c[1]);
    return out;
  };
  auto der = [deriv](const Eigen::VectorXd&) { return deriv; };
  return Diffeo{std::move(torus), "cat", fwd, inv, der};
}

/// Circle rotation u -> u + omega mod 1; derivative identically 1.
inline Diffeo make_rotation(double omega) {
  Manifold circle = make_circle();
  auto fwd = [omega](const Eigen::VectorXd& c) {
    Eigen::VectorXd out(1);
    out[0] = wrap_unit(c[0] + omega);
    return out;
  };
  auto inv = [omega](const Eigen::VectorXd& c) {
    Eigen::VectorXd out(1);
    out[0] = wrap_unit(c[0] - omega);
    return out;
  };
  auto der = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(1, 1).eval(); };
  return Diffeo{std::move(circle), "rotation", fwd, inv, der};
}

/// Orbit x, Tx, ..., T^n x together with the chart-derivative cocycle
/// (cocycle[i] is the derivative of T at points[i], i < n).
struct OrbitSegment {
  std::vector<ManifoldPoint> points;
  std::vector<Eigen::MatrixXd> cocycle;
};

inline OrbitSegment orbit(const Diffeo& t, const ManifoldPoint& x, int n) {
  OrbitSegment seg;
  seg.points.reserve(n + 1);
  seg.cocycle.reserve(n);
  seg.points.push_back(x);
  for (int i = 0; i < n; ++i) {
    seg.cocycle.push_back(t.chart_derivative(seg.points.back().chart));
    seg.points.push_back(t.step(seg.points.back()));
  }
  return seg;
}

struct PeriodicHit {
  int p;
  double residual;  // distance(T^p x, x)
  bool flagged;     // residual < tol
};

/// Residuals distance(T^p x, x) for p = 1..p_max; flags x as p-periodic when
/// the residual falls below tol.
inline std::vector<PeriodicHit> periodic_screen(const Diffeo& t, const ManifoldPoint& x, int p_max,
                                                double tol) {
  std::vector<PeriodicHit> out;
  out.reserve(p_max);
  ManifoldPoint y = x;
  for (int p = 1; p <= p_max; ++p) {
    y = t.step(y);
    double res = t.manifold.distance(y, x);
    out.push_back(PeriodicHit{p, res, res < tol});
  }
  return out;
}

inline bool is_periodic_up_to(const Diffeo& t, const ManifoldPoint& x, int p_max, double tol) {
  if (p_max < 1) return false;
  for (const auto& hit : periodic_screen(t, x, p_max, tol)) {
    if (hit.flagged) return true;
  }
  return false;
}

/// D_x T^n expressed between orthonormal tangent frames at x and T^n x.
struct Pushforward {
  TangentFrame frame;      // frame at T^n x
  Eigen::MatrixXd matrix;  // d x d, frame coords at x -> frame coords at T^n x
};

/// Composes chart derivatives along the orbit and changes basis into the
/// orthonormal frames. For n=0 the matrix is the identity (up to the frame
/// change at x itself, which cancels).
inline Pushforward pushforward(const Diffeo& t, const TangentFrame& frame, int n) {
  const Manifold& m = t.manifold;
  const int d = m.intrinsic_dim();
  OrbitSegment seg = orbit(t, frame.base, n);
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(d, d);
  for (int i = 0; i < n; ++i) c = seg.cocycle[i] * c;
  const ManifoldPoint& y = seg.points.back();
  TangentFrame fy = tangent_frame(m, y);
  // frame coords at x -> chart velocity at x: least-squares through the jacobian
  Eigen::MatrixXd jx = m.chart_jacobian(frame.base.chart);
  Eigen::MatrixXd chart_from_frame =
      jx.completeOrthogonalDecomposition().solve(frame.basis);  // d x d
  Eigen::MatrixXd jy = m.chart_jacobian(y.chart);
  Eigen::MatrixXd a = fy.basis.transpose() * (jy * (c * chart_from_frame));
  return Pushforward{std::move(fy), std::move(a)};
}

}  // namespace takens
