#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "takens/errors.hpp"

namespace takens {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Relative singular-value threshold shared by every rank decision in the
/// library: singular values below kRankTol * sigma_max count as zero.
inline constexpr double kRankTol = 1e-10;

/// Wrap a chart coordinate into the canonical cell [0, 1).
inline double wrap_unit(double x) {
  double w = x - std::floor(x);
  return (w >= 1.0) ? 0.0 : w;
}

/// Distance between two coordinates on the unit-length circle R/Z.
inline double circle_gap(double a, double b) {
  double t = std::fabs(wrap_unit(a) - wrap_unit(b));
  return std::min(t, 1.0 - t);
}

/// A point carried in intrinsic chart coordinates together with its image in
/// the ambient space R^N.
struct ManifoldPoint {
  Eigen::VectorXd chart;    // canonical coordinates in [0,1)^d
  Eigen::VectorXd ambient;  // embedded image in R^N
};

/// Compact manifold embedded in R^N via an explicit global parametrization
/// with periodic identifications. Both built-in instances are flat products
/// of circles scaled by 1/(2*pi), so chart displacement equals Riemannian
/// arc length and the distance is computed analytically.
///
/// Immutable after construction; safe for concurrent reads.
class Manifold {
public:
  using ParamFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
  using DistanceFn = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

  Manifold(std::string name, int intrinsic_dim, int ambient_dim, ParamFn param,
           JacobianFn jacobian, DistanceFn distance)
      : name_(std::move(name)),
        d_(intrinsic_dim),
        n_(ambient_dim),
        param_(std::move(param)),
        jacobian_(std::move(jacobian)),
        distance_(std::move(distance)) {}

  const std::string& name() const { return name_; }
  int intrinsic_dim() const { return d_; }
  int ambient_dim() const { return n_; }

  Eigen::VectorXd canonicalize(const Eigen::VectorXd& chart) const {
    Eigen::VectorXd c(chart.size());
    for (int i = 0; i < chart.size(); ++i) c[i] = wrap_unit(chart[i]);
    return c;
  }

  Eigen::VectorXd parametrize(const Eigen::VectorXd& chart) const { return param_(canonicalize(chart)); }

  Eigen::MatrixXd chart_jacobian(const Eigen::VectorXd& chart) const { return jacobian_(canonicalize(chart)); }

  double distance(const Eigen::VectorXd& chart_a, const Eigen::VectorXd& chart_b) const {
    return distance_(chart_a, chart_b);
  }

  double distance(const ManifoldPoint& a, const ManifoldPoint& b) const {
    return distance_(a.chart, b.chart);
  }

  ManifoldPoint point(const Eigen::VectorXd& chart) const {
    Eigen::VectorXd c = canonicalize(chart);
    return ManifoldPoint{c, param_(c)};
  }

  ManifoldPoint point(double u) const {
    Eigen::VectorXd c(1);
    c[0] = u;
    return point(c);
  }

  ManifoldPoint point(double u, double v) const {
    Eigen::VectorXd c(2);
    c[0] = u;
    c[1] = v;
    return point(c);
  }

private:
  std::string name_;
  int d_;
  int n_;
  ParamFn param_;
  JacobianFn jacobian_;
  DistanceFn distance_;
};

namespace detail {

// Product of d unit-length circles: chart coordinate j maps to the ambient
// pair (cos(2*pi*c_j), sin(2*pi*c_j)) / (2*pi) in rows 2j, 2j+1.
inline Manifold circle_product(std::string name, int factors) {
  const int d = factors;
  const int n = 2 * factors;
  auto param = [d](const Eigen::VectorXd& c) {
    Eigen::VectorXd z(2 * d);
    for (int j = 0; j < d; ++j) {
      double a = kTwoPi * c[j];
      z[2 * j] = std::cos(a) / kTwoPi;
      z[2 * j + 1] = std::sin(a) / kTwoPi;
    }
    return z;
  };
  auto jac = [d](const Eigen::VectorXd& c) {
    Eigen::MatrixXd j(2 * d, d);
    j.setZero();
    for (int f = 0; f < d; ++f) {
      double a = kTwoPi * c[f];
      j(2 * f, f) = -std::sin(a);
      j(2 * f + 1, f) = std::cos(a);
    }
    return j;
  };
  auto dist = [d](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      double g = circle_gap(a[j], b[j]);
      s += g * g;
    }
    return std::sqrt(s);
  };
  return Manifold(std::move(name), d, n, param, jac, dist);
}

}  // namespace detail

/// T^2 = R^2/Z^2 embedded in R^4, flat metric; d=2, N=4.
inline Manifold make_flat_torus() { return detail::circle_product("torus2", 2); }

/// S^1 in R^2 with the arc metric on R/Z; d=1, N=2.
inline Manifold make_circle() { return detail::circle_product("circle", 1); }

/// Orthonormal basis of T_x M expressed as columns in R^N.
struct TangentFrame {
  ManifoldPoint base;
  Eigen::MatrixXd basis;  // N x d, orthonormal columns spanning T_x M
};

/// Orthonormalized column span of the chart jacobian at x.
/// Throws DegenerateChart if the jacobian is numerically rank deficient.
inline TangentFrame tangent_frame(const Manifold& m, const ManifoldPoint& x) {
  Eigen::MatrixXd j = m.chart_jacobian(x.chart);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
  if (svd.singularValues().minCoeff() < 1e-10) {
    throw DegenerateChart("chart jacobian rank deficient at a sampled point of " + m.name());
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(j);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.ambient_dim(), m.intrinsic_dim());
  return TangentFrame{x, std::move(q)};
}

}  // namespace takens
