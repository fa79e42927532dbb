#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <functional>
#include <utility>
#include <vector>

#include "takens/dynamics.hpp"
#include "takens/observables.hpp"
#include "takens/rng.hpp"

namespace takens {

/// The k-delay coordinate map phi(x) = (h(x), h(Tx), ..., h(T^{k-1}x)).
struct DelayMap {
  Diffeo dynamics;
  Observable observable;
  int k;

  DelayMap(Diffeo t, Observable h, int delay_length)
      : dynamics(std::move(t)), observable(std::move(h)), k(delay_length) {
    if (k < 1) throw ConfigError("k", "delay length must be >= 1");
  }

  DelayMap with_alpha(Eigen::VectorXd alpha) const {
    return DelayMap(dynamics, observable.with_alpha(std::move(alpha)), k);
  }
};

inline Eigen::VectorXd delay_eval(const DelayMap& dm, const ManifoldPoint& x) {
  Eigen::VectorXd out(dm.k);
  ManifoldPoint p = x;
  for (int i = 0; i < dm.k; ++i) {
    out[i] = dm.observable.eval(p.ambient);
    if (i + 1 < dm.k) p = dm.dynamics.step(p);
  }
  return out;
}

/// Differential of the delay map at x in chart coordinates (k x d):
/// row i is the chart gradient of h at T^i x composed with the chart cocycle
/// of D_x T^i, by the chain rule.
inline Eigen::MatrixXd delay_differential_chart(const DelayMap& dm, const ManifoldPoint& x) {
  const Manifold& m = dm.dynamics.manifold;
  const int d = m.intrinsic_dim();
  Eigen::MatrixXd out(dm.k, d);
  ManifoldPoint p = x;
  Eigen::MatrixXd cocycle = Eigen::MatrixXd::Identity(d, d);
  for (int i = 0; i < dm.k; ++i) {
    Eigen::VectorXd grad = dm.observable.ambient_gradient(p.ambient);
    Eigen::MatrixXd jac = m.chart_jacobian(p.chart);
    out.row(i) = (grad.transpose() * jac) * cocycle;
    if (i + 1 < dm.k) {
      cocycle = dm.dynamics.chart_derivative(p.chart) * cocycle;
      p = dm.dynamics.step(p);
    }
  }
  return out;
}

/// Differential of the delay map expressed on an orthonormal tangent frame at
/// the base point (k x d). Frame coordinates carry the Riemannian norm, so
/// singular values of this matrix are metric stretch factors.
inline Eigen::MatrixXd delay_differential(const DelayMap& dm, const TangentFrame& frame) {
  const Manifold& m = dm.dynamics.manifold;
  Eigen::MatrixXd jx = m.chart_jacobian(frame.base.chart);
  Eigen::MatrixXd chart_from_frame = jx.completeOrthogonalDecomposition().solve(frame.basis);
  return delay_differential_chart(dm, frame.base) * chart_from_frame;
}

/// The k x m matrix D_{x,y} of basis-observable differences along the two
/// orbits, and the offset w_{x,y} from the base observable, so that
/// phi_alpha(x) - phi_alpha(y) = D alpha + w for every coefficient vector.
struct PairMatrix {
  Eigen::MatrixXd d;  // k x m
  Eigen::VectorXd w;  // k
};

inline PairMatrix pair_matrix(const DelayMap& dm, const ManifoldPoint& x, const ManifoldPoint& y) {
  const MonomialBasis& basis = dm.observable.basis();
  PairMatrix pm;
  pm.d.resize(dm.k, basis.size());
  pm.w.resize(dm.k);
  Observable base_only(basis, dm.observable.base_kind(), Eigen::VectorXd::Zero(basis.size()));
  ManifoldPoint px = x;
  ManifoldPoint py = y;
  for (int i = 0; i < dm.k; ++i) {
    pm.d.row(i) = (basis.values_at(px.ambient) - basis.values_at(py.ambient)).transpose();
    pm.w[i] = base_only.eval(px.ambient) - base_only.eval(py.ambient);
    if (i + 1 < dm.k) {
      px = dm.dynamics.step(px);
      py = dm.dynamics.step(py);
    }
  }
  return pm;
}

/// A point V of Gr(k,N) represented by an orthonormal basis of the subspace.
struct Projection {
  Eigen::MatrixXd v_basis;  // N x k, orthonormal columns

  int ambient_dim() const { return static_cast<int>(v_basis.rows()); }
  int subspace_dim() const { return static_cast<int>(v_basis.cols()); }
  Eigen::MatrixXd projector() const { return v_basis * v_basis.transpose(); }
};

/// Haar-distributed subspace: orthonormalization of an N x k standard
/// Gaussian matrix (rotation invariant on Gr(k,N)).
inline Projection sample_projection(int ambient_dim, int k, Rng& rng) {
  if (k < 1 || k > ambient_dim) throw ConfigError("k", "projection rank must satisfy 1 <= k <= N");
  Eigen::MatrixXd g = rng.gaussian_matrix(ambient_dim, k);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(ambient_dim, k);
  return Projection{std::move(q)};
}

/// Coordinates of P_V x in the chosen basis of V, optionally added to a fixed
/// base map (phi = 0 gives the plain orthogonal projection).
inline Eigen::VectorXd project_eval(const Projection& p, const ManifoldPoint& x) {
  return p.v_basis.transpose() * x.ambient;
}

inline Eigen::VectorXd project_eval(
    const Projection& p, const ManifoldPoint& x,
    const std::function<Eigen::VectorXd(const ManifoldPoint&)>& base_map) {
  Eigen::VectorXd out = project_eval(p, x);
  if (base_map) out += base_map(x);
  return out;
}

/// A generic embedding of the manifold into R^k: evaluation plus (when
/// available) the differential on an orthonormal tangent frame. Both the
/// delay map and the projections provide one; point clouds and the
/// regularity scans are written against this surface.
struct EmbedMap {
  int dim = 0;
  std::function<Eigen::VectorXd(const ManifoldPoint&)> eval;
  std::function<Eigen::MatrixXd(const TangentFrame&)> differential;  // k x d, may be empty
};

inline EmbedMap as_embed(const DelayMap& dm) {
  EmbedMap em;
  em.dim = dm.k;
  em.eval = [dm](const ManifoldPoint& x) { return delay_eval(dm, x); };
  em.differential = [dm](const TangentFrame& f) { return delay_differential(dm, f); };
  return em;
}

inline EmbedMap as_embed(const Projection& p) {
  EmbedMap em;
  em.dim = p.subspace_dim();
  Eigen::MatrixXd vt = p.v_basis.transpose();
  em.eval = [vt](const ManifoldPoint& x) { return (vt * x.ambient).eval(); };
  em.differential = [vt](const TangentFrame& f) { return (vt * f.basis).eval(); };
  return em;
}

/// Same embedding with every output coordinate multiplied by lambda.
inline EmbedMap scaled(const EmbedMap& em, double lambda) {
  EmbedMap out;
  out.dim = em.dim;
  auto eval = em.eval;
  out.eval = [eval, lambda](const ManifoldPoint& x) { return (lambda * eval(x)).eval(); };
  if (em.differential) {
    auto diff = em.differential;
    out.differential = [diff, lambda](const TangentFrame& f) { return (lambda * diff(f)).eval(); };
  }
  return out;
}

}  // namespace takens
