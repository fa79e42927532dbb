#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "takens/errors.hpp"
#include "takens/geometry.hpp"
#include "takens/rng.hpp"

namespace takens {

/// Number of N-variate monomials of total degree <= D: binomial(N+D, N).
inline long long basis_size(int ambient_dim, int max_degree) {
  long long r = 1;
  for (int i = 1; i <= ambient_dim; ++i) {
    r = r * (max_degree + i) / i;  // exact: product of i consecutive integers divides by i!
  }
  return r;
}

/// Ordered monomial basis of N-variate polynomials of degree <= D.
/// Multi-indices are sorted by (total degree, lexicographic), ascending.
class MonomialBasis {
public:
  MonomialBasis(int ambient_dim, int max_degree) : n_(ambient_dim), d_(max_degree) {
    if (ambient_dim < 1) throw ConfigError("ambient_dim", "must be >= 1");
    if (max_degree < 0) throw ConfigError("degree", "must be >= 0");
    if (max_degree > 12) throw ConfigError("degree", "monomial degree > 12 refused (conditioning limit)");
    Eigen::VectorXi beta = Eigen::VectorXi::Zero(n_);
    for (int total = 0; total <= d_; ++total) enumerate(beta, 0, total);
    for (int j = 0; j < static_cast<int>(exponents_.size()); ++j) {
      index_.emplace(key(exponents_[j]), j);
    }
  }

  int ambient_dim() const { return n_; }
  int max_degree() const { return d_; }
  int size() const { return static_cast<int>(exponents_.size()); }
  const std::vector<Eigen::VectorXi>& exponents() const { return exponents_; }

  int index_of(const Eigen::VectorXi& beta) const {
    auto it = index_.find(key(beta));
    if (it == index_.end()) throw ConfigError("exponent", "multi-index not in basis");
    return it->second;
  }

  /// Values of all m monomials at an ambient point.
  Eigen::VectorXd values_at(const Eigen::VectorXd& z) const {
    Eigen::MatrixXd pow = power_table(z);
    Eigen::VectorXd vals(size());
    for (int j = 0; j < size(); ++j) {
      double v = 1.0;
      for (int c = 0; c < n_; ++c) v *= pow(c, exponents_[j][c]);
      vals[j] = v;
    }
    return vals;
  }

  /// Gradients of all monomials at z; column j is the gradient of monomial j.
  Eigen::MatrixXd gradients_at(const Eigen::VectorXd& z) const {
    Eigen::MatrixXd pow = power_table(z);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n_, size());
    for (int j = 0; j < size(); ++j) {
      const Eigen::VectorXi& beta = exponents_[j];
      for (int c = 0; c < n_; ++c) {
        if (beta[c] == 0) continue;
        double v = beta[c] * pow(c, beta[c] - 1);
        for (int c2 = 0; c2 < n_; ++c2) {
          if (c2 != c) v *= pow(c2, beta[c2]);
        }
        g(c, j) = v;
      }
    }
    return g;
  }

private:
  void enumerate(Eigen::VectorXi& beta, int pos, int remaining) {
    if (pos == n_ - 1) {
      beta[pos] = remaining;
      exponents_.push_back(beta);
      return;
    }
    for (int e = 0; e <= remaining; ++e) {
      beta[pos] = e;
      enumerate(beta, pos + 1, remaining - e);
    }
    beta[pos] = 0;
  }

  static std::vector<int> key(const Eigen::VectorXi& beta) {
    return std::vector<int>(beta.data(), beta.data() + beta.size());
  }

  Eigen::MatrixXd power_table(const Eigen::VectorXd& z) const {
    Eigen::MatrixXd pow(n_, d_ + 1);
    for (int c = 0; c < n_; ++c) {
      pow(c, 0) = 1.0;
      for (int e = 1; e <= d_; ++e) pow(c, e) = pow(c, e - 1) * z[c];
    }
    return pow;
  }

  int n_;
  int d_;
  std::vector<Eigen::VectorXi> exponents_;
  std::map<std::vector<int>, int> index_;
};

enum class BaseKind {
  zero,       // h = 0
  cos_chart1  // h = cos(2*pi*u) through ambient coordinates: h(z) = 2*pi*z_1
};

inline BaseKind base_kind_from_id(const std::string& id) {
  if (id == "zero") return BaseKind::zero;
  if (id == "cos1") return BaseKind::cos_chart1;
  throw ConfigError("base", "unknown base observable '" + id + "'");
}

inline std::string base_kind_id(BaseKind k) { return k == BaseKind::zero ? "zero" : "cos1"; }

/// Scalar observable h_alpha = h + sum_j alpha_j z^{beta_j} over a monomial
/// basis, where h is a smooth preset. Evaluation and gradients are exact.
class Observable {
public:
  Observable(MonomialBasis basis, BaseKind base, Eigen::VectorXd alpha)
      : basis_(std::move(basis)), base_(base), alpha_(std::move(alpha)) {
    if (alpha_.size() != basis_.size()) throw ConfigError("alpha", "coefficient count != basis size");
  }

  static Observable with_zero_base(MonomialBasis basis, Eigen::VectorXd alpha) {
    return Observable(std::move(basis), BaseKind::zero, std::move(alpha));
  }

  const MonomialBasis& basis() const { return basis_; }
  BaseKind base_kind() const { return base_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }

  Observable with_alpha(Eigen::VectorXd alpha) const { return Observable(basis_, base_, std::move(alpha)); }

  double eval(const Eigen::VectorXd& z) const {
    double v = alpha_.dot(basis_.values_at(z));
    if (base_ == BaseKind::cos_chart1) v += kTwoPi * z[0];
    return v;
  }

  Eigen::VectorXd ambient_gradient(const Eigen::VectorXd& z) const {
    Eigen::VectorXd g = basis_.gradients_at(z) * alpha_;
    if (base_ == BaseKind::cos_chart1) g[0] += kTwoPi;
    return g;
  }

private:
  MonomialBasis basis_;
  BaseKind base_;
  Eigen::VectorXd alpha_;
};

/// Canonical perturbation draw: alpha uniform on B_m(0, radius) from the
/// "observable" stream of the given top-level seed. Every component that
/// speaks of a "seed-s observable" uses this draw.
inline Eigen::VectorXd draw_alpha(const MonomialBasis& basis, double radius, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, "observable");
  return rng.ball(basis.size(), radius);
}

/// Coefficients of a polynomial p with prescribed full gradients
/// grad p(z_i) = u_i at k distinct ambient points, as the minimum-norm
/// solution of the stacked kN x m linear system.
///
/// Throws IllConditioned when nodes coincide (numerical rank < kN).
inline Eigen::VectorXd interpolate_gradients(const MonomialBasis& basis,
                                             const std::vector<Eigen::VectorXd>& points,
                                             const std::vector<Eigen::VectorXd>& targets) {
  const int k = static_cast<int>(points.size());
  const int n = basis.ambient_dim();
  if (k == 0) return Eigen::VectorXd::Zero(basis.size());
  if (targets.size() != points.size()) throw ConfigError("targets", "one target per point required");
  if (basis.max_degree() < k) {
    throw ConfigError("degree", "basis degree too small for the number of interpolation nodes");
  }
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      if ((points[i] - points[j]).norm() <= 1e-8) {
        throw IllConditioned("interpolation nodes coincide (pairwise distance <= 1e-8)");
      }
    }
  }
  Eigen::MatrixXd a(k * n, basis.size());
  Eigen::VectorXd b(k * n);
  for (int i = 0; i < k; ++i) {
    a.middleRows(i * n, n) = basis.gradients_at(points[i]);
    b.segment(i * n, n) = targets[i];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  double cutoff = kRankTol * sv[0];
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv[i] > cutoff) ++rank;
  }
  if (rank < k * n) {
    throw IllConditioned("gradient interpolation system has numerical rank " + std::to_string(rank) +
                         " < " + std::to_string(k * n));
  }
  Eigen::VectorXd coeff = svd.matrixU().transpose() * b;
  for (int i = 0; i < sv.size(); ++i) coeff[i] = (sv[i] > cutoff) ? coeff[i] / sv[i] : 0.0;
  return svd.matrixV() * coeff;
}

/// Coefficients of a polynomial whose tangential differentials at the frame
/// base points match the given covectors (d-vectors in frame coordinates).
/// Each covector is lifted to the ambient gradient target u_i = F_i * l_i,
/// the minimal extension vanishing on the normal space.
inline Eigen::VectorXd tangential_interpolation(const MonomialBasis& basis,
                                                const std::vector<TangentFrame>& frames,
                                                const std::vector<Eigen::VectorXd>& covectors) {
  if (frames.size() != covectors.size()) throw ConfigError("covectors", "one covector per frame required");
  std::vector<Eigen::VectorXd> points;
  std::vector<Eigen::VectorXd> targets;
  points.reserve(frames.size());
  targets.reserve(frames.size());
  for (size_t i = 0; i < frames.size(); ++i) {
    points.push_back(frames[i].base.ambient);
    targets.push_back(frames[i].basis * covectors[i]);
  }
  Eigen::VectorXd alpha = interpolate_gradients(basis, points, targets);
  Observable p = Observable::with_zero_base(basis, alpha);
  for (size_t i = 0; i < frames.size(); ++i) {
    Eigen::VectorXd got = frames[i].basis.transpose() * p.ambient_gradient(points[i]);
    if ((got - covectors[i]).norm() > 1e-8) {
      throw IllConditioned("tangential interpolation residual above 1e-8");
    }
  }
  return alpha;
}

}  // namespace takens
