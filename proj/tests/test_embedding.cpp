#include <catch2/catch_amalgamated.hpp>

#include "takens/embedding.hpp"
#include "takens/rng.hpp"

using namespace takens;

namespace {

Observable constant_observable(int ambient_dim, double c) {
  MonomialBasis basis(ambient_dim, 1);
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(basis.size());
  alpha[basis.index_of(Eigen::VectorXi::Zero(ambient_dim))] = c;
  return Observable::with_zero_base(basis, alpha);
}

Observable first_coordinate_observable(int ambient_dim) {
  MonomialBasis basis(ambient_dim, 1);
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(basis.size());
  Eigen::VectorXi e1 = Eigen::VectorXi::Zero(ambient_dim);
  e1[0] = 1;
  alpha[basis.index_of(e1)] = 1.0;
  return Observable::with_zero_base(basis, alpha);
}

Observable perturbed_cos1(const MonomialBasis& basis, double radius, std::uint64_t seed) {
  return Observable(basis, BaseKind::cos_chart1, draw_alpha(basis, radius, seed));
}

// central finite differences of the delay map along chart directions
Eigen::MatrixXd fd_delay_differential(const DelayMap& dm, const ManifoldPoint& x, double h) {
  const Manifold& m = dm.dynamics.manifold;
  Eigen::MatrixXd out(dm.k, m.intrinsic_dim());
  for (int c = 0; c < m.intrinsic_dim(); ++c) {
    Eigen::VectorXd up = x.chart, dn = x.chart;
    up[c] += h;
    dn[c] -= h;
    out.col(c) = (delay_eval(dm, m.point(up)) - delay_eval(dm, m.point(dn))) / (2 * h);
  }
  return out;
}

int numerical_rank(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > kRankTol * sv[0]) ++r;
  return r;
}

}  // namespace

TEST_CASE("delay map evaluation") {
  Diffeo rot = make_rotation(0.25);

  SECTION("constant observable") {
    DelayMap dm(rot, constant_observable(2, 3.5), 4);
    Eigen::VectorXd phi = delay_eval(dm, rot.manifold.point(0.1));
    for (int i = 0; i < 4; ++i) CHECK(phi[i] == Catch::Approx(3.5).margin(1e-14));
  }

  SECTION("quarter turns with the first coordinate") {
    DelayMap dm(rot, first_coordinate_observable(2), 4);
    Eigen::VectorXd phi = delay_eval(dm, rot.manifold.point(0.0));
    CHECK(phi[0] == Catch::Approx(1.0 / kTwoPi).margin(1e-14));
    CHECK(std::abs(phi[1]) < 1e-14);
    CHECK(phi[2] == Catch::Approx(-1.0 / kTwoPi).margin(1e-14));
    CHECK(std::abs(phi[3]) < 1e-14);
  }

  SECTION("shift structure is exact") {
    Diffeo cat = make_cat_map();
    MonomialBasis basis(4, 5);
    DelayMap dm(cat, perturbed_cos1(basis, 1.0, 0), 3);
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      ManifoldPoint x = cat.manifold.point(rng.uniform(), rng.uniform());
      Eigen::VectorXd at_x = delay_eval(dm, x);
      Eigen::VectorXd at_tx = delay_eval(dm, cat.step(x));
      for (int i = 1; i < dm.k; ++i) CHECK(at_x[i] == at_tx[i - 1]);
    }
  }
}

TEST_CASE("delay differential") {
  Diffeo cat = make_cat_map();
  MonomialBasis basis(4, 5);

  SECTION("constant observable has zero differential") {
    DelayMap dm(cat, constant_observable(4, 2.0), 3);
    ManifoldPoint x = cat.manifold.point(0.37, 0.81);
    CHECK(delay_differential_chart(dm, x).norm() == 0.0);
  }

  SECTION("matches finite differences") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
      int k = 1 + static_cast<int>(rng.uniform_int(4));
      DelayMap dm(cat, perturbed_cos1(basis, 1.0, trial), k);
      ManifoldPoint x = cat.manifold.point(rng.uniform(), rng.uniform());
      Eigen::MatrixXd a = delay_differential_chart(dm, x);
      Eigen::MatrixXd fd = fd_delay_differential(dm, x, 1e-5);
      CHECK((a - fd).norm() / a.norm() < 1e-6);
    }
  }

  SECTION("k=1 reduces to the tangential gradient") {
    DelayMap dm(cat, perturbed_cos1(basis, 1.0, 3), 1);
    ManifoldPoint x = cat.manifold.point(0.21, 0.66);
    TangentFrame f = tangent_frame(cat.manifold, x);
    Eigen::MatrixXd a = delay_differential(dm, f);
    Eigen::VectorXd expected = f.basis.transpose() * dm.observable.ambient_gradient(x.ambient);
    CHECK((a.row(0).transpose() - expected).norm() < 1e-12);
  }

  SECTION("frame and chart versions share singular values on flat charts") {
    DelayMap dm(cat, perturbed_cos1(basis, 1.0, 9), 3);
    ManifoldPoint x = cat.manifold.point(0.4, 0.9);
    TangentFrame f = tangent_frame(cat.manifold, x);
    Eigen::JacobiSVD<Eigen::MatrixXd> sa(delay_differential(dm, f));
    Eigen::JacobiSVD<Eigen::MatrixXd> sb(delay_differential_chart(dm, x));
    CHECK((sa.singularValues() - sb.singularValues()).norm() < 1e-10);
  }
}

TEST_CASE("pair matrix") {
  Diffeo cat = make_cat_map();
  MonomialBasis basis(4, 5);
  DelayMap dm(cat, perturbed_cos1(basis, 1.0, 0), 3);

  SECTION("x = y gives zero") {
    ManifoldPoint x = cat.manifold.point(0.123, 0.456);
    PairMatrix pm = pair_matrix(dm, x, x);
    CHECK(pm.d.norm() == 0.0);
    CHECK(pm.w.norm() == 0.0);
  }

  SECTION("x != y has rank at least 1") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      ManifoldPoint x = cat.manifold.point(rng.uniform(), rng.uniform());
      ManifoldPoint y = cat.manifold.point(rng.uniform(), rng.uniform());
      PairMatrix pm = pair_matrix(dm, x, y);
      CHECK(numerical_rank(pm.d) >= 1);
    }
  }

  SECTION("screened pairs reach full rank k") {
    Rng rng(13);
    int checked = 0;
    while (checked < 200) {
      ManifoldPoint x = cat.manifold.point(rng.uniform(), rng.uniform());
      if (is_periodic_up_to(cat, x, dm.k - 1, 1e-8)) continue;
      ManifoldPoint y = cat.manifold.point(rng.uniform(), rng.uniform());
      // reject y on the truncated orbit of x
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
      CHECK(numerical_rank(pm.d) == dm.k);
      ++checked;
    }
  }

  SECTION("matrix form identity against direct evaluation") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
      ManifoldPoint x = cat.manifold.point(rng.uniform(), rng.uniform());
      ManifoldPoint y = cat.manifold.point(rng.uniform(), rng.uniform());
      PairMatrix pm = pair_matrix(dm, x, y);
      for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd alpha = rng.ball(basis.size(), 1.0);
        DelayMap dma = dm.with_alpha(alpha);
        Eigen::VectorXd direct = delay_eval(dma, x) - delay_eval(dma, y);
        Eigen::VectorXd via_matrix = pm.d * alpha + pm.w;
        CHECK((direct - via_matrix).norm() < 1e-10);
      }
    }
  }
}

TEST_CASE("projections") {
  SECTION("full-rank sample gives the identity projector") {
    Rng rng(19);
    Projection p = sample_projection(4, 4, rng);
    CHECK((p.projector() - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-12);
  }

  SECTION("projector idempotence and symmetry") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
      Projection p = sample_projection(4, 1 + static_cast<int>(rng.uniform_int(4)), rng);
      Eigen::MatrixXd pv = p.projector();
      CHECK((pv * pv - pv).norm() < 1e-12);
      CHECK((pv - pv.transpose()).norm() < 1e-12);
      CHECK((p.v_basis.transpose() * p.v_basis -
             Eigen::MatrixXd::Identity(p.subspace_dim(), p.subspace_dim()))
                .norm() < 1e-12);
    }
  }

  SECTION("rotation invariance: mean squared shadow of a fixed unit vector") {
    // trace argument oracle: E ||P_V u||^2 = k/N
    const int n_amb = 4, k = 3, draws = 10000;
    Eigen::VectorXd u = Eigen::VectorXd::Unit(n_amb, 0);
    Rng rng = Rng::stream(0, "projection-mc");
    double mean = 0.0, m2 = 0.0;
    for (int i = 1; i <= draws; ++i) {
      Projection p = sample_projection(n_amb, k, rng);
      double v = (p.v_basis.transpose() * u).squaredNorm();
      double delta = v - mean;
      mean += delta / i;
      m2 += delta * (v - mean);
    }
    double se = std::sqrt(m2 / (draws - 1) / draws);
    CHECK(std::abs(mean - 3.0 / 4.0) <= 3 * se);
  }

  SECTION("projection evaluation") {
    Manifold circle = make_circle();
    Projection first{Eigen::MatrixXd::Identity(2, 1)};
    Rng rng(29);
    for (int i = 0; i < 50; ++i) {
      ManifoldPoint x = circle.point(rng.uniform());
      CHECK(project_eval(first, x)[0] == x.ambient[0]);
    }
    // identity subspace returns ambient coordinates
    Projection full{Eigen::MatrixXd::Identity(2, 2)};
    ManifoldPoint x = circle.point(0.3);
    CHECK((project_eval(full, x) - x.ambient).norm() == 0.0);
  }

  SECTION("projections are 1-Lipschitz") {
    Manifold torus = make_flat_torus();
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
      Projection p = sample_projection(4, 2, rng);
      ManifoldPoint x = torus.point(rng.uniform(), rng.uniform());
      ManifoldPoint y = torus.point(rng.uniform(), rng.uniform());
      double image_dist = (project_eval(p, x) - project_eval(p, y)).norm();
      double ambient_dist = (x.ambient - y.ambient).norm();
      CHECK(image_dist <= ambient_dist + 1e-15);
    }
  }
}

TEST_CASE("embed wrappers") {
  Diffeo cat = make_cat_map();
  MonomialBasis basis(4, 5);
  DelayMap dm(cat, perturbed_cos1(basis, 1.0, 0), 3);
  EmbedMap em = as_embed(dm);
  EmbedMap doubled = scaled(em, 2.0);
  ManifoldPoint x = cat.manifold.point(0.4, 0.2);
  CHECK((doubled.eval(x) - 2.0 * em.eval(x)).norm() == 0.0);
  TangentFrame f = tangent_frame(cat.manifold, x);
  CHECK((doubled.differential(f) - 2.0 * em.differential(f)).norm() == 0.0);
}
