#include <catch2/catch_amalgamated.hpp>

#include "takens/lyapunov.hpp"
#include "takens/sampling.hpp"

using namespace takens;

namespace {

DelayMap seeded_cat_delay(int k, std::uint64_t seed) {
  Diffeo cat = make_cat_map();
  MonomialBasis basis(4, 2 * k - 1);
  Observable obs(basis, BaseKind::cos_chart1, draw_alpha(basis, 1.0, seed));
  return DelayMap(std::move(cat), std::move(obs), k);
}

DelayMap rotation_delay(int k) {
  Diffeo rot = make_rotation(0.6180339887);
  MonomialBasis basis(2, 2 * k - 1);
  Observable obs(basis, BaseKind::cos_chart1, Eigen::VectorXd::Zero(basis.size()));
  return DelayMap(std::move(rot), std::move(obs), k);
}

double cat_chi() { return std::log((3.0 + std::sqrt(5.0)) / 2.0); }

ManifoldPoint screened_point(const Diffeo& t, int p_max, std::uint64_t seed) {
  auto sampler = MeasureSampler::lebesgue(t.manifold, seed);
  sampler.set_periodic_screen(t, p_max, 1e-8);
  return sampler.sample(1)[0];
}

}  // namespace

TEST_CASE("direct exponents") {
  SECTION("rotation has a single exact zero") {
    Diffeo rot = make_rotation(0.6180339887);
    DirectExponents de = direct_exponents(rot, rot.manifold.point(0.2), 100);
    REQUIRE(de.exponents.size() == 1);
    CHECK(de.exponents[0] == 0.0);
  }

  SECTION("cat map recovers +-log((3+sqrt5)/2) to 1e-6 at n=1000") {
    Diffeo cat = make_cat_map();
    ManifoldPoint x = screened_point(cat, 2, 31);
    DirectExponents de = direct_exponents(cat, x, 1000);
    REQUIRE(de.exponents.size() == 2);
    CHECK(std::abs(de.exponents[0] + cat_chi()) < 1e-6);
    CHECK(std::abs(de.exponents[1] - cat_chi()) < 1e-6);

    // sum rule: volume preservation forces the exponents to cancel
    CHECK(std::abs(de.exponents[0] + de.exponents[1]) < 1e-8);

    // directions align with the analytic eigen-directions
    OseledetsData osel = cat_map_oseledets();
    for (int i = 0; i < 2; ++i) {
      Eigen::VectorXd got = de.directions.col(i);
      Eigen::VectorXd want = osel.blocks[i].chart_basis.col(0);
      double angle = std::acos(std::min(1.0, std::abs(got.dot(want)) / (got.norm() * want.norm())));
      CHECK(angle < 1e-6);
    }
  }

  SECTION("n below 10 is refused") {
    Diffeo rot = make_rotation(0.5);
    CHECK_THROWS_AS(direct_exponents(rot, rot.manifold.point(0.0), 5), ConfigError);
  }
}

TEST_CASE("observed cocycle operator") {
  DelayMap dm = seeded_cat_delay(3, 0);
  const Diffeo& cat = dm.dynamics;
  ManifoldPoint x = screened_point(cat, 2, 33);

  SECTION("n=0 is the identity on the embedded tangent space") {
    ObservedOperator op = observed_cocycle(dm, x, 0);
    CHECK((op.matrix - op.domain_basis).norm() < 1e-10);
  }

  SECTION("singular values respect the conditioning bounds of the conjugation") {
    // the observed operator is Dphi_y C_n Dphi_x^{-1}; its singular values can
    // differ from those of C_n only by the measured conditioning at both ends
    TangentFrame fx = tangent_frame(cat.manifold, x);
    Eigen::JacobiSVD<Eigen::MatrixXd> sx(delay_differential(dm, fx));
    double mx = std::max(sx.singularValues().maxCoeff(), 1.0 / sx.singularValues().minCoeff());
    for (int n : {1, 3, 7}) {
      ObservedOperator op = observed_cocycle(dm, x, n);
      Pushforward pf = pushforward(cat, fx, n);
      Eigen::JacobiSVD<Eigen::MatrixXd> sy(delay_differential(dm, pf.frame));
      double my = std::max(sy.singularValues().maxCoeff(), 1.0 / sy.singularValues().minCoeff());
      Eigen::JacobiSVD<Eigen::MatrixXd> sa(op.matrix);
      Eigen::JacobiSVD<Eigen::MatrixXd> sc(pf.matrix);
      double bound = mx * my * (1 + 1e-9);
      for (int i = 0; i < 2; ++i) {
        double ratio = sa.singularValues()[i] / sc.singularValues()[i];
        CHECK(ratio <= bound);
        CHECK(ratio >= 1.0 / bound);
      }
    }
  }

  SECTION("expanding growth rate appears at n=50") {
    OseledetsData osel = cat_map_oseledets();
    TangentFrame fx = tangent_frame(cat.manifold, x);
    Eigen::MatrixXd g = fx.basis.transpose() * cat.manifold.chart_jacobian(x.chart);
    Eigen::VectorXd w = g * osel.blocks[1].chart_basis.col(0);  // expanding, frame coords
    Eigen::MatrixXd dphi_x = delay_differential(dm, fx);
    Eigen::VectorXd v = dphi_x * w;  // push into the embedded tangent space
    int n = 50;
    ObservedOperator op = observed_cocycle(dm, x, n);
    Eigen::VectorXd image = op.matrix * (op.domain_basis.transpose() * v);
    double rate = std::log(image.norm() / v.norm()) / n;
    CHECK(std::abs(rate - cat_chi()) < 0.05);
  }

  SECTION("rank-deficient differential is refused") {
    Diffeo cat2 = make_cat_map();
    MonomialBasis basis(4, 5);
    Observable constant(basis, BaseKind::zero, Eigen::VectorXd::Zero(basis.size()));
    DelayMap flat(cat2, constant, 3);
    CHECK_THROWS_AS(observed_cocycle(flat, x, 1), RankDeficient);
  }
}

TEST_CASE("observed frequency statistics") {
  SECTION("rotation with the cosine observable is almost always good") {
    DelayMap dm = rotation_delay(3);
    ManifoldPoint x = dm.dynamics.manifold.point(0.1357);
    FrequencyReport rep = observed_frequency(dm, x, rotation_oseledets(), 1000, 0.1);
    CHECK(rep.dropped == 0);
    CHECK(rep.fraction >= 0.99);
  }

  SECTION("cat map with the seed-0 observable") {
    DelayMap dm = seeded_cat_delay(3, 0);
    ManifoldPoint x = screened_point(dm.dynamics, 2, 35);
    FrequencyReport rep = observed_frequency(dm, x, cat_map_oseledets(), 1000, 0.05);
    CHECK(rep.fraction >= 0.95);
    // deviation at the last step has fully averaged out
    CHECK(rep.deviations.back() < 0.02);

    // deviation bound from the proof: the observed and tangent-only
    // deviations differ by at most log(M_n)/n, with M_n measured at T^n x
    for (size_t i = 0; i < rep.deviations.size(); ++i) {
      if (std::isnan(rep.deviations[i])) continue;
      int n = static_cast<int>(i) + 1;
      for (size_t b = 0; b < rep.per_block.size(); ++b) {
        double gap = std::abs(rep.per_block[b][i] - rep.per_block_mid[b][i]);
        CHECK(gap <= rep.log_norm_bound[i] / n + 1e-10);
      }
    }
  }

  SECTION("single-step window with tiny tolerance is all bad") {
    DelayMap dm = seeded_cat_delay(3, 0);
    ManifoldPoint x = screened_point(dm.dynamics, 2, 37);
    FrequencyReport rep = observed_frequency(dm, x, cat_map_oseledets(), 1, 1e-12);
    CHECK(rep.total == 1);
    CHECK(rep.fraction == 0.0);
  }

  SECTION("frequency is monotone in the tolerance on the same run") {
    DelayMap dm = seeded_cat_delay(3, 1);
    ManifoldPoint x = screened_point(dm.dynamics, 2, 39);
    double prev = 0.0;
    for (double eps : {0.02, 0.05, 0.1, 0.2}) {
      FrequencyReport rep = observed_frequency(dm, x, cat_map_oseledets(), 300, eps);
      CHECK(rep.fraction >= prev);
      prev = rep.fraction;
    }
  }
}

TEST_CASE("E_M occupancy") {
  DelayMap dm = seeded_cat_delay(3, 0);
  ManifoldPoint x = screened_point(dm.dynamics, 2, 41);
  OrbitSegment seg = orbit(dm.dynamics, x, 2000);

  // measured norm range over the orbit
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& p : seg.points) {
    TangentFrame f = tangent_frame(dm.dynamics.manifold, p);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(delay_differential(dm, f));
    lo = std::min(lo, std::max(svd.singularValues().maxCoeff(),
                               1.0 / svd.singularValues().minCoeff()));
    hi = std::max(hi, std::max(svd.singularValues().maxCoeff(),
                               1.0 / svd.singularValues().minCoeff()));
  }

  OccupancyCurve curve = em_occupancy(dm, seg, {lo * 0.5, lo * 1.01, hi * 0.99, hi * 2.0});
  CHECK(curve.dropped == 0);
  CHECK(curve.occupancy.front() == 0.0);
  CHECK(curve.occupancy.back() == 1.0);
  for (size_t i = 0; i + 1 < curve.occupancy.size(); ++i) {
    CHECK(curve.occupancy[i] <= curve.occupancy[i + 1]);
  }
}
