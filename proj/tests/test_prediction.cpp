#include <catch2/catch_amalgamated.hpp>

#include "takens/prediction.hpp"

using namespace takens;

namespace {

constexpr double kGolden = 0.6180339887;

EmbedMap ambient_embed(int ambient_dim) {
  EmbedMap em;
  em.dim = ambient_dim;
  em.eval = [](const ManifoldPoint& x) { return x.ambient; };
  em.differential = [](const TangentFrame& f) { return f.basis; };
  return em;
}

EmbedMap first_coordinate_embed() {
  EmbedMap em;
  em.dim = 1;
  em.eval = [](const ManifoldPoint& x) { return x.ambient.head(1).eval(); };
  em.differential = [](const TangentFrame& f) { return f.basis.row(0).eval(); };
  return em;
}

DelayMap seeded_cat_delay(int k, std::uint64_t seed) {
  Diffeo cat = make_cat_map();
  MonomialBasis basis(4, 2 * k - 1);
  Observable obs(basis, BaseKind::cos_chart1, draw_alpha(basis, 1.0, seed));
  return DelayMap(std::move(cat), std::move(obs), k);
}

Observable constant_observable(int ambient_dim, double c) {
  MonomialBasis basis(ambient_dim, 1);
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(basis.size());
  alpha[basis.index_of(Eigen::VectorXi::Zero(ambient_dim))] = c;
  return Observable::with_zero_base(basis, alpha);
}

}  // namespace

TEST_CASE("delay datasets share observable values exactly") {
  DelayMap dm = seeded_cat_delay(3, 0);
  auto sampler = MeasureSampler::lebesgue(dm.dynamics.manifold, 3);
  auto ds = PredictionDataset::from_delay(dm, sampler.sample(200));
  for (int i = 0; i < ds.size(); ++i) {
    for (int j = 0; j + 1 < ds.dim(); ++j) {
      CHECK(ds.images()[i][j] == ds.embedded()[i][j + 1]);
    }
    // and the images really are the delay coordinates of Tx
    Eigen::VectorXd direct = delay_eval(dm, dm.dynamics.step(ds.points()[i]));
    CHECK((ds.images()[i] - direct).norm() < 1e-12);
  }
}

TEST_CASE("ball averages") {
  DelayMap dm = seeded_cat_delay(3, 1);
  auto sampler = MeasureSampler::lebesgue(dm.dynamics.manifold, 5);
  auto ds = PredictionDataset::from_delay(dm, sampler.sample(1000));

  SECTION("matches a linear scan oracle") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::VectorXd& y = ds.embedded()[rng.uniform_int(ds.size())];
      double eps = rng.uniform(0.05, 0.5);
      // oracle
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(ds.dim());
      int count = 0;
      double sq = 0.0;
      for (int i = 0; i < ds.size(); ++i) {
        if ((ds.embedded()[i] - y).norm() < eps) {
          mean += ds.images()[i];
          ++count;
        }
      }
      if (count == 0) continue;
      mean /= count;
      for (int i = 0; i < ds.size(); ++i) {
        if ((ds.embedded()[i] - y).norm() < eps) sq += (ds.images()[i] - mean).squaredNorm();
      }
      double sig_oracle = std::sqrt(sq / count);
      CHECK((chi(ds, y, eps) - mean).norm() < 1e-12);
      CHECK(sigma(ds, y, eps) == Catch::Approx(sig_oracle).margin(1e-12));
    }
  }

  SECTION("singleton and global balls") {
    // isolate one point
    const Eigen::VectorXd& y = ds.embedded()[11];
    auto nn = ds.index().knn_distances(y, 2);
    double isolation = nn[1];
    CHECK((chi(ds, y, isolation * 0.99) - ds.images()[11]).norm() == 0.0);
    CHECK(sigma(ds, y, isolation * 0.99) == 0.0);
    // everything
    Eigen::VectorXd global_mean = Eigen::VectorXd::Zero(ds.dim());
    for (const auto& im : ds.images()) global_mean += im;
    global_mean /= ds.size();
    CHECK((chi(ds, y, 1e6) - global_mean).norm() < 1e-12);
  }

  SECTION("empty ball throws") {
    Eigen::VectorXd far = Eigen::VectorXd::Constant(ds.dim(), 100.0);
    CHECK_THROWS_AS(chi(ds, far, 0.5), EmptyBall);
    CHECK_THROWS_AS(sigma(ds, far, 0.5), EmptyBall);
  }

  SECTION("constant observable gives zero spread") {
    Diffeo cat = make_cat_map();
    DelayMap dmc(cat, constant_observable(4, 2.0), 3);
    auto s2 = MeasureSampler::lebesgue(cat.manifold, 9);
    auto dsc = PredictionDataset::from_delay(dmc, s2.sample(100));
    CHECK(sigma(dsc, dsc.embedded()[0], 1.0) == 0.0);
  }
}

TEST_CASE("variance identities") {
  DelayMap dm = seeded_cat_delay(3, 2);
  auto sampler = MeasureSampler::lebesgue(dm.dynamics.manifold, 11);
  auto ds = PredictionDataset::from_delay(dm, sampler.sample(500));
  Rng rng(13);

  SECTION("parallel axis decomposition") {
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::VectorXd& y = ds.embedded()[rng.uniform_int(ds.size())];
      double eps = rng.uniform(0.1, 0.6);
      auto idx = ds.ball(y, eps);
      if (idx.empty()) continue;
      double mean_sq = 0.0;
      for (int i : idx) mean_sq += ds.images()[i].squaredNorm();
      mean_sq /= idx.size();
      double s = sigma(ds, y, eps);
      double c = chi(ds, y, eps).squaredNorm();
      CHECK(s * s + c == Catch::Approx(mean_sq).margin(1e-10));
    }
  }

  SECTION("sigma is translation invariant in the images") {
    Eigen::VectorXd shift = Eigen::VectorXd::Constant(ds.dim(), 3.7);
    std::vector<Eigen::VectorXd> shifted = ds.images();
    for (auto& im : shifted) im += shift;
    auto ds2 = PredictionDataset::from_parts(make_cat_map(), ds.points(),
                                             ds.embedded(), std::move(shifted));
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::VectorXd& y = ds.embedded()[rng.uniform_int(ds.size())];
      double eps = rng.uniform(0.1, 0.6);
      auto idx = ds.ball(y, eps);
      if (idx.empty()) continue;
      CHECK(sigma(ds, y, eps) == Catch::Approx(sigma(ds2, y, eps)).margin(1e-12));
    }
  }
}

TEST_CASE("nearest neighbour prediction") {
  DelayMap dm = seeded_cat_delay(3, 3);
  auto sampler = MeasureSampler::lebesgue(dm.dynamics.manifold, 15);
  auto ds = PredictionDataset::from_delay(dm, sampler.sample(20000));

  SECTION("exact query returns the stored image") {
    CHECK((predict(ds, ds.embedded()[123]) - ds.images()[123]).norm() == 0.0);
  }

  SECTION("exact collisions resolve to the lowest index") {
    Manifold circle = make_circle();
    std::vector<ManifoldPoint> pts = {circle.point(0.1), circle.point(0.2), circle.point(0.3)};
    std::vector<Eigen::VectorXd> emb(3, Eigen::VectorXd::Zero(1));  // all identical
    emb[2][0] = 5.0;
    std::vector<Eigen::VectorXd> ims(3, Eigen::VectorXd::Zero(1));
    ims[0][0] = 1.0;
    ims[1][0] = 2.0;
    ims[2][0] = 3.0;
    auto tie_ds = PredictionDataset::from_parts(make_rotation(kGolden), pts, emb, ims);
    Eigen::VectorXd q = Eigen::VectorXd::Zero(1);
    CHECK(predict(tie_ds, q)[0] == 1.0);
  }

  SECTION("held-out queries stay within the local scale") {
    auto test_sampler = MeasureSampler::lebesgue(dm.dynamics.manifold, 16);
    auto held_out = test_sampler.sample(500);
    std::vector<double> pred_err;
    std::vector<double> nn_dist;
    for (const auto& x : held_out) {
      Eigen::VectorXd y = delay_eval(dm, x);
      Eigen::VectorXd truth = delay_eval(dm, dm.dynamics.step(x));
      pred_err.push_back((predict(ds, y) - truth).norm());
      nn_dist.push_back(ds.index().knn_distances(y, 1)[0]);
    }
    std::nth_element(pred_err.begin(), pred_err.begin() + pred_err.size() / 2, pred_err.end());
    std::nth_element(nn_dist.begin(), nn_dist.begin() + nn_dist.size() / 2, nn_dist.end());
    CHECK(pred_err[pred_err.size() / 2] < 10.0 * nn_dist[nn_dist.size() / 2]);
  }
}

TEST_CASE("error curves") {
  SECTION("isometric regime: rotation seen through the ambient identity") {
    Diffeo rot = make_rotation(kGolden);
    auto sampler = MeasureSampler::lebesgue(rot.manifold, 17);
    auto ds = PredictionDataset::from_embed(rot, ambient_embed(2), sampler.sample(4000));
    Rng rng = Rng::stream(17, "probes");
    auto grid = log_spaced(0.01, 0.1, 6);
    ErrorCurve curve = error_curve(ds, 32, grid, rng);
    // the rotation is an ambient isometry: sigma <= eps cell-by-cell
    for (const auto& cell : curve.cells) {
      if (!cell.dropped) CHECK(cell.sigma_value <= cell.eps * (1 + 1e-9));
    }
    CHECK(curve.slope >= 0.9);
    CHECK(curve.fitted_cells >= 4);
  }

  SECTION("broken one-dimensional embedding keeps sigma bounded away from zero") {
    Diffeo rot = make_rotation(kGolden);
    auto sampler = MeasureSampler::lebesgue(rot.manifold, 19);
    auto ds = PredictionDataset::from_embed(rot, first_coordinate_embed(), sampler.sample(10000));
    // mirror probe: u and 1-u share the first coordinate but their futures differ
    double lo = ds.embedded()[0][0], hi = lo;
    for (const auto& a : ds.embedded()) {
      lo = std::min(lo, a[0]);
      hi = std::max(hi, a[0]);
    }
    double diam = hi - lo;
    Eigen::VectorXd probe(1);
    probe << std::cos(kTwoPi * 0.25) / kTwoPi;  // collapses u=0.25 and u=0.75
    double s = sigma(ds, probe, 5e-3);
    CHECK(s > 0.1 * diam);
  }
}
