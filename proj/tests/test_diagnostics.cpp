#include "oracles.hpp"

#include "pdmala/diagnostics.hpp"

#include <doctest.h>

using namespace pdmala;

TEST_CASE("acf") {
  Rng rng(1);
  const Index n = 100000;
  SUBCASE("constant column is an error") { CHECK_THROWS_AS(acf(Vector::Constant(50, 2.0), 5), Error); }
  SUBCASE("iid normals stay inside the Bartlett band") {
    const Vector x = rng.normal_vector(n);
    const auto r = acf(x, 20);
    REQUIRE(r.size() == 21);
    CHECK(r[0] == doctest::Approx(1.0));
    for (int k = 1; k <= 20; ++k) CHECK(std::abs(r[k]) < 4 / std::sqrt(double(n)));
  }
  SUBCASE("AR(1) 0.9 follows the geometric decay") {
    const Vector x = oracle::ar1(n, 0.9, rng);
    const auto r = acf(x, 10);
    for (int k = 1; k <= 10; ++k) CHECK(std::abs(r[k] - std::pow(0.9, k)) < 0.02);
  }
  SUBCASE("biased estimator on a hand example") {
    Vector x(4);
    x << 1, 2, 3, 4;
    // mean 2.5, deviations -1.5 -0.5 0.5 1.5, sum sq 5
    const auto r = acf(x, 2);
    CHECK(r[1] == doctest::Approx((0.75 - 0.25 + 0.75) / 5.0));
    CHECK(r[2] == doctest::Approx((-0.75 - 0.75) / 5.0));
  }
}

TEST_CASE("ess") {
  Rng rng(2);
  const Index n = 100000;
  CHECK(batch_size(n) == 316);
  SUBCASE("iid") { CHECK(std::abs(ess(rng.normal_vector(n)) / n - 1.0) < 0.15); }
  SUBCASE("AR(1) 0.9") { CHECK(std::abs(ess(oracle::ar1(n, 0.9, rng)) / (n / 19.0) - 1.0) < 0.25); }
  SUBCASE("each state repeated twice roughly halves ESS") {
    const Vector base = rng.normal_vector(n / 2);
    Vector doubled(n);
    for (Index i = 0; i < n / 2; ++i) doubled[2 * i] = doubled[2 * i + 1] = base[i];
    const double ratio = ess(doubled) / n;
    CHECK(ratio > 0.4);
    CHECK(ratio < 0.6);
  }
  SUBCASE("too short") { CHECK_THROWS_AS(ess(rng.normal_vector(50)), Error); }
}

TEST_CASE("mess") {
  Rng rng(3);
  const Index n = 100000;
  SUBCASE("iid p=2") {
    Matrix x(n, 2);
    x.col(0) = rng.normal_vector(n);
    x.col(1) = rng.normal_vector(n);
    const MessResult r = mess(x);
    CHECK(r.positive_definite);
    CHECK_FALSE(r.subsampled);
    CHECK(std::abs(r.value / n - 1.0) < 0.15);
  }
  SUBCASE("p=1 collapses to ess") {
    const Vector c = oracle::ar1(n, 0.5, rng);
    Matrix x(n, 1);
    x.col(0) = c;
    CHECK(mess(x).value == doctest::Approx(ess(c)).epsilon(1e-9));
  }
  SUBCASE("independent AR(1) pair") {
    Matrix x(n, 2);
    x.col(0) = oracle::ar1(n, 0.9, rng);
    x.col(1) = oracle::ar1(n, 0.9, rng);
    CHECK(std::abs(mess(x).value / (n / 19.0) - 1.0) < 0.25);
  }
  SUBCASE("more coordinates than batches is subsampled and flagged") {
    const Index m = 400, rows = 2500;  // 50 batches
    Matrix x(rows, m);
    for (Index j = 0; j < m; ++j) x.col(j) = rng.normal_vector(rows);
    const MessResult r = mess(x);
    CHECK(r.subsampled);
    CHECK(r.coordinates.size() == 49);
    CHECK(r.coordinates.front() == 0);
    for (std::size_t i = 1; i < r.coordinates.size(); ++i) {
      CHECK(r.coordinates[i] > r.coordinates[i - 1]);
      CHECK(r.coordinates[i] - r.coordinates[i - 1] >= m / 49 - 1);
    }
    CHECK(r.coordinates.back() < m);
    CHECK(std::isfinite(r.value));
  }
  SUBCASE("collinear coordinates are not positive definite") {
    Matrix x(10000, 2);
    x.col(0) = rng.normal_vector(10000);
    x.col(1) = 2 * x.col(0);
    const MessResult r = mess(x);
    CHECK_FALSE(r.positive_definite);
    CHECK(std::isnan(r.value));
  }
}

TEST_CASE("msjd") {
  Matrix t(3, 1);
  t << 0, 1, 3;
  CHECK(msjd(t) == 2.5);
  CHECK(msjd(Matrix::Constant(20, 3, 1.5)) == 0.0);
  Matrix two(3, 2);
  two << 0, 0, 1, 1, 1, 3;
  CHECK(msjd(two) == doctest::Approx((2 + 4) / 2.0));
}

TEST_CASE("mpsrf") {
  Rng rng(4);
  const Index n = 2000;
  Matrix base(n, 2);
  base.col(0) = rng.normal_vector(n);
  base.col(1) = rng.normal_vector(n);

  SUBCASE("identical chains give (n-1)/n") {
    const std::vector<Matrix> chains(4, base);
    const auto traj = mpsrf(chains, {100, 1000, n});
    REQUIRE(traj.points.size() == 3);
    for (const auto& p : traj.points) {
      CHECK_FALSE(p.flagged);
      CHECK(p.value == doctest::Approx((p.iteration - 1.0) / p.iteration).epsilon(1e-12));
    }
  }
  SUBCASE("independent iid chains are close to one") {
    std::vector<Matrix> chains;
    for (int c = 0; c < 4; ++c) {
      Matrix x(20000, 2);
      x.col(0) = rng.normal_vector(20000);
      x.col(1) = rng.normal_vector(20000);
      chains.push_back(x);
    }
    CHECK(std::abs(mpsrf(chains, {20000}).points[0].value - 1.0) < 0.05);
  }
  SUBCASE("separated chains are far above 1.1") {
    std::vector<Matrix> chains;
    for (double offset : {-10.0, 10.0, -10.0, 10.0}) {
      Matrix x = 0.01 * Matrix(base);
      x.array() += offset;
      chains.push_back(x);
    }
    CHECK(mpsrf(chains, {n}).points[0].value > 10.0);
  }
  SUBCASE("singular within-chain covariance is flagged") {
    Matrix flat = base;
    flat.col(1).setConstant(1.0);
    const auto traj = mpsrf(std::vector<Matrix>{flat, flat}, {n});
    CHECK(traj.points[0].flagged);
    CHECK(std::isnan(traj.points[0].value));
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(mpsrf(std::vector<Matrix>{base}, {n}), Error);
    CHECK_THROWS_AS(mpsrf(std::vector<Matrix>{base, base}, {n + 1}), Error);
  }
}

TEST_CASE("even checkpoints") {
  CHECK(even_checkpoints(1000, 4) == std::vector<Index>{250, 500, 750, 1000});
  const auto c = even_checkpoints(7, 100);
  CHECK(c.back() == 7);
  for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] > c[i - 1]);
}

TEST_CASE("diagnose assembles a report") {
  Rng rng(5);
  ChainTrace t;
  t.states.resize(5000, 3);
  for (Index j = 0; j < 3; ++j) t.states.col(j) = oracle::ar1(5000, 0.5, rng);
  t.states.col(2).setConstant(0.0);
  t.accepted.assign(4999, true);
  t.acceptance_rate = 1.0;
  t.wall_time = 30.0;

  DiagnosticsOptions opt;
  opt.max_lag = 5;
  opt.burn_in = 1000;
  opt.acf_coordinates = {0, 2};
  const DiagnosticsReport r = diagnose(t, opt);
  CHECK(r.iterations == 4000);
  REQUIRE(r.acf.size() == 2);
  CHECK(r.acf[0].size() == 6);
  CHECK(std::isnan(r.acf[1][0]));
  CHECK_FALSE(r.warnings.empty());
  REQUIRE(r.ess.size() == 3);
  CHECK(std::isnan(r.ess[2]));
  CHECK(r.ess[0] == doctest::Approx(ess(t.states.col(0).tail(4000))));
  CHECK(r.ess_per_minute[0] == doctest::Approx(r.ess[0] * 2.0));
  CHECK(r.msjd == doctest::Approx(msjd(t.states.bottomRows(4000))));

  const auto j = to_json(r);
  CHECK(j.contains("mess"));
  CHECK(j["iterations"] == 4000);

  opt.univariate_ess = false;
  CHECK_FALSE(diagnose(t, opt).has_ess);
  opt.burn_in = 5000;
  CHECK_THROWS_AS(diagnose(t, opt), Error);
}
