#include "oracles.hpp"

#include "pdmala/glmm.hpp"

#include <doctest.h>

using namespace pdmala;

namespace {

GlmmSpec random_spec(GlmmFamily family, Index m, Rng& rng) {
  std::vector<int> z(m), trials;
  if (family == GlmmFamily::binomial_logit) trials.resize(m);
  for (Index i = 0; i < m; ++i) {
    if (family == GlmmFamily::binomial_logit) {
      trials[i] = 1 + static_cast<int>(rng.uniform() * 60);
      z[i] = static_cast<int>(rng.uniform() * (trials[i] + 1));
      z[i] = std::min(z[i], trials[i]);
    } else {
      z[i] = static_cast<int>(rng.uniform() * 12);
    }
  }
  Vector mean(m);
  for (Index i = 0; i < m; ++i) mean[i] = rng.normal();
  return GlmmSpec(family, z, trials, mean, SpdMatrix(oracle::random_spd(m, rng)));
}

// Per-site sum written out independently of GlmmSpec::evaluate.
double brute_log_target(GlmmFamily family, const std::vector<int>& z, const std::vector<int>& l,
                        const Vector& mean, const Matrix& cov, const Vector& x) {
  const Matrix prec = cov.inverse();
  double v = 0;
  for (Index i = 0; i < x.size(); ++i)
    for (Index j = 0; j < x.size(); ++j) v -= 0.5 * (x[i] - mean[i]) * prec(i, j) * (x[j] - mean[j]);
  for (Index i = 0; i < x.size(); ++i) {
    if (family == GlmmFamily::binomial_logit)
      v += z[i] * x[i] - l[i] * std::log(1 + std::exp(x[i]));
    else
      v += z[i] * x[i] - std::exp(x[i]);
  }
  return v;
}

Vector random_point(Index m, Rng& rng, double scale = 1.5) {
  Vector x(m);
  for (Index i = 0; i < m; ++i) x[i] = scale * rng.normal();
  return x;
}

Matrix info_inverse(const GlmmSpec& spec, const Vector& x) { return neg_hessian(spec, x).inverse(); }

}  // namespace

TEST_CASE("Poisson m=1 at x=0 with z=1 has log f = -1") {
  GlmmSpec spec(GlmmFamily::poisson_log, {1}, {}, Vector::Zero(1), SpdMatrix(Matrix::Identity(1, 1)));
  CHECK(log_target(spec, Vector::Zero(1)) == doctest::Approx(-1.0));
  CHECK(grad_log_target(spec, Vector::Zero(1)).norm() == 0.0);
  CHECK(third_diag(spec, Vector::Zero(1))[0] == -1.0);
}

TEST_CASE("binomial with z = l/2 at x = 0") {
  const int l = 40;
  const Index m = 3;
  GlmmSpec spec(GlmmFamily::binomial_logit, std::vector<int>(m, l / 2), std::vector<int>(m, l), Vector::Zero(m),
                SpdMatrix(Matrix::Identity(m, m)));
  const Vector zero = Vector::Zero(m);
  CHECK(log_target(spec, zero) == doctest::Approx(-m * l * std::log(2.0)));
  CHECK(grad_log_target(spec, zero).norm() == 0.0);
  CHECK(third_diag(spec, zero).norm() == 0.0);
  CHECK(gamma_vector(spec, zero).norm() == 0.0);
  CHECK(omega_vector(spec, zero).norm() == 0.0);
  CHECK(find_mode(spec).norm() < 1e-10);
}

TEST_CASE("log_target matches the per-site oracle") {
  Rng rng(101);
  for (auto family : {GlmmFamily::binomial_logit, GlmmFamily::poisson_log}) {
    const GlmmSpec spec = random_spec(family, 5, rng);
    for (int k = 0; k < 10; ++k) {
      const Vector x = random_point(5, rng);
      const double want = brute_log_target(family, spec.data(), spec.trials(), spec.prior_mean(),
                                           spec.prior_covariance().entries(), x);
      CHECK(oracle::rel_err(log_target(spec, x), want) < 1e-12);
    }
  }
}

TEST_CASE("derivatives match finite differences") {
  Rng rng(7);
  for (auto family : {GlmmFamily::binomial_logit, GlmmFamily::poisson_log}) {
    const GlmmSpec spec = random_spec(family, 8, rng);
    for (int k = 0; k < 10; ++k) {
      const Vector x = random_point(8, rng);
      auto f = [&](const Vector& y) { return log_target(spec, y); };
      CHECK(oracle::rel_err(grad_log_target(spec, x), oracle::central_gradient(f, x, 1e-5)) < 1e-6);

      const double eps = 1e-5;
      const Matrix h = neg_hessian(spec, x);
      Matrix fd(8, 8);
      for (Index j = 0; j < 8; ++j) {
        Vector p = x, m = x;
        p[j] += eps;
        m[j] -= eps;
        fd.col(j) = -(grad_log_target(spec, p) - grad_log_target(spec, m)) / (2 * eps);
      }
      CHECK((h - fd).norm() / h.norm() < 1e-5);
      CHECK((h - h.transpose()).norm() == 0.0);

      const Vector t = third_diag(spec, x);
      Vector fd3(8);
      for (Index j = 0; j < 8; ++j) {
        Vector p = x, m = x;
        p[j] += eps;
        m[j] -= eps;
        fd3[j] = -(neg_hessian(spec, p)(j, j) - neg_hessian(spec, m)(j, j)) / (2 * eps);
      }
      CHECK(oracle::rel_err(t, fd3) < 1e-5);
    }
  }
}

TEST_CASE("binomial curvature vanishes for large x, leaving the prior precision") {
  Rng rng(3);
  const GlmmSpec spec = random_spec(GlmmFamily::binomial_logit, 4, rng);
  const Matrix h = neg_hessian(spec, Vector::Constant(4, 60.0));
  CHECK((h - spec.prior_precision()).cwiseAbs().maxCoeff() < 1e-20);
}

TEST_CASE("gamma matches differences of the inverse information") {
  Rng rng(17);
  for (auto family : {GlmmFamily::binomial_logit, GlmmFamily::poisson_log}) {
    const GlmmSpec spec = random_spec(family, 5, rng);
    const Vector x = random_point(5, rng, 0.8);
    Vector fd = Vector::Zero(5);
    const double eps = 1e-5;
    for (Index j = 0; j < 5; ++j) {
      Vector p = x, m = x;
      p[j] += eps;
      m[j] -= eps;
      fd += (info_inverse(spec, p).col(j) - info_inverse(spec, m).col(j)) / (2 * eps);
    }
    CHECK(oracle::rel_err(gamma_vector(spec, x), fd) < 1e-4);

    auto logdet = [&](const Vector& y) { return std::log(neg_hessian(spec, y).determinant()); };
    const Vector grad_ld = oracle::central_gradient(logdet, x, eps);
    const Vector want = fd + 0.5 * info_inverse(spec, x) * grad_ld;
    CHECK(oracle::rel_err(omega_vector(spec, x), want) < 1e-4);
    const Vector analytic = grad_log_det_info(info_inverse(spec, x), third_diag(spec, x));
    CHECK(oracle::rel_err(analytic, grad_ld) < 1e-5);
  }
}

TEST_CASE("scalar Poisson omega at x = 0") {
  // I = 1 + e^x = 2, d(1/I)/dx = -1/4, d log I / dx = 1/2.
  GlmmSpec spec(GlmmFamily::poisson_log, {0}, {}, Vector::Zero(1), SpdMatrix(Matrix::Identity(1, 1)));
  CHECK(gamma_vector(spec, Vector::Zero(1))[0] == doctest::Approx(-0.25));
  CHECK(omega_vector(spec, Vector::Zero(1))[0] == doctest::Approx(-0.25 + 0.5 * 0.5 * 0.5));
}

TEST_CASE("simulate_data Monte Carlo means") {
  Rng rng(2024);
  const int reps = 10000;
  SUBCASE("binomial far negative gives zero counts") {
    double total = 0;
    for (int r = 0; r < reps; ++r) total += simulate_data(GlmmFamily::binomial_logit, {50}, Vector::Constant(1, -50.0), rng)[0];
    CHECK(total / reps < 1e-3);
  }
  SUBCASE("binomial at zero centres on l/2") {
    double s = 0, s2 = 0;
    for (int r = 0; r < reps; ++r) {
      const double v = simulate_data(GlmmFamily::binomial_logit, {50}, Vector::Zero(1), rng)[0];
      s += v;
      s2 += v * v;
    }
    const double mean = s / reps, se = std::sqrt((s2 / reps - mean * mean) / reps);
    CHECK(std::abs(mean - 25.0) < 5 * se);
  }
  SUBCASE("Poisson at zero has mean one") {
    double s = 0, s2 = 0;
    for (int r = 0; r < reps; ++r) {
      const double v = simulate_data(GlmmFamily::poisson_log, {}, Vector::Zero(1), rng)[0];
      s += v;
      s2 += v * v;
    }
    const double mean = s / reps, se = std::sqrt((s2 / reps - mean * mean) / reps);
    CHECK(std::abs(mean - 1.0) < 5 * se);
  }
  CHECK_THROWS_AS(simulate_data(GlmmFamily::poisson_log, {}, Vector::Constant(1, 800.0), rng), Error);
}

TEST_CASE("find_mode") {
  SUBCASE("weak prior Poisson mode is log z") {
    GlmmSpec spec(GlmmFamily::poisson_log, {5}, {}, Vector::Zero(1), SpdMatrix(Matrix::Constant(1, 1, 1e6)));
    CHECK(std::abs(find_mode(spec)[0] - std::log(5.0)) < 1e-3);
  }
  SUBCASE("random specs reach a stationary point with PD curvature") {
    Rng rng(55);
    for (auto family : {GlmmFamily::binomial_logit, GlmmFamily::poisson_log}) {
      const GlmmSpec spec = random_spec(family, 10, rng);
      const Vector mode = find_mode(spec);
      double zmax = 1;
      for (int v : spec.data()) zmax = std::max(zmax, double(v));
      CHECK(grad_log_target(spec, mode).norm() < 1e-8 * zmax);
      Eigen::LLT<Matrix> llt(neg_hessian(spec, mode));
      CHECK(llt.info() == Eigen::Success);
    }
  }
}

TEST_CASE("GlmmSpec validates its inputs") {
  const SpdMatrix eye(Matrix::Identity(2, 2));
  CHECK_THROWS_AS(GlmmSpec(GlmmFamily::binomial_logit, {1, 2}, {1, 1}, Vector::Zero(2), eye), Error);
  CHECK_THROWS_AS(GlmmSpec(GlmmFamily::binomial_logit, {1}, {1}, Vector::Zero(2), eye), Error);
  CHECK_THROWS_AS(GlmmSpec(GlmmFamily::poisson_log, {-1, 0}, {}, Vector::Zero(2), eye), Error);
  GlmmSpec ok(GlmmFamily::poisson_log, {1, 0}, {}, Vector::Zero(2), eye);
  CHECK_THROWS_AS(log_target(ok, Vector::Zero(3)), Error);
  Vector nan = Vector::Zero(2);
  nan[0] = std::nan("");
  CHECK_THROWS_AS(log_target(ok, nan), Error);
}

TEST_CASE("logistic helpers are stable at the extremes") {
  CHECK(logistic(-800) == 0.0);
  CHECK(logistic(800) == 1.0);
  CHECK(log1p_exp(800) == doctest::Approx(800));
  CHECK(log1p_exp(-800) == 0.0);
  CHECK(log1p_exp(0) == doctest::Approx(std::log(2.0)));
}
