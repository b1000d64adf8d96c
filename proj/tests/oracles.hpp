#pragma once

// Small independent oracles shared by the unit tests.

#include "pdmala/covariance.hpp"
#include "pdmala/random.hpp"
#include "pdmala/types.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using pdmala::Index;
using pdmala::Matrix;
using pdmala::Vector;

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double rel_err(const Vector& a, const Vector& b, double floor = 1e-8) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

inline Vector central_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double eps) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector p = x, m = x;
    p[i] += eps;
    m[i] -= eps;
    g[i] = (f(p) - f(m)) / (2 * eps);
  }
  return g;
}

inline Matrix random_spd(Index d, pdmala::Rng& rng, double ridge = 0.5) {
  Matrix a(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = rng.normal();
  return a * a.transpose() / static_cast<double>(d) + ridge * Matrix::Identity(d, d);
}

inline Matrix random_orthogonal(Index d, pdmala::Rng& rng) {
  Matrix a(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ();
}

// Gaussian AR(1) series x_t = phi x_{t-1} + sqrt(1 - phi^2) e_t started at stationarity.
inline Vector ar1(Index n, double phi, pdmala::Rng& rng) {
  Vector x(n);
  x[0] = rng.normal();
  const double s = std::sqrt(1 - phi * phi);
  for (Index t = 1; t < n; ++t) x[t] = phi * x[t - 1] + s * rng.normal();
  return x;
}

// Batch-means standard error of the mean of a series (batch size sqrt(n)).
inline double batch_se(const Vector& x) {
  const Index n = x.size();
  const Index b = static_cast<Index>(std::sqrt(static_cast<double>(n)));
  const Index a = n / b;
  const double mean = x.head(a * b).mean();
  double s = 0;
  for (Index k = 0; k < a; ++k) {
    const double mk = x.segment(k * b, b).mean();
    s += (mk - mean) * (mk - mean);
  }
  const double sigma2 = b * s / (a - 1);
  return std::sqrt(sigma2 / static_cast<double>(a * b));
}

}  // namespace oracle
