#include "pdmala/covariance.hpp"

#include <cmath>
#include <limits>

namespace pdmala {

void require_finite(const Vector& x, const char* what) {
  if (!x.allFinite()) {
    throw invalid_argument(std::string(what) + " has non-finite components");
  }
}

double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

SiteSet::SiteSet(std::vector<Point> points) : points_(std::move(points)) {
  for (const Point& p : points_) {
    if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0)) {
      throw invalid_argument("site outside the unit square");
    }
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (distance(points_[i], points_[j]) <= 0.0) {
        throw invalid_argument("duplicate site at index " + std::to_string(i));
      }
    }
  }
}

SiteSet SiteSet::uniform(std::size_t m, Rng& rng) {
  std::vector<Point> points(m);
  for (Point& p : points) {
    p.x = rng.uniform();
    p.y = rng.uniform();
  }
  return SiteSet(std::move(points));
}

SiteSet SiteSet::lattice(std::size_t side) {
  if (side < 2) throw invalid_argument("lattice side must be at least 2");
  std::vector<Point> points;
  points.reserve(side * side);
  const double step = 1.0 / static_cast<double>(side - 1);
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) {
      points.push_back({static_cast<double>(j) * step, static_cast<double>(i) * step});
    }
  }
  return SiteSet(std::move(points));
}

std::size_t SiteSet::nearest(const Point& p) const {
  if (points_.empty()) throw invalid_argument("nearest() on an empty site set");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const double d = distance(points_[i], p);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

std::string to_string(CovarianceFamily family) {
  switch (family) {
    case CovarianceFamily::exponential: return "exponential";
    case CovarianceFamily::matern: return "matern";
    case CovarianceFamily::spherical: return "spherical";
  }
  return "unknown";
}

CovarianceFamily covariance_family_from_string(const std::string& name) {
  if (name == "exponential") return CovarianceFamily::exponential;
  if (name == "matern") return CovarianceFamily::matern;
  if (name == "spherical") return CovarianceFamily::spherical;
  throw invalid_argument("unknown covariance family '" + name + "'");
}

void CovarianceModel::validate() const {
  if (!(sill > 0.0)) throw invalid_argument("covariance sill must be positive");
  if (!(range > 0.0)) throw invalid_argument("covariance range must be positive");
  if (family == CovarianceFamily::matern && !(smoothness > 0.0)) {
    throw invalid_argument("Matern smoothness must be positive");
  }
}

// Matern in the (d/range)^nu K_nu(d/range) parameterization, so nu = 1/2 is
// the exponential family with the same range.
static double matern_correlation(double u, double nu) {
  if (u == 0.0) return 1.0;
  if (nu == 0.5) return std::exp(-u);
  if (nu == 1.5) return (1.0 + u) * std::exp(-u);
  if (nu == 2.5) return (1.0 + u + u * u / 3.0) * std::exp(-u);
  // K_nu underflows long before the product loses meaning.
  if (u > 700.0) return 0.0;
  const double log_scale = (1.0 - nu) * std::log(2.0) - std::lgamma(nu) + nu * std::log(u);
  return std::exp(log_scale) * std::cyl_bessel_k(nu, u);
}

double CovarianceModel::correlation(double d) const {
  if (d < 0.0) throw invalid_argument("negative distance");
  const double u = d / range;
  switch (family) {
    case CovarianceFamily::exponential:
      return std::exp(-u);
    case CovarianceFamily::matern:
      return matern_correlation(u, smoothness);
    case CovarianceFamily::spherical:
      return u >= 1.0 ? 0.0 : 1.0 - 1.5 * u + 0.5 * u * u * u;
  }
  return 0.0;
}

SpdMatrix::SpdMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
    throw invalid_argument("SpdMatrix requires a nonempty square matrix");
  }
  const double scale = entries_.cwiseAbs().maxCoeff();
  if ((entries_ - entries_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw invalid_argument("SpdMatrix requires a symmetric matrix");
  }
  Eigen::LLT<Matrix> llt(entries_);
  if (llt.info() == Eigen::Success) lower_ = llt.matrixL();
  if (llt.info() != Eigen::Success || !(lower_.diagonal().array() > 0.0).all() ||
      !lower_.allFinite()) {
    throw numerical_error("Cholesky factorization failed: matrix is not positive definite");
  }
}

SpdMatrix SpdMatrix::with_jitter(Matrix entries, double scale) {
  try {
    return SpdMatrix(entries);
  } catch (const Error&) {
  }
  for (double eps = 1e-10; eps <= 1e-6 * (1.0 + 1e-9); eps *= 10.0) {
    Matrix jittered = entries;
    jittered.diagonal().array() += eps * scale;
    try {
      SpdMatrix out(std::move(jittered));
      out.jitter_ = eps * scale;
      return out;
    } catch (const Error&) {
    }
  }
  throw numerical_error(
      "covariance matrix not positive definite even with 1e-6 relative jitter; "
      "site layout is numerically degenerate");
}

double SpdMatrix::log_determinant() const {
  return 2.0 * lower_.diagonal().array().log().sum();
}

Vector SpdMatrix::solve(const Vector& b) const {
  if (b.size() != dimension()) throw invalid_argument("SpdMatrix::solve dimension mismatch");
  Vector y = lower_.triangularView<Eigen::Lower>().solve(b);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix SpdMatrix::inverse() const {
  const Matrix id = Matrix::Identity(dimension(), dimension());
  Matrix y = lower_.triangularView<Eigen::Lower>().solve(id);
  Matrix inv = lower_.transpose().triangularView<Eigen::Upper>().solve(y);
  return 0.5 * (inv + inv.transpose());
}

SpdMatrix build_covariance(const SiteSet& sites, const CovarianceModel& model) {
  if (sites.empty()) throw invalid_argument("build_covariance: empty site set");
  model.validate();
  const auto m = static_cast<Index>(sites.size());
  Matrix cov(m, m);
  for (Index i = 0; i < m; ++i) {
    cov(i, i) = model.sill;
    for (Index j = 0; j < i; ++j) {
      const double c = model.covariance(distance(sites[i], sites[j]));
      cov(i, j) = c;
      cov(j, i) = c;
    }
  }
  return SpdMatrix::with_jitter(std::move(cov), model.sill);
}

Vector sample_field(const Vector& mean, const SpdMatrix& cov, Rng& rng) {
  if (mean.size() != cov.dimension()) {
    throw invalid_argument("sample_field: mean length does not match covariance dimension");
  }
  const Vector eps = rng.normal_vector(mean.size());
  return mean + cov.lower().triangularView<Eigen::Lower>() * eps;
}

}  // namespace pdmala
