#pragma once

#include "pdmala/random.hpp"
#include "pdmala/types.hpp"

#include <string>
#include <vector>

namespace pdmala {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point& a, const Point& b);

/// Distinct locations in the unit square.
class SiteSet {
 public:
  SiteSet() = default;
  explicit SiteSet(std::vector<Point> points);

  /// m points drawn uniformly over [0,1]^2.
  static SiteSet uniform(std::size_t m, Rng& rng);
  /// side x side lattice with nodes at i/(side-1).
  static SiteSet lattice(std::size_t side);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<Point>& points() const { return points_; }

  /// Index of the site closest to p (first one on ties).
  std::size_t nearest(const Point& p) const;

 private:
  std::vector<Point> points_;
};

enum class CovarianceFamily { exponential, matern, spherical };

std::string to_string(CovarianceFamily family);
CovarianceFamily covariance_family_from_string(const std::string& name);

struct CovarianceModel {
  CovarianceFamily family = CovarianceFamily::exponential;
  double sill = 1.0;
  double range = 0.5;
  double smoothness = 1.5;  // Matern only

  void validate() const;
  /// Correlation at distance d (1 at d = 0).
  double correlation(double d) const;
  double covariance(double d) const { return sill * correlation(d); }
};

/// Dense symmetric positive definite matrix with its lower Cholesky factor.
class SpdMatrix {
 public:
  SpdMatrix() = default;
  /// Factorizes `entries`; throws on failure. No jitter is applied here.
  explicit SpdMatrix(Matrix entries);

  Index dimension() const { return entries_.rows(); }
  const Matrix& entries() const { return entries_; }
  const Matrix& lower() const { return lower_; }
  double log_determinant() const;
  Matrix inverse() const;
  Vector solve(const Vector& b) const;
  /// Diagonal jitter that was added to make the factorization succeed.
  double jitter() const { return jitter_; }

  /// Factorizes, escalating diagonal jitter from 1e-10*scale by factors of
  /// ten up to 1e-6*scale before giving up.
  static SpdMatrix with_jitter(Matrix entries, double scale);

 private:
  Matrix entries_;
  Matrix lower_;
  double jitter_ = 0.0;
};

SpdMatrix build_covariance(const SiteSet& sites, const CovarianceModel& model);

/// mean + L * eps with eps the next standard normals from the stream.
Vector sample_field(const Vector& mean, const SpdMatrix& cov, Rng& rng);

}  // namespace pdmala
