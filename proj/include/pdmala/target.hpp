#pragma once

#include "pdmala/covariance.hpp"
#include "pdmala/types.hpp"

namespace pdmala {

/// Local evaluation of log f at one point. `neg_hessian` and `third_diag`
/// are only filled when curvature was requested.
struct LocalGeometry {
  double value = 0.0;
  Vector gradient;
  Matrix neg_hessian;
  Vector third_diag;

  bool has_curvature() const { return neg_hessian.size() > 0; }
};

/// A differentiable, log-concave target density whose third derivative
/// tensor is diagonal. Every sampler in this library runs against one.
class Target {
 public:
  virtual ~Target() = default;

  virtual Index dimension() const = 0;
  virtual LocalGeometry evaluate(const Vector& x, bool with_curvature) const = 0;
  /// Covariance of the Gaussian prior (or of the target itself when it is
  /// Gaussian); used for the prior_cov preconditioner.
  virtual const SpdMatrix& prior_covariance() const = 0;
  /// argmax of log f.
  virtual Vector mode() const = 0;

  double log_density(const Vector& x) const { return evaluate(x, false).value; }
  Vector gradient(const Vector& x) const { return evaluate(x, false).gradient; }
};

/// N(mean, cov) up to its normalizing constant.
class GaussianTarget final : public Target {
 public:
  GaussianTarget(Vector mean, SpdMatrix cov);

  Index dimension() const override { return mean_.size(); }
  LocalGeometry evaluate(const Vector& x, bool with_curvature) const override;
  const SpdMatrix& prior_covariance() const override { return cov_; }
  Vector mode() const override { return mean_; }

 private:
  Vector mean_;
  SpdMatrix cov_;
  Matrix precision_;
};

}  // namespace pdmala
