#pragma once

#include "pdmala/covariance.hpp"
#include "pdmala/random.hpp"
#include "pdmala/target.hpp"

#include <string>
#include <vector>

namespace pdmala {

enum class GlmmFamily { binomial_logit, poisson_log };

std::string to_string(GlmmFamily family);
GlmmFamily glmm_family_from_string(const std::string& name);

/// Conditional density of the latent field x given counts z, with a
/// Gaussian prior N(prior_mean, prior_cov). Binomial data carry per-site
/// trial counts; Poisson data ignore them.
///
/// All terms of log f that do not depend on x (binomial coefficients,
/// log z!, the Gaussian normalizer) are dropped.
class GlmmSpec final : public Target {
 public:
  GlmmSpec(GlmmFamily family, std::vector<int> z, std::vector<int> trials,
           Vector prior_mean, SpdMatrix prior_cov);

  GlmmFamily family() const { return family_; }
  const std::vector<int>& data() const { return z_; }
  const std::vector<int>& trials() const { return trials_; }
  const Vector& prior_mean() const { return prior_mean_; }
  const Matrix& prior_precision() const { return prior_precision_; }

  Index dimension() const override { return prior_mean_.size(); }
  LocalGeometry evaluate(const Vector& x, bool with_curvature) const override;
  const SpdMatrix& prior_covariance() const override { return prior_cov_; }
  Vector mode() const override;

  /// Diagonal of neg_hessian - prior_precision: l*s(1-s) or exp(x).
  Vector likelihood_curvature(const Vector& x) const;

 private:
  GlmmFamily family_;
  std::vector<int> z_;
  std::vector<int> trials_;
  Vector z_vec_;
  Vector trials_vec_;
  Vector prior_mean_;
  SpdMatrix prior_cov_;
  Matrix prior_precision_;
};

/// Numerically stable logistic function and log(1 + e^x).
double logistic(double x);
double log1p_exp(double x);

double log_target(const GlmmSpec& spec, const Vector& x);
Vector grad_log_target(const GlmmSpec& spec, const Vector& x);
Matrix neg_hessian(const GlmmSpec& spec, const Vector& x);
Vector third_diag(const GlmmSpec& spec, const Vector& x);

// Correction vectors for a metric G(x) = I(x)^{-1} when the third derivative
// of log f is diagonal. `info_inverse` is I(x)^{-1}; `third` is the diagonal
// of grad^3 log f, so dI_jj/dx_j = -third_j.

/// Gamma_i = sum_j d[I^{-1}]_ij / dx_j.
Vector gamma_vector(const Matrix& info_inverse, const Vector& third);
/// Omega = Gamma + 0.5 I^{-1} grad log|I|.
Vector omega_vector(const Matrix& info_inverse, const Vector& third);
/// grad log|I(x)|, component j = [I^{-1}]_jj * (-third_j).
Vector grad_log_det_info(const Matrix& info_inverse, const Vector& third);

Vector gamma_vector(const GlmmSpec& spec, const Vector& x);
Vector omega_vector(const GlmmSpec& spec, const Vector& x);

/// Draws z ~ Binomial(l_i, logistic(x_i)) or Poisson(exp(x_i)).
std::vector<int> simulate_data(GlmmFamily family, const std::vector<int>& trials,
                               const Vector& x_true, Rng& rng);

/// Largest x_i accepted by the Poisson simulator.
inline constexpr double kPoissonLogRateLimit = 700.0;

struct ModeOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;  // on |grad|, scaled by max(1, |z|)
};

/// Damped Newton with Armijo step halving on log f.
Vector find_mode(const GlmmSpec& spec, const ModeOptions& options = {});

}  // namespace pdmala
