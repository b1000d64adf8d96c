#include "pdmala/glmm.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace pdmala {

GaussianTarget::GaussianTarget(Vector mean, SpdMatrix cov)
    : mean_(std::move(mean)), cov_(std::move(cov)), precision_(cov_.inverse()) {
  if (mean_.size() != cov_.dimension()) {
    throw invalid_argument("GaussianTarget: mean and covariance dimensions differ");
  }
}

LocalGeometry GaussianTarget::evaluate(const Vector& x, bool with_curvature) const {
  if (x.size() != dimension()) throw invalid_argument("GaussianTarget: dimension mismatch");
  require_finite(x, "state");
  LocalGeometry g;
  const Vector r = x - mean_;
  g.gradient = -(precision_ * r);
  g.value = 0.5 * r.dot(g.gradient);
  if (with_curvature) {
    g.neg_hessian = precision_;
    g.third_diag = Vector::Zero(dimension());
  }
  return g;
}

std::string to_string(GlmmFamily family) {
  return family == GlmmFamily::binomial_logit ? "binomial" : "poisson";
}

GlmmFamily glmm_family_from_string(const std::string& name) {
  if (name == "binomial" || name == "binomial_logit") return GlmmFamily::binomial_logit;
  if (name == "poisson" || name == "poisson_log") return GlmmFamily::poisson_log;
  throw invalid_argument("unknown GLMM family '" + name + "'");
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log1p_exp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

GlmmSpec::GlmmSpec(GlmmFamily family, std::vector<int> z, std::vector<int> trials,
                   Vector prior_mean, SpdMatrix prior_cov)
    : family_(family),
      z_(std::move(z)),
      trials_(std::move(trials)),
      prior_mean_(std::move(prior_mean)),
      prior_cov_(std::move(prior_cov)) {
  const auto m = static_cast<std::size_t>(prior_mean_.size());
  if (m == 0) throw invalid_argument("GlmmSpec: empty model");
  if (z_.size() != m) throw invalid_argument("GlmmSpec: data length differs from prior mean");
  if (static_cast<std::size_t>(prior_cov_.dimension()) != m) {
    throw invalid_argument("GlmmSpec: prior covariance dimension differs from data length");
  }
  require_finite(prior_mean_, "prior mean");
  if (family_ == GlmmFamily::binomial_logit) {
    if (trials_.size() != m) throw invalid_argument("GlmmSpec: trials length differs from data");
    for (std::size_t i = 0; i < m; ++i) {
      if (trials_[i] < 1) throw invalid_argument("GlmmSpec: trials must be positive");
      if (z_[i] < 0 || z_[i] > trials_[i]) {
        throw invalid_argument("GlmmSpec: binomial count outside [0, trials] at site " +
                               std::to_string(i));
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      if (z_[i] < 0) throw invalid_argument("GlmmSpec: negative Poisson count");
    }
  }
  z_vec_.resize(static_cast<Index>(m));
  trials_vec_ = Vector::Zero(static_cast<Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    z_vec_[static_cast<Index>(i)] = z_[i];
    if (!trials_.empty()) trials_vec_[static_cast<Index>(i)] = trials_[i];
  }
  prior_precision_ = prior_cov_.inverse();
}

Vector GlmmSpec::likelihood_curvature(const Vector& x) const {
  Vector d(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    if (family_ == GlmmFamily::binomial_logit) {
      const double s = logistic(x[i]);
      d[i] = trials_vec_[i] * s * (1.0 - s);
    } else {
      d[i] = std::exp(x[i]);
    }
  }
  return d;
}

LocalGeometry GlmmSpec::evaluate(const Vector& x, bool with_curvature) const {
  if (x.size() != dimension()) throw invalid_argument("GlmmSpec: state dimension mismatch");
  require_finite(x, "state");
  const Index m = dimension();
  LocalGeometry g;
  const Vector r = x - prior_mean_;
  const Vector pr = prior_precision_ * r;
  g.value = -0.5 * r.dot(pr);
  g.gradient = z_vec_ - pr;
  if (with_curvature) {
    g.neg_hessian = prior_precision_;
    g.third_diag.resize(m);
  }
  for (Index i = 0; i < m; ++i) {
    const double xi = x[i];
    if (family_ == GlmmFamily::binomial_logit) {
      const double l = trials_vec_[i];
      const double s = logistic(xi);
      g.value += z_vec_[i] * xi - l * log1p_exp(xi);
      g.gradient[i] -= l * s;
      if (with_curvature) {
        const double w = s * (1.0 - s);
        g.neg_hessian(i, i) += l * w;
        g.third_diag[i] = -l * w * (1.0 - 2.0 * s);
      }
    } else {
      const double e = std::exp(xi);
      g.value += z_vec_[i] * xi - e;
      g.gradient[i] -= e;
      if (with_curvature) {
        g.neg_hessian(i, i) += e;
        g.third_diag[i] = -e;
      }
    }
  }
  return g;
}

Vector GlmmSpec::mode() const { return find_mode(*this); }

double log_target(const GlmmSpec& spec, const Vector& x) {
  return spec.evaluate(x, false).value;
}

Vector grad_log_target(const GlmmSpec& spec, const Vector& x) {
  return spec.evaluate(x, false).gradient;
}

Matrix neg_hessian(const GlmmSpec& spec, const Vector& x) {
  return spec.evaluate(x, true).neg_hessian;
}

Vector third_diag(const GlmmSpec& spec, const Vector& x) {
  return spec.evaluate(x, true).third_diag;
}

Vector gamma_vector(const Matrix& info_inverse, const Vector& third) {
  // -sum_j Iinv_ij * (dI_jj/dx_j) * Iinv_jj with dI_jj/dx_j = -third_j.
  const Vector weights = third.cwiseProduct(info_inverse.diagonal());
  return info_inverse * weights;
}

Vector grad_log_det_info(const Matrix& info_inverse, const Vector& third) {
  return -info_inverse.diagonal().cwiseProduct(third);
}

Vector omega_vector(const Matrix& info_inverse, const Vector& third) {
  return gamma_vector(info_inverse, third) +
         0.5 * info_inverse * grad_log_det_info(info_inverse, third);
}

static Matrix info_inverse_at(const GlmmSpec& spec, const LocalGeometry& g) {
  Eigen::LLT<Matrix> llt(g.neg_hessian);
  if (llt.info() != Eigen::Success) {
    throw numerical_error("negative Hessian is singular; prior precision is degenerate");
  }
  Matrix inv = llt.solve(Matrix::Identity(spec.dimension(), spec.dimension()));
  return 0.5 * (inv + inv.transpose());
}

Vector gamma_vector(const GlmmSpec& spec, const Vector& x) {
  const LocalGeometry g = spec.evaluate(x, true);
  return gamma_vector(info_inverse_at(spec, g), g.third_diag);
}

Vector omega_vector(const GlmmSpec& spec, const Vector& x) {
  const LocalGeometry g = spec.evaluate(x, true);
  return omega_vector(info_inverse_at(spec, g), g.third_diag);
}

std::vector<int> simulate_data(GlmmFamily family, const std::vector<int>& trials,
                               const Vector& x_true, Rng& rng) {
  require_finite(x_true, "x_true");
  const auto m = static_cast<std::size_t>(x_true.size());
  std::vector<int> z(m);
  if (family == GlmmFamily::binomial_logit) {
    if (trials.size() != m) throw invalid_argument("simulate_data: trials length mismatch");
    for (std::size_t i = 0; i < m; ++i) {
      std::binomial_distribution<int> draw(trials[i], logistic(x_true[static_cast<Index>(i)]));
      z[i] = draw(rng.engine());
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      const double xi = x_true[static_cast<Index>(i)];
      if (xi > kPoissonLogRateLimit) {
        throw numerical_error("simulate_data: Poisson log-rate above 700 at site " +
                              std::to_string(i));
      }
      const double rate = std::exp(xi);
      if (rate > static_cast<double>(std::numeric_limits<int>::max()) / 2) {
        throw numerical_error("simulate_data: Poisson rate exceeds the integer count range");
      }
      std::poisson_distribution<int> draw(rate);
      z[i] = draw(rng.engine());
    }
  }
  return z;
}

Vector find_mode(const GlmmSpec& spec, const ModeOptions& options) {
  Vector x = spec.prior_mean();
  double z_norm = 0.0;
  for (int zi : spec.data()) z_norm += static_cast<double>(zi) * zi;
  const double tol = options.tolerance * std::max(1.0, std::sqrt(z_norm));

  LocalGeometry g = spec.evaluate(x, true);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (g.gradient.norm() < tol) return x;
    Eigen::LLT<Matrix> llt(g.neg_hessian);
    if (llt.info() != Eigen::Success) throw numerical_error("find_mode: singular negative Hessian");
    const Vector direction = llt.solve(g.gradient);
    const double slope = g.gradient.dot(direction);

    double step = 1.0;
    Vector candidate;
    LocalGeometry next;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      candidate = x + step * direction;
      if (candidate.allFinite() &&
          !(spec.family() == GlmmFamily::poisson_log && candidate.maxCoeff() > 700.0)) {
        next = spec.evaluate(candidate, true);
        if (std::isfinite(next.value) && next.value >= g.value + 1e-4 * step * slope) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      // At the optimum to rounding: improvement is no longer measurable.
      if (slope <= 1e-14 * std::max(1.0, std::abs(g.value))) return x;
      throw convergence_error("find_mode: line search failed");
    }
    x = std::move(candidate);
    g = std::move(next);
  }
  if (g.gradient.norm() < tol) return x;
  throw convergence_error("find_mode: Newton iterations did not converge within " +
                          std::to_string(options.max_iterations) + " iterations");
}

}  // namespace pdmala
