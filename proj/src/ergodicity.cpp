#include "pdmala/ergodicity.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <numbers>

namespace pdmala {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void require_c1(double c1) {
  if (!(c1 >= 0.0 && c1 < 1.0)) throw invalid_argument("C1 must lie in [0, 1)");
}

// Verdict for one ray. `values` are ordered by increasing radius.
Verdict probe_verdict(const std::vector<double>& values, double threshold, bool larger_is_good) {
  const auto good = [&](double v) { return larger_is_good ? v > threshold : v < threshold; };
  const std::size_t k = values.size();
  if (k == 0) return Verdict::inconclusive;
  const double last = values[k - 1];
  if (std::isnan(last)) return Verdict::inconclusive;
  if (k >= 2 && std::isfinite(last) && std::isfinite(values[k - 2])) {
    const double scale = std::max(std::abs(last), std::abs(values[k - 2]));
    const double change = scale == 0.0 ? 0.0 : std::abs(last - values[k - 2]) / scale;
    if (change <= kProbeStabilityTolerance) return good(last) ? Verdict::satisfied : Verdict::violated;
  }
  // Not stabilized: only a monotone run that is already on the good side at
  // every radius is accepted.
  bool monotone = true;
  for (std::size_t i = 1; i < k; ++i) {
    monotone = monotone && (larger_is_good ? values[i] >= values[i - 1] : values[i] <= values[i - 1]);
  }
  const bool all_good = std::all_of(values.begin(), values.end(), good);
  return monotone && all_good && k >= 2 ? Verdict::satisfied : Verdict::inconclusive;
}

Vector unit(const Vector& v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw invalid_argument("probe rays must be nonzero and finite");
  return v / norm;
}

void require_radii(const std::vector<double>& radii) {
  if (radii.empty()) throw invalid_argument("probe needs at least one radius");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw invalid_argument("probe radii must be positive");
    if (i > 0 && radii[i] <= radii[i - 1]) throw invalid_argument("probe radii must be increasing");
  }
}

// Runs `value(x)` along every ray and combines the per-ray verdicts: all
// satisfied -> satisfied, any violated -> violated. The reported series is
// the one of the ray whose last value is worst.
ErgodicityReport probe(const std::string& condition, const std::vector<Vector>& rays,
                       const std::vector<double>& radii, double threshold, bool larger_is_good,
                       const std::function<double(const Vector&)>& value) {
  if (rays.empty()) throw invalid_argument("probe needs at least one ray");
  require_radii(radii);
  ErgodicityReport report;
  report.condition = condition;
  report.threshold = threshold;
  report.radii = radii;
  bool all_satisfied = true;
  bool any_violated = false;
  bool first = true;
  for (const Vector& ray : rays) {
    const Vector v = unit(ray);
    std::vector<double> series;
    for (double r : radii) {
      double y = value(r * v);
      if (std::isnan(y)) y = larger_is_good ? -kInf : kInf;
      series.push_back(y);
    }
    const Verdict verdict = probe_verdict(series, threshold, larger_is_good);
    all_satisfied = all_satisfied && verdict == Verdict::satisfied;
    any_violated = any_violated || verdict == Verdict::violated;
    const double last = series.back();
    const bool worse = larger_is_good ? last < report.measured : last > report.measured;
    if (first || worse) {
      report.measured = last;
      report.values = series;
      first = false;
    }
  }
  report.verdict = any_violated ? Verdict::violated : all_satisfied ? Verdict::satisfied : Verdict::inconclusive;
  return report;
}

}  // namespace

void SpectralSummary::validate() const {
  const double all[] = {psi_min, psi_max, zeta_min, zeta_max, zeta1_min, zeta2_max};
  for (double v : all) {
    if (!(v > 0.0) || !std::isfinite(v)) throw invalid_argument("spectral summary entries must be positive");
  }
  if (psi_min > psi_max || zeta_min > zeta_max) throw invalid_argument("spectral summary: min exceeds max");
}

std::pair<double, double> eigen_extremes(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(symmetric), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw numerical_error("eigenvalue solver failed");
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::satisfied: return "satisfied";
    case Verdict::violated: return "violated";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

nlohmann::json to_json(const ErgodicityReport& report) {
  nlohmann::json j;
  j["condition"] = report.condition;
  j["threshold"] = report.threshold;
  j["measured"] = report.measured;
  j["verdict"] = to_string(report.verdict);
  if (!report.radii.empty()) {
    j["radii"] = report.radii;
    j["values"] = report.values;
  }
  if (report.c1) j["C1"] = *report.c1;
  if (report.eta) j["eta"] = *report.eta;
  if (!report.note.empty()) j["note"] = report.note;
  return j;
}

nlohmann::json to_json(const std::vector<ErgodicityReport>& reports) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : reports) out.push_back(to_json(r));
  return out;
}

double log_c2(double s, double h, int d, double log_det_g1, double log_det_g2) {
  if (!(s >= 0.0) || !(h > 0.0) || d < 1) throw invalid_argument("c2: need s >= 0, h > 0, d >= 1");
  const double dd = static_cast<double>(d);
  const double hs = h * s;
  // The log integrand is concave with curvature <= -1/h, so beyond
  // 20 sqrt(h) past its peak it has fallen by more than e^-200.
  const double peak = 0.5 * (hs + std::sqrt(hs * hs + 4.0 * h * (dd - 1.0)));
  const auto log_integrand = [&](double r) {
    const double quad = -(r - hs) * (r - hs) / (2.0 * h);
    if (d == 1) return quad;
    return r > 0.0 ? quad + (dd - 1.0) * std::log(r) : -kInf;
  };
  const double log_peak = log_integrand(peak);
  const auto scaled = [&](double r) { return std::exp(log_integrand(r) - log_peak); };
  const double upper = peak + 20.0 * std::sqrt(h);

  using Integrator = boost::math::quadrature::gauss_kronrod<double, 61>;
  double err_low = 0.0;
  double err_high = 0.0;
  const double low = peak > 0.0 ? Integrator::integrate(scaled, 0.0, peak, 15, 1e-12, &err_low) : 0.0;
  const double high = Integrator::integrate(scaled, peak, upper, 15, 1e-12, &err_high);
  const double integral = low + high;
  if (!(integral > 0.0) || !std::isfinite(integral) || err_low + err_high > 1e-8 * integral) {
    throw convergence_error("c2: radial quadrature did not converge");
  }
  return -0.5 * dd * std::log(h) + 0.5 * (dd - 2.0) * std::log(std::numbers::pi / 2.0) +
         0.5 * (log_det_g2 - log_det_g1) + 0.5 * h * s * s + log_peak + std::log(integral);
}

double c2(double s, double h, int d, double log_det_g1, double log_det_g2) {
  return std::exp(log_c2(s, h, d, log_det_g1, log_det_g2));
}

static void require_positive(std::initializer_list<double> values, const char* what) {
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw invalid_argument(std::string(what) + ": eigenvalues must be positive");
  }
}

double pcmala_h_bound(const SpectralSummary& x) {
  require_positive({x.psi_min, x.psi_max, x.zeta_min, x.zeta_max}, "pcmala_h_bound");
  return 4.0 * x.psi_min * x.psi_min * x.zeta_min / (x.psi_max * x.psi_max * x.psi_max * x.zeta_max * x.zeta_max);
}

double pcmala_h_bound(const SpdMatrix& sigma, const SpdMatrix& g) {
  if (sigma.dimension() != g.dimension()) throw invalid_argument("pcmala_h_bound: dimension mismatch");
  // psi are the reciprocals of the eigenvalues of Sigma.
  const auto [sigma_min, sigma_max] = eigen_extremes(sigma.entries());
  const auto [zeta_min, zeta_max] = eigen_extremes(g.entries());
  SpectralSummary x;
  x.psi_min = 1.0 / sigma_max;
  x.psi_max = 1.0 / sigma_min;
  x.zeta_min = zeta_min;
  x.zeta_max = zeta_max;
  x.zeta1_min = zeta_min;
  x.zeta2_max = zeta_max;
  x.validate();
  return pcmala_h_bound(x);
}

MetricSandwich binomial_metric_sandwich(const SpdMatrix& sigma, const Vector& trials) {
  if (trials.size() != sigma.dimension()) throw invalid_argument("metric sandwich: trials length mismatch");
  if ((trials.array() < 0.0).any()) throw invalid_argument("metric sandwich: negative trial count");
  Matrix info = sigma.inverse();
  info.diagonal() += 0.25 * trials;
  const SpdMatrix info_spd(symmetrized(info));
  return {info_spd.inverse(), sigma.entries()};
}

double mmala_h_bound(const SpectralSummary& x) {
  require_positive({x.psi_min, x.psi_max, x.zeta1_min, x.zeta2_max}, "mmala_h_bound");
  return 4.0 * std::pow(x.psi_min, 3) * x.zeta1_min * x.zeta1_min / (std::pow(x.psi_max, 4) * std::pow(x.zeta2_max, 3));
}

double mmala_h_bound(const SpdMatrix& sigma, const Vector& trials) {
  const MetricSandwich sandwich = binomial_metric_sandwich(sigma, trials);
  const auto [sigma_min, sigma_max] = eigen_extremes(sigma.entries());
  SpectralSummary x;
  x.psi_min = 1.0 / sigma_max;
  x.psi_max = 1.0 / sigma_min;
  x.zeta1_min = eigen_extremes(sandwich.g1).first;
  x.zeta2_max = eigen_extremes(sandwich.g2).second;
  x.zeta_min = x.zeta1_min;
  x.zeta_max = x.zeta2_max;
  x.validate();
  return mmala_h_bound(x);
}

PculaCheck pcula_spectral_check(double h, const Matrix& g, const SpdMatrix& sigma) {
  if (!(h > 0.0)) throw invalid_argument("pcula_spectral_check: h must be positive");
  if (g.rows() != sigma.dimension() || g.cols() != sigma.dimension()) {
    throw invalid_argument("pcula_spectral_check: dimension mismatch");
  }
  const Index d = g.rows();
  const Matrix a = Matrix::Identity(d, d) - 0.5 * h * g * sigma.inverse();
  PculaCheck out;
  out.lambda_max = eigen_extremes(a.transpose() * a).second;
  out.verdict = out.lambda_max < 1.0 ? Verdict::satisfied : Verdict::violated;
  return out;
}

std::string to_string(DriftKind kind) {
  switch (kind) {
    case DriftKind::exponential_s: return "exponential_s";
    case DriftKind::exponential_plain: return "exponential_plain";
    case DriftKind::quadratic: return "quadratic";
  }
  return "quadratic";
}

DriftKind drift_kind_from_string(const std::string& name) {
  if (name == "exponential_s") return DriftKind::exponential_s;
  if (name == "exponential_plain" || name == "exponential") return DriftKind::exponential_plain;
  if (name == "quadratic") return DriftKind::quadratic;
  throw invalid_argument("unknown drift function '" + name + "'");
}

void DriftSpec::validate() const {
  if (kind != DriftKind::quadratic && !(s > 0.0 && std::isfinite(s))) {
    throw invalid_argument("drift: s must be positive");
  }
  if (kind == DriftKind::exponential_s && !g2) throw invalid_argument("drift: exponential_s needs G2");
}

double DriftSpec::log_value(const Vector& x) const {
  switch (kind) {
    case DriftKind::quadratic: return std::log1p(x.squaredNorm());
    case DriftKind::exponential_plain: return s * x.norm();
    case DriftKind::exponential_s: {
      if (g2->dimension() != x.size()) throw invalid_argument("drift: G2 dimension mismatch");
      // ||G2^{-1/2} x||^2 = x^T G2^{-1} x = ||L^{-1} x||^2 with G2 = L L^T.
      const Vector w = g2->lower().triangularView<Eigen::Lower>().solve(x);
      return s * w.norm();
    }
  }
  return 0.0;
}

void SamplerKernel::propose(const Vector& x, Index count, Rng& rng,
                            const std::function<void(const Vector&, double)>& sink) const {
  const ChainState from = kernel_->make_state(x);
  const bool adjusted = is_adjusted(kernel_->config().algorithm);
  for (Index i = 0; i < count; ++i) {
    const Vector y = kernel_->sample_proposal(from, rng);
    if (!adjusted) {
      sink(y, 0.0);
      continue;
    }
    double log_alpha = -kInf;
    try {
      log_alpha = kernel_->log_acceptance(from, kernel_->make_state(y));
    } catch (const Error&) {
      // The target cannot be evaluated at y; such a proposal is rejected.
    }
    sink(y, log_alpha);
  }
}

DriftEstimate drift_ratio(const TransitionKernel& kernel, const DriftSpec& drift, const Vector& x,
                          Index n_mc, Rng& rng) {
  drift.validate();
  if (n_mc < 2) throw invalid_argument("drift_ratio: need at least 2 Monte Carlo draws");
  if (x.size() != kernel.dimension()) throw invalid_argument("drift_ratio: dimension mismatch");
  const double log_vx = drift.log_value(x);
  if (!std::isfinite(log_vx)) throw numerical_error("drift_ratio: V(x) is not finite");
  double sum = 0.0;
  double sum_sq = 0.0;
  kernel.propose(x, n_mc, rng, [&](const Vector& y, double log_alpha) {
    const double alpha = std::exp(log_alpha);
    double term = 1.0 - alpha;
    if (alpha > 0.0) {
      const double log_move = log_alpha + drift.log_value(y) - log_vx;
      if (log_move > 700.0) {
        throw numerical_error("drift_ratio: V(y)/V(x) overflows; use a smaller s");
      }
      term += std::exp(log_move);
    }
    sum += term;
    sum_sq += term * term;
  });
  const double n = static_cast<double>(n_mc);
  DriftEstimate out;
  out.samples = n_mc;
  out.estimate = sum / n;
  const double var = std::max(0.0, (sum_sq - n * out.estimate * out.estimate) / (n - 1.0));
  out.standard_error = std::sqrt(var / n);
  return out;
}

double a4_threshold(double s, double c1, double c2_value) {
  require_c1(c1);
  if (!(s > 0.0)) throw invalid_argument("a4_threshold: s must be positive");
  if (!(c2_value > 0.0)) throw invalid_argument("a4_threshold: C2 must be positive");
  return (std::log(c2_value) - std::log1p(-c1)) / s;
}

double a5_threshold(double c1, double log_det_g1, double log_det_g2) {
  require_c1(c1);
  return (1.0 - c1) * std::exp(0.5 * (log_det_g1 - log_det_g2));
}

Vector proposal_mean(const Kernel& kernel, const Vector& x) {
  return kernel.proposal_params(x, kernel.target().evaluate(x, kernel.needs_curvature())).mean;
}

namespace {

// c(x), or NaN entries when the target cannot be evaluated at x.
Vector safe_mean(const Kernel& kernel, const Vector& x) {
  try {
    return proposal_mean(kernel, x);
  } catch (const Error&) {
    return Vector::Constant(x.size(), std::numeric_limits<double>::quiet_NaN());
  }
}

}  // namespace

ErgodicityReport a4_probe(const Kernel& kernel, const SpdMatrix& g2, const std::vector<Vector>& rays,
                          double threshold, const std::vector<double>& radii) {
  const auto whitened_norm = [&](const Vector& v) {
    return g2.lower().triangularView<Eigen::Lower>().solve(v).norm();
  };
  ErgodicityReport r = probe("A4 inward drift", rays, radii, threshold, true, [&](const Vector& x) {
    return whitened_norm(x) - whitened_norm(safe_mean(kernel, x));
  });
  r.eta = r.measured;
  return r;
}

ErgodicityReport a5_probe(const Kernel& kernel, const std::vector<Vector>& rays, double threshold,
                          const std::vector<double>& radii) {
  return probe("A5 contraction", rays, radii, threshold, false, [&](const Vector& x) {
    return safe_mean(kernel, x).squaredNorm() / x.squaredNorm();
  });
}

ErgodicityReport non_ge_drift_check(const Kernel& kernel, const std::vector<Vector>& rays,
                                    const std::vector<double>& radii) {
  if (rays.empty()) throw invalid_argument("non_ge_drift_check: need at least one ray");
  require_radii(radii);
  const double h = kernel.step_size();
  ErgodicityReport report;
  report.condition = "non-GE ||e(x)||/||x|| > 2/h";
  report.threshold = 2.0 / h;
  report.radii = radii;
  bool all_violate = true;
  bool first = true;
  for (const Vector& ray : rays) {
    const Vector v = unit(ray);
    std::vector<double> series;
    for (double r : radii) {
      const Vector x = r * v;
      const double ratio = ((safe_mean(kernel, x) - x) / h).norm() / r;
      series.push_back(std::isnan(ratio) ? kInf : ratio);
    }
    const std::size_t k = series.size();
    const bool increasing = k >= 2 && (series[k - 1] > series[k - 2] ||
                                       (std::isinf(series[k - 1]) && series[k - 1] > 0.0));
    all_violate = all_violate && series.back() > report.threshold && increasing;
    if (first || series.back() < report.measured) {
      report.measured = series.back();
      report.values = series;
      first = false;
    }
  }
  report.verdict = all_violate ? Verdict::violated : Verdict::inconclusive;
  report.note = all_violate ? "not geometrically ergodic along every probed ray"
                            : "ratio condition not met; no conclusion";
  return report;
}

}  // namespace pdmala
