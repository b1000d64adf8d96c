#pragma once

#include "pdmala/covariance.hpp"
#include "pdmala/random.hpp"
#include "pdmala/samplers.hpp"
#include "pdmala/types.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pdmala {

/// Eigenvalue extremes used by the step-size bounds.
///   psi:   Sigma^{-1}
///   zeta:  a fixed preconditioner G
///   zeta1_min / zeta2_max: the lower and upper metric of a sandwich
///   G1 <= G(x) <= G2
struct SpectralSummary {
  double psi_min = 0.0;
  double psi_max = 0.0;
  double zeta_min = 0.0;
  double zeta_max = 0.0;
  double zeta1_min = 0.0;
  double zeta2_max = 0.0;

  void validate() const;
};

/// Smallest and largest eigenvalue of a symmetric matrix.
std::pair<double, double> eigen_extremes(const Matrix& symmetric);

enum class Verdict { satisfied, violated, inconclusive };
std::string to_string(Verdict verdict);

struct ErgodicityReport {
  std::string condition;
  double threshold = 0.0;
  double measured = 0.0;
  Verdict verdict = Verdict::inconclusive;
  std::vector<double> radii;   // probe radii, when the value came from a probe
  std::vector<double> values;  // probe value at each radius (worst ray)
  std::optional<double> c1;
  std::optional<double> eta;
  std::string note;
};

nlohmann::json to_json(const ErgodicityReport& report);
nlohmann::json to_json(const std::vector<ErgodicityReport>& reports);

/// Radial constant
///   h^{-d/2} (pi/2)^{(d-2)/2} (|G2|/|G1|)^{1/2} exp(h s^2/2)
///     * int_0^inf exp(-(r - hs)^2/(2h)) r^{d-1} dr
/// evaluated by adaptive Gauss-Kronrod quadrature on the integrand scaled by
/// its maximum.
double log_c2(double s, double h, int d, double log_det_g1, double log_det_g2);
double c2(double s, double h, int d, double log_det_g1, double log_det_g2);

/// 4 psi_min^2 zeta_min / (psi_max^3 zeta_max^2).
double pcmala_h_bound(const SpectralSummary& spectra);
double pcmala_h_bound(const SpdMatrix& sigma, const SpdMatrix& g);

/// Binomial-logit sandwich G1 = (diag(l)/4 + Sigma^{-1})^{-1}, G2 = Sigma.
struct MetricSandwich {
  Matrix g1;
  Matrix g2;
};
MetricSandwich binomial_metric_sandwich(const SpdMatrix& sigma, const Vector& trials);

/// 4 psi_min^3 zeta1_min^2 / (psi_max^4 zeta2_max^3) with the binomial sandwich.
double mmala_h_bound(const SpectralSummary& spectra);
double mmala_h_bound(const SpdMatrix& sigma, const Vector& trials);

struct PculaCheck {
  double lambda_max = 0.0;  // largest eigenvalue of A^T A, A = I - (h/2) G Sigma^{-1}
  Verdict verdict = Verdict::inconclusive;
};
PculaCheck pcula_spectral_check(double h, const Matrix& g, const SpdMatrix& sigma);

enum class DriftKind { exponential_s, exponential_plain, quadratic };
std::string to_string(DriftKind kind);
DriftKind drift_kind_from_string(const std::string& name);

/// Lyapunov function V:
///   exponential_s:     exp(s ||G2^{-1/2} x||)
///   exponential_plain: exp(s ||x||)
///   quadratic:         x^T x + 1
struct DriftSpec {
  DriftKind kind = DriftKind::quadratic;
  double s = 1.0;
  std::optional<SpdMatrix> g2;  // required by exponential_s

  void validate() const;
  double log_value(const Vector& x) const;
};

/// One step of a Markov kernel seen as (proposal, acceptance probability).
class TransitionKernel {
 public:
  virtual ~TransitionKernel() = default;
  virtual Index dimension() const = 0;
  /// Draws `count` proposals y ~ q(x, .) and passes each with log alpha(x, y)
  /// to `sink`. Unadjusted kernels report log alpha = 0.
  virtual void propose(const Vector& x, Index count, Rng& rng,
                       const std::function<void(const Vector&, double)>& sink) const = 0;
};

class SamplerKernel final : public TransitionKernel {
 public:
  explicit SamplerKernel(const Kernel& kernel) : kernel_(&kernel) {}

  Index dimension() const override { return kernel_->target().dimension(); }
  void propose(const Vector& x, Index count, Rng& rng,
               const std::function<void(const Vector&, double)>& sink) const override;

 private:
  const Kernel* kernel_;
};

struct DriftEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  Index samples = 0;
};

/// Monte Carlo estimate of PV(x)/V(x) = E[alpha V(y)/V(x) + 1 - alpha].
DriftEstimate drift_ratio(const TransitionKernel& kernel, const DriftSpec& drift, const Vector& x,
                          Index n_mc, Rng& rng);

/// [log C2(s) - log(1 - C1)] / s.
double a4_threshold(double s, double c1, double c2_value);
/// (1 - C1) (|G1|/|G2|)^{1/2}.
double a5_threshold(double c1, double log_det_g1, double log_det_g2);

/// Proposal mean c(x) of a Langevin or random-walk kernel.
Vector proposal_mean(const Kernel& kernel, const Vector& x);

inline const std::vector<double> kDefaultProbeRadii = {1e2, 1e3, 1e4};

/// Relative change between the last two radii below which a probe counts as
/// stabilized.
inline constexpr double kProbeStabilityTolerance = 0.01;

/// Probes liminf (||G2^{-1/2} x|| - ||G2^{-1/2} c(x)||) along each ray and
/// compares it with `threshold`.
ErgodicityReport a4_probe(const Kernel& kernel, const SpdMatrix& g2, const std::vector<Vector>& rays,
                          double threshold, const std::vector<double>& radii = kDefaultProbeRadii);

/// Probes limsup ||c(x)||^2 / ||x||^2 along each ray against `threshold`.
ErgodicityReport a5_probe(const Kernel& kernel, const std::vector<Vector>& rays, double threshold,
                          const std::vector<double>& radii = kDefaultProbeRadii);

/// Evaluates ||e(x)|| / ||x|| with c(x) = x + h e(x) at x = r v. The verdict
/// is `violated` (the chain is not geometrically ergodic) when on every ray
/// the ratio exceeds 2/h at the largest radius and is still increasing there.
ErgodicityReport non_ge_drift_check(const Kernel& kernel, const std::vector<Vector>& rays,
                                    const std::vector<double>& radii);

}  // namespace pdmala
