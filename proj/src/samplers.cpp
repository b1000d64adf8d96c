#include "pdmala/samplers.hpp"

#include "pdmala/glmm.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

namespace pdmala {

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::rwm: return "rwm";
    case Algorithm::pcmala: return "pcmala";
    case Algorithm::mmala: return "mmala";
    case Algorithm::pmala: return "pmala";
    case Algorithm::pcula: return "pcula";
  }
  return "unknown";
}

std::string to_string(PreconditionerKind kind) {
  switch (kind) {
    case PreconditionerKind::identity: return "identity";
    case PreconditionerKind::prior_cov: return "prior_cov";
    case PreconditionerKind::diag_mode_info_inv: return "diag_mode_info_inv";
    case PreconditionerKind::mode_info_inv: return "mode_info_inv";
    case PreconditionerKind::position_dependent: return "position_dependent";
  }
  return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "rwm") return Algorithm::rwm;
  if (name == "pcmala" || name == "mala") return Algorithm::pcmala;
  if (name == "mmala") return Algorithm::mmala;
  if (name == "pmala") return Algorithm::pmala;
  if (name == "pcula" || name == "ula") return Algorithm::pcula;
  throw invalid_argument("unknown algorithm '" + name + "'");
}

PreconditionerKind preconditioner_from_string(const std::string& name) {
  if (name == "identity" || name == "I") return PreconditionerKind::identity;
  if (name == "prior_cov" || name == "sigma") return PreconditionerKind::prior_cov;
  if (name == "diag_mode_info_inv") return PreconditionerKind::diag_mode_info_inv;
  if (name == "mode_info_inv") return PreconditionerKind::mode_info_inv;
  if (name == "position_dependent") return PreconditionerKind::position_dependent;
  throw invalid_argument("unknown preconditioner '" + name + "'");
}

bool is_adjusted(Algorithm algorithm) { return algorithm != Algorithm::pcula; }

bool is_position_dependent(Algorithm algorithm) {
  return algorithm == Algorithm::mmala || algorithm == Algorithm::pmala;
}

void SamplerConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw invalid_argument("step size must be positive and finite");
  }
  const bool pd = preconditioner == PreconditionerKind::position_dependent;
  if (is_position_dependent(algorithm) && !pd) {
    throw invalid_argument(to_string(algorithm) + " requires the position_dependent preconditioner");
  }
  if (!is_position_dependent(algorithm) && pd) {
    throw invalid_argument("position_dependent preconditioner is only valid for mmala and pmala");
  }
}

Preconditioner Preconditioner::from_matrix(PreconditionerKind kind, Matrix g) {
  Preconditioner p;
  p.kind = kind;
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) {
    throw numerical_error("preconditioner " + to_string(kind) + " is not positive definite");
  }
  p.lower = llt.matrixL();
  p.log_det = 2.0 * p.lower.diagonal().array().log().sum();
  p.matrix = std::move(g);
  return p;
}

static Matrix inverse_spd(const Matrix& a, const char* what) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw numerical_error(std::string(what) + " is not positive definite");
  Matrix inv = llt.solve(Matrix::Identity(a.rows(), a.cols()));
  return 0.5 * (inv + inv.transpose());
}

Preconditioner resolve_preconditioner(PreconditionerKind kind, const Target& target,
                                      const std::optional<Vector>& mode) {
  const Index m = target.dimension();
  switch (kind) {
    case PreconditionerKind::identity:
      return Preconditioner::from_matrix(kind, Matrix::Identity(m, m));
    case PreconditionerKind::prior_cov:
      return Preconditioner::from_matrix(kind, target.prior_covariance().entries());
    case PreconditionerKind::diag_mode_info_inv:
    case PreconditionerKind::mode_info_inv: {
      const Vector x_hat = mode ? *mode : target.mode();
      const Matrix info_inv =
          inverse_spd(target.evaluate(x_hat, true).neg_hessian, "negative Hessian at the mode");
      if (kind == PreconditionerKind::mode_info_inv) return Preconditioner::from_matrix(kind, info_inv);
      return Preconditioner::from_matrix(kind, Matrix(info_inv.diagonal().asDiagonal()));
    }
    case PreconditionerKind::position_dependent: {
      Preconditioner p;
      p.kind = kind;
      return p;
    }
  }
  throw invalid_argument("unhandled preconditioner kind");
}

double log_proposal_density(const Vector& to, const ProposalParams& params) {
  if (to.size() != params.mean.size()) throw invalid_argument("log_proposal_density: dimension mismatch");
  const Vector diff = to - params.mean;
  const Vector w = params.factor.triangularView<Eigen::Lower>().solve(diff);
  const double d = static_cast<double>(to.size());
  return -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * params.log_det - 0.5 * w.squaredNorm();
}

Kernel::Kernel(const Target& target, const SamplerConfig& config, Preconditioner preconditioner)
    : target_(&target), config_(config), preconditioner_(std::move(preconditioner)) {
  config_.validate();
  if (preconditioner_.kind != config_.preconditioner) {
    throw invalid_argument("preconditioner does not match the sampler configuration");
  }
  if (!is_position_dependent(config_.algorithm) && preconditioner_.matrix.rows() != target.dimension()) {
    throw invalid_argument("preconditioner dimension does not match the target");
  }
}

Kernel::Kernel(const Target& target, const SamplerConfig& config)
    : Kernel(target, config, resolve_preconditioner(config.preconditioner, target)) {}

ProposalParams Kernel::proposal_params(const Vector& x, const LocalGeometry& geometry) const {
  const double h = config_.step_size;
  const double d = static_cast<double>(x.size());
  const double root_h = std::sqrt(h);
  ProposalParams p;
  switch (config_.algorithm) {
    case Algorithm::rwm:
      p.mean = x;
      break;
    case Algorithm::pcmala:
    case Algorithm::pcula:
      p.mean = x + (0.5 * h) * (preconditioner_.matrix * geometry.gradient);
      break;
    case Algorithm::pmala:
    case Algorithm::mmala: {
      if (!geometry.has_curvature()) throw invalid_argument("position-dependent kernel needs curvature");
      const Matrix info_inv = inverse_spd(geometry.neg_hessian, "negative Hessian");
      Eigen::LLT<Matrix> llt(info_inv);
      if (llt.info() != Eigen::Success) throw numerical_error("Cholesky of G(x) failed");
      const Matrix lower = llt.matrixL();
      Vector drift;
      if (config_.algorithm == Algorithm::pmala) {
        drift = info_inv * geometry.gradient + gamma_vector(info_inv, geometry.third_diag);
      } else {
        // grad log f* = grad log f - 0.5 grad log|I|
        const Vector grad_star =
            geometry.gradient - 0.5 * grad_log_det_info(info_inv, geometry.third_diag);
        drift = info_inv * grad_star + omega_vector(info_inv, geometry.third_diag);
      }
      p.mean = x + (0.5 * h) * drift;
      p.factor = root_h * lower;
      p.log_det = d * std::log(h) + 2.0 * lower.diagonal().array().log().sum();
      return p;
    }
  }
  p.factor = root_h * preconditioner_.lower;
  p.log_det = d * std::log(h) + preconditioner_.log_det;
  return p;
}

ChainState Kernel::make_state(const Vector& x) const {
  ChainState s;
  s.x = x;
  s.geometry = target_->evaluate(x, needs_curvature());
  s.proposal = proposal_params(s.x, s.geometry);
  return s;
}

Vector Kernel::sample_proposal(const ChainState& state, Rng& rng) const {
  const Vector eps = rng.normal_vector(state.x.size());
  Vector y = state.proposal.mean + state.proposal.factor.triangularView<Eigen::Lower>() * eps;
  if (!y.allFinite()) throw numerical_error("proposal is not finite");
  return y;
}

double Kernel::log_acceptance(const ChainState& from, const ChainState& to) const {
  const double forward = log_proposal_density(to.x, from.proposal);
  const double backward = log_proposal_density(from.x, to.proposal);
  const double log_ratio = (to.geometry.value - from.geometry.value) + (backward - forward);
  if (std::isnan(log_ratio)) throw numerical_error("acceptance ratio is NaN");
  return std::min(0.0, log_ratio);
}

StepResult Kernel::mh_step(const ChainState& state, Rng& rng) const {
  ChainState proposed = make_state(sample_proposal(state, rng));
  const double log_alpha = log_acceptance(state, proposed);
  const double u = rng.uniform();
  StepResult result;
  result.log_alpha = log_alpha;
  if (std::log(u) < log_alpha) {
    result.state = std::move(proposed);
    result.accepted = true;
  } else {
    result.state = state;
  }
  return result;
}

ChainState Kernel::ula_step(const ChainState& state, Rng& rng) const {
  if (config_.algorithm != Algorithm::pcula) throw invalid_argument("ula_step requires the pcula algorithm");
  return make_state(sample_proposal(state, rng));
}

ChainTrace run_chain(const Kernel& kernel, Index n, const Progress& progress) {
  if (n < 1) throw invalid_argument("run_chain: n must be at least 1");
  const SamplerConfig& config = kernel.config();
  const Index m = kernel.target().dimension();
  if (config.initial_state.size() != m) throw invalid_argument("run_chain: initial state has the wrong dimension");
  const bool adjusted = is_adjusted(config.algorithm);

  ChainTrace trace;
  trace.adjusted = adjusted;
  trace.states.resize(n, m);
  trace.states.row(0) = config.initial_state.transpose();
  if (adjusted) trace.accepted.reserve(static_cast<std::size_t>(n - 1));

  const auto start = std::chrono::steady_clock::now();
  Rng rng(config.seed);
  Index accepted = 0;
  Index t = 1;
  try {
    ChainState state = kernel.make_state(config.initial_state);
    for (; t < n; ++t) {
      if (adjusted) {
        StepResult step = kernel.mh_step(state, rng);
        trace.accepted.push_back(step.accepted);
        if (step.accepted) ++accepted;
        state = std::move(step.state);
      } else {
        state = kernel.ula_step(state, rng);
      }
      trace.states.row(t) = state.x.transpose();
      if (progress.callback && progress.interval > 0 && t % progress.interval == 0) {
        progress.callback(t, adjusted ? static_cast<double>(accepted) / static_cast<double>(t) : 1.0);
      }
    }
  } catch (const Error& e) {
    ChainTrace partial;
    partial.adjusted = adjusted;
    partial.states = trace.states.topRows(t);
    partial.accepted = trace.accepted;
    partial.accepted.resize(static_cast<std::size_t>(t - 1));
    partial.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    throw ChainError(e, t, std::move(partial));
  }
  trace.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (adjusted && n > 1) {
    trace.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(n - 1);
  } else {
    trace.acceptance_rate = adjusted ? 0.0 : 1.0;
  }
  return trace;
}

ChainTrace run_chain(const SamplerConfig& config, const Target& target, Index n) {
  return run_chain(Kernel(target, config), n);
}

TuneResult tune_step_size(const SamplerConfig& config, const Target& target,
                          const Preconditioner& preconditioner, const TuneOptions& options) {
  if (!is_adjusted(config.algorithm)) throw invalid_argument("tune_step_size: only adjusted kernels are tuned");
  if (!(options.band_low < options.band_high)) throw invalid_argument("tune_step_size: empty band");

  auto pilot_rate = [&](double h) {
    SamplerConfig c = config;
    c.step_size = h;
    return run_chain(Kernel(target, c, preconditioner), options.pilot_iterations + 1).acceptance_rate;
  };

  std::optional<std::pair<double, double>> too_small;  // (h, rate) with rate above band
  std::optional<std::pair<double, double>> too_large;  // (h, rate) with rate below band
  double h = config.step_size;
  TuneResult result;
  for (int eval = 1; eval <= options.max_evaluations; ++eval) {
    double rate = 0.0;
    try {
      rate = pilot_rate(h);
    } catch (const Error&) {
      // A diverging pilot behaves like a zero acceptance rate.
      rate = 0.0;
    }
    result.evaluations = eval;
    if (rate >= options.band_low && rate <= options.band_high) {
      result.step_size = h;
      result.acceptance_rate = rate;
      return result;
    }
    if (rate > options.band_high) {
      too_small = {h, rate};
      h = too_large ? std::sqrt(h * too_large->first) : 4.0 * h;
    } else {
      too_large = {h, rate};
      h = too_small ? std::sqrt(h * too_small->first) : 0.25 * h;
    }
  }
  std::ostringstream msg;
  msg << "tune_step_size: acceptance band [" << options.band_low << ", " << options.band_high
      << "] not reached after " << options.max_evaluations << " pilots";
  if (too_small) msg << "; h=" << too_small->first << " gave rate " << too_small->second;
  if (too_large) msg << "; h=" << too_large->first << " gave rate " << too_large->second;
  throw convergence_error(msg.str());
}

}  // namespace pdmala
