#pragma once

#include "pdmala/random.hpp"
#include "pdmala/target.hpp"
#include "pdmala/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pdmala {

enum class Algorithm { rwm, pcmala, mmala, pmala, pcula };

enum class PreconditionerKind {
  identity,
  prior_cov,
  diag_mode_info_inv,
  mode_info_inv,
  position_dependent,
};

std::string to_string(Algorithm algorithm);
std::string to_string(PreconditionerKind kind);
Algorithm algorithm_from_string(const std::string& name);
PreconditionerKind preconditioner_from_string(const std::string& name);

bool is_adjusted(Algorithm algorithm);
bool is_position_dependent(Algorithm algorithm);

struct SamplerConfig {
  Algorithm algorithm = Algorithm::pcmala;
  PreconditionerKind preconditioner = PreconditionerKind::identity;
  double step_size = 0.1;
  std::uint64_t seed = 1;
  Vector initial_state;

  void validate() const;
};

/// A fixed (position independent) preconditioning matrix with its factor.
struct Preconditioner {
  PreconditionerKind kind = PreconditionerKind::identity;
  Matrix matrix;
  Matrix lower;  // Cholesky factor of matrix
  double log_det = 0.0;

  static Preconditioner from_matrix(PreconditionerKind kind, Matrix g);
};

/// Builds G for a fixed kind. The mode-based kinds evaluate -grad^2 log f at
/// `mode` (computed from the target when not supplied).
Preconditioner resolve_preconditioner(PreconditionerKind kind, const Target& target,
                                      const std::optional<Vector>& mode = std::nullopt);

/// Gaussian proposal N(mean, factor * factor^T); `factor` is the lower
/// Cholesky factor of h*G(x) and `log_det` is log|h*G(x)|.
struct ProposalParams {
  Vector mean;
  Matrix factor;
  double log_det = 0.0;
};

struct ChainState {
  Vector x;
  LocalGeometry geometry;
  ProposalParams proposal;  // proposal from x
};

struct StepResult {
  ChainState state;
  bool accepted = false;
  double log_alpha = 0.0;
};

/// Exact log density of N(params.mean, factor factor^T) at `to`, including
/// every constant.
double log_proposal_density(const Vector& to, const ProposalParams& params);

/// MH and unadjusted Langevin kernels with Gaussian proposals N(c(x), hG(x)).
/// Holds references to the target; the target must outlive the kernel.
class Kernel {
 public:
  Kernel(const Target& target, const SamplerConfig& config, Preconditioner preconditioner);
  /// Resolves the preconditioner from the target.
  Kernel(const Target& target, const SamplerConfig& config);

  const Target& target() const { return *target_; }
  const SamplerConfig& config() const { return config_; }
  const Preconditioner& preconditioner() const { return preconditioner_; }
  double step_size() const { return config_.step_size; }

  /// Evaluates the target at x and stores the proposal parameters from x.
  ChainState make_state(const Vector& x) const;
  ProposalParams proposal_params(const Vector& x, const LocalGeometry& geometry) const;
  Vector sample_proposal(const ChainState& state, Rng& rng) const;

  /// log alpha(x, y) = min(0, log f(y) + log q(y,x) - log f(x) - log q(x,y)).
  double log_acceptance(const ChainState& from, const ChainState& to) const;
  StepResult mh_step(const ChainState& state, Rng& rng) const;
  ChainState ula_step(const ChainState& state, Rng& rng) const;

  bool needs_curvature() const { return is_position_dependent(config_.algorithm); }

 private:
  const Target* target_;
  SamplerConfig config_;
  Preconditioner preconditioner_;
};

struct ChainTrace {
  Matrix states;              // n x m, row t is the state after t steps
  std::vector<bool> accepted; // n-1 entries; empty for unadjusted kernels
  double wall_time = 0.0;     // seconds
  double acceptance_rate = 0.0;
  bool adjusted = true;       // false for unadjusted (PCULA) chains

  Index iterations() const { return states.rows(); }
  Index dimension() const { return states.cols(); }
};

/// Thrown when a step fails mid-chain; carries the states produced so far.
class ChainError : public Error {
 public:
  ChainError(const Error& cause, Index iteration, ChainTrace partial)
      : Error(cause.code(), std::string(cause.what()) + " (at iteration " +
                                std::to_string(iteration) + ")"),
        iteration_(iteration),
        partial_(std::move(partial)) {}

  Index iteration() const { return iteration_; }
  const ChainTrace& partial_trace() const { return partial_; }

 private:
  Index iteration_;
  ChainTrace partial_;
};

/// Called every `interval` iterations with (iteration, running acceptance rate).
struct Progress {
  Index interval = 0;
  std::function<void(Index, double)> callback;
};

ChainTrace run_chain(const Kernel& kernel, Index n, const Progress& progress = {});
ChainTrace run_chain(const SamplerConfig& config, const Target& target, Index n);

struct TuneOptions {
  double band_low = 0.60;
  double band_high = 0.70;
  Index pilot_iterations = 2000;
  int max_evaluations = 40;
};

struct TuneResult {
  double step_size = 0.0;
  double acceptance_rate = 0.0;
  int evaluations = 0;
};

/// Finds h whose pilot acceptance rate falls in the band, searching in log h
/// (acceptance decreases with h). Starts from config.step_size. Every pilot
/// reuses config.seed.
TuneResult tune_step_size(const SamplerConfig& config, const Target& target,
                          const Preconditioner& preconditioner, const TuneOptions& options = {});

}  // namespace pdmala
