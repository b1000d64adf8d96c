#pragma once

#include "pdmala/samplers.hpp"
#include "pdmala/types.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace pdmala {

/// Lag 0..max_lag autocorrelations with the biased (divide by n) estimator.
std::vector<double> acf(const Vector& column, Index max_lag);

/// Batch size floor(sqrt(n)) used by all batch-means estimators here.
Index batch_size(Index n);

/// n * sample variance / batch-means variance.
double ess(const Vector& column);

struct MessResult {
  double value = 0.0;
  bool positive_definite = true;   // false: batch-means covariance not PD, value is NaN
  bool subsampled = false;         // computed on `coordinates` only
  std::vector<Index> coordinates;  // columns actually used
};

/// n * (|sample cov| / |batch-means cov|)^(1/p). When there are too few
/// batches for p coordinates, evenly spaced coordinates are used instead and
/// the result is flagged.
MessResult mess(const Matrix& states);

/// Mean squared jump distance sum ||X_{i+1} - X_i||^2 / (n - 1).
double msjd(const Matrix& states);

struct MpsrfPoint {
  Index iteration = 0;   // number of leading iterations used
  double value = 0.0;    // NaN when flagged
  bool flagged = false;  // within-chain covariance singular
};

struct MpsrfTrajectory {
  std::vector<MpsrfPoint> points;
};

/// Multivariate PSRF (n-1)/n + (M+1)/M * lambda_max(W^{-1} B/n) over the
/// first k iterations of each chain for every checkpoint k.
MpsrfTrajectory mpsrf(const std::vector<const Matrix*>& chains, const std::vector<Index>& checkpoints);
MpsrfTrajectory mpsrf(const std::vector<Matrix>& chains, const std::vector<Index>& checkpoints);

/// `count` evenly spaced checkpoints ending at n.
std::vector<Index> even_checkpoints(Index n, Index count);

struct DiagnosticsOptions {
  Index max_lag = 50;
  std::vector<Index> acf_coordinates;  // empty: all coordinates
  Index burn_in = 0;
  bool univariate_ess = true;  // off for unadjusted chains
};

struct DiagnosticsReport {
  Index iterations = 0;  // after burn-in
  Index burn_in = 0;
  std::vector<Index> acf_coordinates;
  std::vector<std::vector<double>> acf;
  std::vector<double> ess;             // per coordinate; NaN for zero-variance coordinates
  std::vector<double> ess_per_minute;
  bool has_ess = false;
  MessResult mess;
  double msjd = 0.0;
  double wall_time = 0.0;
  double acceptance_rate = 0.0;
  std::vector<std::string> warnings;
};

DiagnosticsReport diagnose(const ChainTrace& trace, const DiagnosticsOptions& options = {});

nlohmann::json to_json(const DiagnosticsReport& report);
nlohmann::json to_json(const MpsrfTrajectory& trajectory);

}  // namespace pdmala
