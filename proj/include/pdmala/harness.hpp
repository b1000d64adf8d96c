#pragma once

#include "pdmala/config.hpp"
#include "pdmala/covariance.hpp"
#include "pdmala/diagnostics.hpp"
#include "pdmala/glmm.hpp"
#include "pdmala/samplers.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pdmala {

/// Simulated spatial GLMM data. The latent field is drawn jointly at the
/// lattice nodes and the observation sites; chains run on the site values.
struct Dataset {
  GlmmFamily family = GlmmFamily::binomial_logit;
  CovarianceModel covariance;
  double mean_left = 1.7;
  double mean_right = -1.7;
  std::uint64_t seed = 0;
  Index grid = 0;
  SiteSet sites;
  Vector grid_field;  // node (i, j) at index j * grid + i, location (i, j) / (grid - 1)
  Vector x_true;
  std::vector<int> z;
  std::vector<int> trials;
  Vector prior_mean;
  std::vector<Point> monitor_targets;  // (0,0), (0.1,0.5), (1,1)
  std::vector<Index> monitored;        // nearest site to each target

  Index dimension() const { return x_true.size(); }
  GlmmSpec make_spec() const;
};

double mean_field(const Point& p, double mean_left, double mean_right);

Dataset simulate_dataset(const ExperimentConfig& config);

nlohmann::json to_json(const Dataset& dataset);
Dataset dataset_from_json(const nlohmann::json& j);
void write_dataset(const std::string& path, const Dataset& dataset);
Dataset read_dataset(const std::string& path);

/// x_true, -x_true, 0, x_true + 1, x_true - 1.
struct StartSet {
  std::vector<std::string> names;
  std::vector<Vector> states;

  static StartSet from_truth(const Vector& x_true);
};

Vector start_state(const std::string& name, const Vector& x_true);

/// Seed of chain `start` of roster label `label`; depends only on the master
/// seed, the label, and the start index.
std::uint64_t chain_seed(std::uint64_t master, const std::string& label, Index start);
std::uint64_t tuning_seed(std::uint64_t master, const std::string& label);

struct AlgorithmResult {
  RosterEntry entry;
  bool ok = false;
  std::string error;
  double step_size = 0.0;
  std::string step_source;  // "tuned", "configured", or the label it was borrowed from
  std::optional<TuneResult> tune;
  std::uint64_t tuning_seed = 0;
  std::vector<std::uint64_t> seeds;  // per start
  std::vector<double> wall_times;
  std::vector<double> acceptance_rates;
  DiagnosticsReport report;    // chain started at x_true
  std::vector<double> monitored_ess;
  std::optional<MpsrfTrajectory> mpsrf;
};

struct ComparisonResult {
  ExperimentConfig config;
  Dataset dataset;
  std::optional<Vector> mode;
  std::string mode_error;
  std::vector<AlgorithmResult> algorithms;
  double wall_time = 0.0;
};

struct ComparisonOptions {
  /// Called once per finished chain; calls are serialized.
  std::function<void(const AlgorithmResult&, Index start, const ChainTrace&)> trace_sink;
  /// Human-readable progress; calls are serialized.
  std::function<void(const std::string&)> log;
};

/// Tunes, runs and diagnoses every roster algorithm. Failures are recorded
/// per algorithm and do not stop the others.
ComparisonResult run_comparison(const ExperimentConfig& config, const Dataset& dataset,
                                const ComparisonOptions& options = {});

// Bundle files. Timing columns (ESS_per_min, wall_s) are the only
// nondeterministic fields of the CSV outputs.
std::string tables_csv(const ComparisonResult& result);
std::string mpsrf_csv(const ComparisonResult& result);
std::string acf_csv(const ComparisonResult& result);
nlohmann::json manifest_json(const ComparisonResult& result, const std::vector<std::string>& files);

// Single-chain commands driven by the sampler.* keys of a config.

struct SingleTune {
  RosterEntry entry;
  TuneResult tune;
  std::uint64_t seed = 0;
};

struct SingleRun {
  RosterEntry entry;
  double step_size = 0.0;
  std::optional<TuneResult> tune;
  std::uint64_t seed = 0;
  std::string start;
  ChainTrace trace;
};

/// Roster-style label for the configured sampler, e.g. "PCMALA4".
RosterEntry configured_entry(const ExperimentConfig& config);

SingleTune tune_single(const ExperimentConfig& config, const Dataset& dataset);
SingleRun run_single(const ExperimentConfig& config, const Dataset& dataset, const Progress& progress = {});

nlohmann::json to_json(const SingleTune& tune);
/// Run summary without the states.
nlohmann::json to_json(const SingleRun& run);

/// Ergodicity checks for the configured sampler and step size: the step-size
/// bound that applies to it, the A4/A5 ray probes, the drift ratio along the
/// positive diagonal, and the non-GE ratio test.
std::vector<ErgodicityReport> check_model(const ExperimentConfig& config, const Dataset& dataset);

inline constexpr const char* kIncompleteMarker = "INCOMPLETE";

/// Runs the comparison and writes manifest.json, tables.csv, mpsrf.csv,
/// acf.csv, dataset.json and (optionally) traces/ into `directory`. An
/// INCOMPLETE marker file exists while the bundle is being produced.
ComparisonResult write_bundle(const ExperimentConfig& config, const Dataset& dataset,
                              const std::string& directory, const ComparisonOptions& options = {});

}  // namespace pdmala
