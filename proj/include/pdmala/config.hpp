#pragma once

#include "pdmala/covariance.hpp"
#include "pdmala/ergodicity.hpp"
#include "pdmala/glmm.hpp"
#include "pdmala/samplers.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace pdmala {

struct DriftParams {
  DriftKind kind = DriftKind::quadratic;
  double s = 1.0;
  double c1 = 0.0;
  Index n_mc = 10000;
  std::vector<double> radii = kDefaultProbeRadii;
};

/// Default roster: RWM1-4, PCMALA1-4, PMALA, PCULA1-4.
std::vector<std::string> default_roster();

/// Every setting of an experiment; the defaults are the desk profile. Written and read as flat `key = value`
/// text; see `config_keys()` for the key list.
struct ExperimentConfig {
  std::string profile = "desk";

  // model
  GlmmFamily family = GlmmFamily::binomial_logit;
  Index grid = 21;
  Index sites = 50;
  int trials = 50;
  double mean_left = 1.7;   // field mean for x < 0.5
  double mean_right = -1.7; // field mean for x >= 0.5
  CovarianceModel covariance;

  // run
  Index iterations = 20000;
  Index burn_in = 0;
  Index starts = 5;
  std::uint64_t seed = 1;
  std::vector<std::string> roster = default_roster();
  unsigned threads = 0;  // 0: one per hardware thread

  // tuning
  TuneOptions tune;

  // single-chain commands (tune, run, check)
  Algorithm algorithm = Algorithm::pcmala;
  PreconditionerKind preconditioner = PreconditionerKind::mode_info_inv;
  double step_size = 0.1;  // initial trial h for tuning; used as-is by `run` with auto_tune off
  bool auto_tune = true;
  std::string start = "truth";  // truth | negated | zero | plus_one | minus_one

  // diagnostics
  Index max_lag = 50;
  Index mpsrf_checkpoints = 100;

  // ergodicity checks
  DriftParams drift;

  // output
  bool write_traces = false;
  std::string trace_format = "binary";  // binary | csv
  Index progress_interval = 1000;

  void validate() const;
};

/// One roster label (RWM1-4, PCMALA1-4, PMALA, MMALA, PCULA1-4). The digit
/// picks G: 1 identity, 2 prior covariance, 3 diag of the inverse
/// information at the mode, 4 the inverse information at the mode.
struct RosterEntry {
  std::string label;
  Algorithm algorithm = Algorithm::pcmala;
  PreconditionerKind preconditioner = PreconditionerKind::identity;
};
RosterEntry roster_entry(const std::string& label);

/// Profile presets: "desk" (m=50, n=20,000) and "paper" (m=350, n=150,000).
ExperimentConfig profile_config(const std::string& profile);
std::vector<std::string> profile_names();

std::vector<std::string> config_keys();

/// Sets one key from its text form. Throws a parse error naming the key.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const ExperimentConfig& config, const std::string& key);

/// Parses config text. A `profile` entry selects the preset the other
/// entries are applied to; otherwise `base` is used. Unknown keys are
/// collected and reported together.
ExperimentConfig parse_config(const std::string& text, const ExperimentConfig& base = ExperimentConfig{});
ExperimentConfig load_config(const std::string& path, const ExperimentConfig& base = ExperimentConfig{});

/// Applies `key=value` overrides in order.
void apply_overrides(ExperimentConfig& config, const std::vector<std::string>& overrides);

/// Full effective config as `key = value` lines; parse_config(to_text(c))
/// reproduces c.
std::string to_text(const ExperimentConfig& config);
nlohmann::json to_json(const ExperimentConfig& config);

}  // namespace pdmala
