#include "pdmala/harness.hpp"

#include "pdmala/format.hpp"
#include "pdmala/trace_io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace pdmala {

namespace fs = std::filesystem;

namespace {

Error io_error(const std::string& what) { return Error(ErrorCode::io, what); }

// FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t label_hash(const std::string& label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  }
  for (auto& thread : pool) thread.join();
}

std::string csv_number(double value) { return std::isnan(value) ? "" : format_double(value); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw io_error("failed writing " + path.string());
}

const std::vector<Point> kMonitorTargets = {{0.0, 0.0}, {0.1, 0.5}, {1.0, 1.0}};

}  // namespace

double mean_field(const Point& p, double mean_left, double mean_right) {
  return p.x < 0.5 ? mean_left : mean_right;
}

GlmmSpec Dataset::make_spec() const {
  return GlmmSpec(family, z, trials, prior_mean, build_covariance(sites, covariance));
}

Dataset simulate_dataset(const ExperimentConfig& config) {
  config.validate();
  Dataset d;
  d.family = config.family;
  d.covariance = config.covariance;
  d.mean_left = config.mean_left;
  d.mean_right = config.mean_right;
  d.seed = config.seed;
  d.grid = config.grid;

  Rng site_rng(mix_seed(config.seed, 0));
  d.sites = SiteSet::uniform(static_cast<std::size_t>(config.sites), site_rng);
  const SiteSet lattice = SiteSet::lattice(static_cast<std::size_t>(config.grid));

  std::vector<Point> all = lattice.points();
  all.insert(all.end(), d.sites.points().begin(), d.sites.points().end());
  const SiteSet joint(all);
  Vector mean(static_cast<Index>(joint.size()));
  for (std::size_t i = 0; i < joint.size(); ++i) {
    mean[static_cast<Index>(i)] = mean_field(joint[i], config.mean_left, config.mean_right);
  }
  Rng field_rng(mix_seed(config.seed, 1));
  const Vector field = sample_field(mean, build_covariance(joint, config.covariance), field_rng);
  const auto nodes = static_cast<Index>(lattice.size());
  const Index m = config.sites;
  d.grid_field = field.head(nodes);
  d.x_true = field.tail(m);
  d.prior_mean = mean.tail(m);

  d.trials.assign(static_cast<std::size_t>(m), config.trials);
  Rng data_rng(mix_seed(config.seed, 2));
  d.z = simulate_data(config.family, d.trials, d.x_true, data_rng);

  d.monitor_targets = kMonitorTargets;
  for (const Point& p : kMonitorTargets) d.monitored.push_back(static_cast<Index>(d.sites.nearest(p)));
  return d;
}

nlohmann::json to_json(const Dataset& d) {
  nlohmann::json j;
  j["family"] = to_string(d.family);
  j["covariance"] = {{"family", to_string(d.covariance.family)},
                     {"sill", d.covariance.sill},
                     {"range", d.covariance.range},
                     {"smoothness", d.covariance.smoothness}};
  j["mean_left"] = d.mean_left;
  j["mean_right"] = d.mean_right;
  j["seed"] = d.seed;
  j["grid"] = d.grid;
  nlohmann::json sites = nlohmann::json::array();
  for (const Point& p : d.sites.points()) sites.push_back({p.x, p.y});
  j["sites"] = sites;
  j["grid_field"] = std::vector<double>(d.grid_field.data(), d.grid_field.data() + d.grid_field.size());
  j["x_true"] = std::vector<double>(d.x_true.data(), d.x_true.data() + d.x_true.size());
  j["z"] = d.z;
  j["trials"] = d.trials;
  j["prior_mean"] = std::vector<double>(d.prior_mean.data(), d.prior_mean.data() + d.prior_mean.size());
  nlohmann::json monitored = nlohmann::json::array();
  for (std::size_t i = 0; i < d.monitored.size(); ++i) {
    const Point& site = d.sites[static_cast<std::size_t>(d.monitored[i])];
    monitored.push_back({{"target", {d.monitor_targets[i].x, d.monitor_targets[i].y}},
                         {"index", d.monitored[i]},
                         {"site", {site.x, site.y}}});
  }
  j["monitored"] = monitored;
  return j;
}

Dataset dataset_from_json(const nlohmann::json& j) {
  try {
    const auto as_vector = [](const nlohmann::json& a) {
      const auto v = a.get<std::vector<double>>();
      return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())));
    };
    Dataset d;
    d.family = glmm_family_from_string(j.at("family").get<std::string>());
    const auto& cov = j.at("covariance");
    d.covariance.family = covariance_family_from_string(cov.at("family").get<std::string>());
    d.covariance.sill = cov.at("sill").get<double>();
    d.covariance.range = cov.at("range").get<double>();
    d.covariance.smoothness = cov.at("smoothness").get<double>();
    d.covariance.validate();
    d.mean_left = j.at("mean_left").get<double>();
    d.mean_right = j.at("mean_right").get<double>();
    d.seed = j.at("seed").get<std::uint64_t>();
    d.grid = j.at("grid").get<Index>();
    std::vector<Point> points;
    for (const auto& p : j.at("sites")) points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    d.sites = SiteSet(points);
    d.grid_field = as_vector(j.at("grid_field"));
    d.x_true = as_vector(j.at("x_true"));
    d.z = j.at("z").get<std::vector<int>>();
    d.trials = j.at("trials").get<std::vector<int>>();
    d.prior_mean = as_vector(j.at("prior_mean"));
    for (const auto& mon : j.at("monitored")) {
      const auto target = mon.at("target");
      d.monitor_targets.push_back({target.at(0).get<double>(), target.at(1).get<double>()});
      d.monitored.push_back(mon.at("index").get<Index>());
    }
    const auto m = static_cast<std::size_t>(d.x_true.size());
    if (d.sites.size() != m || d.z.size() != m || d.trials.size() != m ||
        static_cast<std::size_t>(d.prior_mean.size()) != m) {
      throw invalid_argument("dataset arrays have inconsistent lengths");
    }
    for (Index idx : d.monitored) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= m) throw invalid_argument("dataset: monitored index out of range");
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed dataset: ") + e.what());
  }
}

void write_dataset(const std::string& path, const Dataset& dataset) {
  write_text(path, to_json(dataset).dump(1) + "\n");
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open dataset " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, "dataset " + path + " is not valid JSON: " + e.what());
  }
  return dataset_from_json(j);
}

Vector start_state(const std::string& name, const Vector& x_true) {
  const Index m = x_true.size();
  if (name == "truth") return x_true;
  if (name == "negated") return -x_true;
  if (name == "zero") return Vector::Zero(m);
  if (name == "plus_one") return x_true.array() + 1.0;
  if (name == "minus_one") return x_true.array() - 1.0;
  throw invalid_argument("unknown start '" + name + "'");
}

StartSet StartSet::from_truth(const Vector& x_true) {
  StartSet s;
  s.names = {"truth", "negated", "zero", "plus_one", "minus_one"};
  for (const auto& name : s.names) s.states.push_back(start_state(name, x_true));
  return s;
}

std::uint64_t chain_seed(std::uint64_t master, const std::string& label, Index start) {
  return mix_seed(mix_seed(master, label_hash(label)), static_cast<std::uint64_t>(start) + 1);
}

std::uint64_t tuning_seed(std::uint64_t master, const std::string& label) {
  return mix_seed(mix_seed(master, label_hash(label)), 0);
}

ComparisonResult run_comparison(const ExperimentConfig& config, const Dataset& dataset,
                                const ComparisonOptions& options) {
  config.validate();
  const auto wall_start = std::chrono::steady_clock::now();
  std::mutex mutex;
  const auto log = [&](const std::string& message) {
    if (!options.log) return;
    std::lock_guard<std::mutex> lock(mutex);
    options.log(message);
  };

  ComparisonResult result;
  result.config = config;
  result.dataset = dataset;
  const GlmmSpec spec = dataset.make_spec();

  std::vector<RosterEntry> entries;
  for (const auto& label : config.roster) entries.push_back(roster_entry(label));
  const bool needs_mode = std::any_of(entries.begin(), entries.end(), [](const RosterEntry& e) {
    return e.preconditioner == PreconditionerKind::diag_mode_info_inv ||
           e.preconditioner == PreconditionerKind::mode_info_inv;
  });
  if (needs_mode) {
    try {
      result.mode = find_mode(spec);
    } catch (const Error& e) {
      result.mode_error = e.what();
      log(std::string("mode search failed: ") + e.what());
    }
  }

  // Preconditioners, one per kind in use.
  std::map<PreconditionerKind, Preconditioner> preconditioners;
  std::map<PreconditionerKind, std::string> preconditioner_errors;
  for (const auto& e : entries) {
    if (preconditioners.count(e.preconditioner) || preconditioner_errors.count(e.preconditioner)) continue;
    try {
      const bool mode_based = e.preconditioner == PreconditionerKind::diag_mode_info_inv ||
                              e.preconditioner == PreconditionerKind::mode_info_inv;
      if (mode_based && !result.mode) throw numerical_error("no posterior mode: " + result.mode_error);
      preconditioners.emplace(e.preconditioner, resolve_preconditioner(e.preconditioner, spec, result.mode));
    } catch (const Error& err) {
      preconditioner_errors.emplace(e.preconditioner, err.what());
    }
  }

  // Step sizes. Unadjusted chains borrow h from the adjusted chain with the
  // same G, which is tuned even when it is not in the roster.
  const auto tuned_label = [](const RosterEntry& e) {
    return e.algorithm == Algorithm::pcula ? "PCMALA" + e.label.substr(5) : e.label;
  };
  std::vector<std::string> tune_labels;
  for (const auto& e : entries) {
    const std::string label = tuned_label(e);
    if (std::find(tune_labels.begin(), tune_labels.end(), label) == tune_labels.end()) tune_labels.push_back(label);
  }
  struct TuneOutcome {
    std::optional<TuneResult> tune;
    double step_size = 0.0;
    std::string error;
  };
  std::vector<TuneOutcome> tunes(tune_labels.size());
  parallel_for(tune_labels.size(), config.threads, [&](std::size_t i) {
    const RosterEntry e = roster_entry(tune_labels[i]);
    TuneOutcome& out = tunes[i];
    const auto pre = preconditioners.find(e.preconditioner);
    if (pre == preconditioners.end()) {
      out.error = preconditioner_errors.at(e.preconditioner);
      return;
    }
    SamplerConfig c;
    c.algorithm = e.algorithm;
    c.preconditioner = e.preconditioner;
    c.step_size = config.step_size;
    c.seed = tuning_seed(config.seed, e.label);
    c.initial_state = dataset.x_true;
    if (!config.auto_tune) {
      out.step_size = config.step_size;
      return;
    }
    try {
      out.tune = tune_step_size(c, spec, pre->second, config.tune);
      out.step_size = out.tune->step_size;
      log(e.label + ": h = " + format_double(out.step_size) + " (pilot acceptance " +
          format_double(out.tune->acceptance_rate) + ")");
    } catch (const Error& err) {
      out.error = err.what();
      log(e.label + ": tuning failed: " + err.what());
    }
  });

  const StartSet starts = StartSet::from_truth(dataset.x_true);
  result.algorithms.resize(entries.size());
  parallel_for(entries.size(), config.threads, [&](std::size_t i) {
    const RosterEntry& e = entries[i];
    AlgorithmResult& r = result.algorithms[i];
    r.entry = e;
    const std::string source = tuned_label(e);
    const auto pos = static_cast<std::size_t>(
        std::find(tune_labels.begin(), tune_labels.end(), source) - tune_labels.begin());
    const TuneOutcome& tune = tunes[pos];
    r.tuning_seed = tuning_seed(config.seed, source);
    for (Index s = 0; s < config.starts; ++s) r.seeds.push_back(chain_seed(config.seed, e.label, s));
    if (!tune.error.empty()) {
      r.error = (source == e.label ? "" : source + ": ") + tune.error;
      return;
    }
    r.step_size = tune.step_size;
    r.tune = source == e.label ? tune.tune : std::nullopt;
    r.step_source = !config.auto_tune ? "configured" : source == e.label ? "tuned" : source;
    const Preconditioner& pre = preconditioners.at(e.preconditioner);
    try {
      std::vector<Matrix> kept;
      for (Index s = 0; s < config.starts; ++s) {
        SamplerConfig c;
        c.algorithm = e.algorithm;
        c.preconditioner = e.preconditioner;
        c.step_size = r.step_size;
        c.seed = r.seeds[static_cast<std::size_t>(s)];
        c.initial_state = starts.states[static_cast<std::size_t>(s)];
        const Kernel kernel(spec, c, pre);
        ChainTrace trace = run_chain(kernel, config.iterations);
        r.wall_times.push_back(trace.wall_time);
        r.acceptance_rates.push_back(trace.acceptance_rate);
        if (options.trace_sink) {
          std::lock_guard<std::mutex> lock(mutex);
          options.trace_sink(r, s, trace);
        }
        if (s == 0) {
          DiagnosticsOptions d;
          d.max_lag = config.max_lag;
          d.acf_coordinates = dataset.monitored;
          d.burn_in = config.burn_in;
          d.univariate_ess = trace.adjusted;
          r.report = diagnose(trace, d);
          if (r.report.has_ess) {
            for (Index j : dataset.monitored) r.monitored_ess.push_back(r.report.ess[static_cast<std::size_t>(j)]);
          }
        }
        if (config.starts >= 2) kept.push_back(trace.states.bottomRows(config.iterations - config.burn_in));
      }
      if (config.starts >= 2) {
        r.mpsrf = mpsrf(kept, even_checkpoints(config.iterations - config.burn_in, config.mpsrf_checkpoints));
      }
      r.ok = true;
      log(e.label + ": done (acceptance " + format_double(r.acceptance_rates.front()) + ")");
    } catch (const Error& err) {
      r.error = err.what();
      log(e.label + ": failed: " + err.what());
    }
  });
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return result;
}

std::string tables_csv(const ComparisonResult& result) {
  std::ostringstream out;
  out << "algorithm,G_kind,h,acc_rate,ESS_1,ESS_mid,ESS_last,ESS_per_min,mESS,MSJD,wall_s\n";
  for (const AlgorithmResult& r : result.algorithms) {
    out << r.entry.label << ',' << to_string(r.entry.preconditioner) << ',';
    if (!r.ok) {
      out << (r.step_size > 0.0 ? format_double(r.step_size) : "") << ",,,,,,,,\n";
      continue;
    }
    out << format_double(r.step_size) << ',';
    out << (is_adjusted(r.entry.algorithm) ? format_double(r.report.acceptance_rate) : "") << ',';
    if (r.report.has_ess) {
      double sum = 0.0;
      for (double e : r.monitored_ess) {
        out << csv_number(e) << ',';
        sum += e;
      }
      const double minutes = r.report.wall_time / 60.0;
      const double mean_ess = sum / static_cast<double>(r.monitored_ess.size());
      out << csv_number(minutes > 0.0 ? mean_ess / minutes : std::numeric_limits<double>::quiet_NaN()) << ','
          << csv_number(r.report.mess.value) << ',';
    } else {
      out << ",,,,,";
    }
    out << format_double(r.report.msjd) << ',' << format_double(r.report.wall_time) << '\n';
  }
  return out.str();
}

std::string mpsrf_csv(const ComparisonResult& result) {
  std::ostringstream out;
  out << "algorithm,iteration,Rhat_p\n";
  for (const AlgorithmResult& r : result.algorithms) {
    if (!r.ok || !r.mpsrf) continue;
    for (const MpsrfPoint& p : r.mpsrf->points) {
      out << r.entry.label << ',' << p.iteration << ',' << csv_number(p.value) << '\n';
    }
  }
  return out.str();
}

std::string acf_csv(const ComparisonResult& result) {
  std::ostringstream out;
  out << "algorithm,coordinate,lag,value\n";
  for (const AlgorithmResult& r : result.algorithms) {
    if (!r.ok) continue;
    for (std::size_t c = 0; c < r.report.acf.size(); ++c) {
      for (std::size_t k = 0; k < r.report.acf[c].size(); ++k) {
        out << r.entry.label << ',' << (r.report.acf_coordinates[c] + 1) << ',' << k << ','
            << csv_number(r.report.acf[c][k]) << '\n';
      }
    }
  }
  return out.str();
}

nlohmann::json manifest_json(const ComparisonResult& result, const std::vector<std::string>& files) {
  nlohmann::json j;
  j["tool"] = "pdmala";
  j["version"] = PDMALA_VERSION;
  j["config"] = to_json(result.config);
  j["dataset"] = {{"seed", result.dataset.seed},
                  {"site_seed", mix_seed(result.dataset.seed, 0)},
                  {"field_seed", mix_seed(result.dataset.seed, 1)},
                  {"data_seed", mix_seed(result.dataset.seed, 2)},
                  {"dimension", result.dataset.dimension()}};
  nlohmann::json monitored = nlohmann::json::array();
  for (std::size_t i = 0; i < result.dataset.monitored.size(); ++i) {
    const Point& site = result.dataset.sites[static_cast<std::size_t>(result.dataset.monitored[i])];
    monitored.push_back({{"coordinate", result.dataset.monitored[i] + 1}, {"site", {site.x, site.y}}});
  }
  j["monitored"] = monitored;
  if (!result.mode_error.empty()) j["mode_error"] = result.mode_error;
  nlohmann::json algorithms = nlohmann::json::array();
  for (const AlgorithmResult& r : result.algorithms) {
    nlohmann::json a;
    a["label"] = r.entry.label;
    a["algorithm"] = to_string(r.entry.algorithm);
    a["preconditioner"] = to_string(r.entry.preconditioner);
    a["status"] = r.ok ? "ok" : "failed";
    if (!r.ok) a["error"] = r.error;
    a["step_size"] = r.step_size;
    a["step_source"] = r.step_source;
    a["tuning_seed"] = r.tuning_seed;
    if (r.tune) {
      a["tuning"] = {{"pilot_acceptance", r.tune->acceptance_rate}, {"evaluations", r.tune->evaluations}};
    }
    a["seeds"] = r.seeds;
    a["wall_times"] = r.wall_times;
    a["acceptance_rates"] = r.acceptance_rates;
    if (r.ok) a["warnings"] = r.report.warnings;
    algorithms.push_back(a);
  }
  j["algorithms"] = algorithms;
  j["wall_time"] = result.wall_time;
  j["files"] = files;
  return j;
}

ComparisonResult write_bundle(const ExperimentConfig& config, const Dataset& dataset, const std::string& directory,
                              const ComparisonOptions& options) {
  const fs::path dir(directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory " + directory + ": " + ec.message());
  const fs::path marker = dir / kIncompleteMarker;
  write_text(marker, "bundle in progress\n");

  std::vector<std::string> files = {"dataset.json", "tables.csv", "mpsrf.csv", "acf.csv"};
  ComparisonOptions opts = options;
  if (config.write_traces) {
    fs::create_directories(dir / "traces", ec);
    if (ec) throw io_error("cannot create " + (dir / "traces").string() + ": " + ec.message());
    const auto user_sink = options.trace_sink;
    opts.trace_sink = [&, user_sink](const AlgorithmResult& r, Index start, const ChainTrace& trace) {
      const bool binary = config.trace_format == "binary";
      const std::string name = "traces/" + r.entry.label + "_start" + std::to_string(start + 1) +
                               (binary ? ".bin" : ".csv");
      if (binary) {
        write_trace_binary((dir / name).string(), trace);
      } else {
        write_trace_csv((dir / name).string(), trace);
      }
      files.push_back(name);
      if (user_sink) user_sink(r, start, trace);
    };
  }

  write_dataset((dir / "dataset.json").string(), dataset);
  ComparisonResult result = run_comparison(config, dataset, opts);
  write_text(dir / "tables.csv", tables_csv(result));
  write_text(dir / "mpsrf.csv", mpsrf_csv(result));
  write_text(dir / "acf.csv", acf_csv(result));
  std::sort(files.begin() + 4, files.end());
  files.insert(files.begin(), "manifest.json");
  write_text(dir / "manifest.json", manifest_json(result, files).dump(2) + "\n");
  fs::remove(marker, ec);
  return result;
}

}  // namespace pdmala

namespace pdmala {

namespace {

std::optional<Vector> mode_if_needed(PreconditionerKind kind, const GlmmSpec& spec) {
  if (kind == PreconditionerKind::diag_mode_info_inv || kind == PreconditionerKind::mode_info_inv) {
    return find_mode(spec);
  }
  return std::nullopt;
}

SamplerConfig sampler_config(const RosterEntry& e, double h, std::uint64_t seed, Vector start) {
  SamplerConfig c;
  c.algorithm = e.algorithm;
  c.preconditioner = e.preconditioner;
  c.step_size = h;
  c.seed = seed;
  c.initial_state = std::move(start);
  c.validate();
  return c;
}

ErgodicityReport bound_report(const std::string& condition, double bound, double h) {
  ErgodicityReport r;
  r.condition = condition;
  r.threshold = bound;
  r.measured = h;
  // The bound is sufficient, not necessary.
  r.verdict = h < bound ? Verdict::satisfied : Verdict::inconclusive;
  return r;
}

}  // namespace

RosterEntry configured_entry(const ExperimentConfig& config) {
  SamplerConfig c;
  c.algorithm = config.algorithm;
  c.preconditioner = config.preconditioner;
  c.step_size = config.step_size;
  c.validate();
  if (config.algorithm == Algorithm::pmala) return roster_entry("PMALA");
  if (config.algorithm == Algorithm::mmala) return roster_entry("MMALA");
  const std::string prefix = config.algorithm == Algorithm::rwm ? "RWM" : config.algorithm == Algorithm::pcula ? "PCULA" : "PCMALA";
  const char digit = config.preconditioner == PreconditionerKind::identity        ? '1'
                     : config.preconditioner == PreconditionerKind::prior_cov     ? '2'
                     : config.preconditioner == PreconditionerKind::diag_mode_info_inv ? '3'
                                                                                  : '4';
  return roster_entry(prefix + digit);
}

SingleTune tune_single(const ExperimentConfig& config, const Dataset& dataset) {
  config.validate();
  RosterEntry e = configured_entry(config);
  if (e.algorithm == Algorithm::pcula) e = roster_entry("PCMALA" + e.label.substr(5));
  const GlmmSpec spec = dataset.make_spec();
  const Preconditioner pre = resolve_preconditioner(e.preconditioner, spec, mode_if_needed(e.preconditioner, spec));
  SingleTune out;
  out.entry = e;
  out.seed = tuning_seed(config.seed, e.label);
  out.tune = tune_step_size(sampler_config(e, config.step_size, out.seed, dataset.x_true), spec, pre, config.tune);
  return out;
}

SingleRun run_single(const ExperimentConfig& config, const Dataset& dataset, const Progress& progress) {
  config.validate();
  SingleRun out;
  out.entry = configured_entry(config);
  out.step_size = config.step_size;
  if (config.auto_tune) {
    const SingleTune t = tune_single(config, dataset);
    out.tune = t.tune;
    out.step_size = t.tune.step_size;
  }
  const GlmmSpec spec = dataset.make_spec();
  const RosterEntry& e = out.entry;
  const Preconditioner pre = resolve_preconditioner(e.preconditioner, spec, mode_if_needed(e.preconditioner, spec));
  out.seed = chain_seed(config.seed, e.label, 0);
  out.start = config.start;
  const Kernel kernel(spec, sampler_config(e, out.step_size, out.seed, start_state(config.start, dataset.x_true)), pre);
  out.trace = run_chain(kernel, config.iterations, progress);
  return out;
}

nlohmann::json to_json(const SingleTune& t) {
  return {{"label", t.entry.label},
          {"algorithm", to_string(t.entry.algorithm)},
          {"preconditioner", to_string(t.entry.preconditioner)},
          {"step_size", t.tune.step_size},
          {"acceptance_rate", t.tune.acceptance_rate},
          {"evaluations", t.tune.evaluations},
          {"seed", t.seed}};
}

nlohmann::json to_json(const SingleRun& r) {
  nlohmann::json j = {{"label", r.entry.label},
                      {"algorithm", to_string(r.entry.algorithm)},
                      {"preconditioner", to_string(r.entry.preconditioner)},
                      {"step_size", r.step_size},
                      {"seed", r.seed},
                      {"start", r.start},
                      {"iterations", r.trace.iterations()},
                      {"dimension", r.trace.dimension()},
                      {"adjusted", r.trace.adjusted},
                      {"acceptance_rate", r.trace.acceptance_rate},
                      {"wall_time", r.trace.wall_time}};
  if (r.tune) {
    j["tuning"] = {{"pilot_acceptance", r.tune->acceptance_rate}, {"evaluations", r.tune->evaluations}};
  }
  return j;
}

std::vector<ErgodicityReport> check_model(const ExperimentConfig& config, const Dataset& dataset) {
  config.validate();
  const GlmmSpec spec = dataset.make_spec();
  const RosterEntry e = configured_entry(config);
  const double h = config.step_size;
  const Index m = spec.dimension();
  const Preconditioner pre = resolve_preconditioner(e.preconditioner, spec, mode_if_needed(e.preconditioner, spec));
  const Kernel kernel(spec, sampler_config(e, h, chain_seed(config.seed, e.label, 0), dataset.x_true), pre);
  const SpdMatrix& sigma = spec.prior_covariance();
  const bool binomial = spec.family() == GlmmFamily::binomial_logit;
  const bool fixed_g = !is_position_dependent(e.algorithm);

  // Metric sandwich G1 <= G(x) <= G2.
  Matrix g1 = fixed_g ? pre.matrix : sigma.entries();
  Matrix g2 = fixed_g ? pre.matrix : sigma.entries();
  Vector trials(m);
  for (Index i = 0; i < m; ++i) trials[i] = spec.trials()[static_cast<std::size_t>(i)];
  if (!fixed_g && binomial) g1 = binomial_metric_sandwich(sigma, trials).g1;
  const SpdMatrix g1_spd(0.5 * (g1 + g1.transpose()));
  const SpdMatrix g2_spd(0.5 * (g2 + g2.transpose()));

  std::vector<ErgodicityReport> reports;
  if (binomial && e.algorithm == Algorithm::pcmala) {
    reports.push_back(bound_report("PCMALA step-size bound", pcmala_h_bound(sigma, SpdMatrix(pre.matrix)), h));
  } else if (binomial && !fixed_g) {
    reports.push_back(bound_report("MMALA step-size bound", mmala_h_bound(sigma, trials), h));
  }
  if (e.algorithm == Algorithm::pcula) {
    const PculaCheck p = pcula_spectral_check(h, pre.matrix, sigma);
    ErgodicityReport r;
    r.condition = "PCULA spectral condition";
    r.threshold = 1.0;
    r.measured = p.lambda_max;
    r.verdict = p.verdict;
    reports.push_back(r);
  }

  const Vector ones = Vector::Ones(m);
  const Vector first = Vector::Unit(m, 0);
  Vector alternating(m);
  for (Index i = 0; i < m; ++i) alternating[i] = i % 2 == 0 ? 1.0 : -1.0;
  const std::vector<Vector> rays = {ones, -ones, first, alternating};
  const DriftParams& dp = config.drift;

  if (e.algorithm != Algorithm::pcula) {
    const double ld1 = g1_spd.log_determinant();
    const double ld2 = g2_spd.log_determinant();
    const double s = dp.s > 0.0 ? dp.s : 1.0;
    ErgodicityReport a4 = a4_probe(kernel, g2_spd, rays, a4_threshold(s, dp.c1, c2(s, h, static_cast<int>(m), ld1, ld2)),
                                   dp.radii);
    a4.c1 = dp.c1;
    reports.push_back(a4);
    ErgodicityReport a5 = a5_probe(kernel, rays, a5_threshold(dp.c1, ld1, ld2), dp.radii);
    a5.c1 = dp.c1;
    reports.push_back(a5);
  }

  {
    DriftSpec drift;
    drift.kind = dp.kind;
    drift.s = dp.s;
    if (drift.kind == DriftKind::exponential_s) drift.g2 = g2_spd;
    const double radius = dp.radii.front();
    const Vector x = radius * ones / std::sqrt(static_cast<double>(m));
    Rng rng(mix_seed(config.seed, 99));
    ErgodicityReport r;
    r.condition = "drift ratio PV/V (" + to_string(drift.kind) + ") at radius " + format_double(radius);
    r.threshold = 1.0;
    try {
      const DriftEstimate d = drift_ratio(SamplerKernel(kernel), drift, x, dp.n_mc, rng);
      r.measured = d.estimate;
      r.verdict = d.estimate + 3.0 * d.standard_error < 1.0   ? Verdict::satisfied
                  : d.estimate - 3.0 * d.standard_error > 1.0 ? Verdict::violated
                                                              : Verdict::inconclusive;
      r.note = "standard error " + format_double(d.standard_error) + " over " + std::to_string(d.samples) + " draws";
    } catch (const Error& err) {
      r.measured = std::numeric_limits<double>::quiet_NaN();
      r.verdict = Verdict::inconclusive;
      r.note = err.what();
    }
    reports.push_back(r);
  }

  reports.push_back(non_ge_drift_check(kernel, {ones}, dp.radii));
  return reports;
}

}  // namespace pdmala
