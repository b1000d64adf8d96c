#include "pdmala/config.hpp"

#include "pdmala/format.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace pdmala {

namespace {

Error parse_error(const std::string& what) { return Error(ErrorCode::parse, what); }

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& text) {
  Int value{};
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw parse_error("config key '" + key + "': expected an integer, got '" + text + "'");
  }
  return value;
}

double parse_real(const std::string& key, const std::string& text) {
  try {
    return parse_double(text);
  } catch (const Error&) {
    throw parse_error("config key '" + key + "': expected a number, got '" + text + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
  if (text == "false" || text == "no" || text == "off" || text == "0") return false;
  throw parse_error("config key '" + key + "': expected true or false, got '" + text + "'");
}

template <typename T>
T parse_enum(const std::string& key, const std::string& text, T (*convert)(const std::string&)) {
  try {
    return convert(text);
  } catch (const Error& e) {
    throw parse_error("config key '" + key + "': " + e.what());
  }
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_double(values[i]);
  return out;
}

std::string text_of(bool b) { return b ? "true" : "false"; }

struct Field {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string& key, const std::string&)> set;
};

#define PDM_INT_FIELD(member, type)                                                      \
  Field {                                                                                \
    [](const ExperimentConfig& c) { return std::to_string(c.member); },                  \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {            \
          c.member = parse_int<type>(k, v);                                              \
        }                                                                                \
  }
#define PDM_REAL_FIELD(member)                                                           \
  Field {                                                                                \
    [](const ExperimentConfig& c) { return format_double(c.member); },                   \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {            \
          c.member = parse_real(k, v);                                                   \
        }                                                                                \
  }
#define PDM_BOOL_FIELD(member)                                                           \
  Field {                                                                                \
    [](const ExperimentConfig& c) { return text_of(c.member); },                         \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {            \
          c.member = parse_bool(k, v);                                                   \
        }                                                                                \
  }
#define PDM_STRING_FIELD(member)                                                         \
  Field {                                                                                \
    [](const ExperimentConfig& c) { return c.member; },                                  \
        [](ExperimentConfig& c, const std::string&, const std::string& v) { c.member = v; } \
  }

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"model.family",
       {[](const ExperimentConfig& c) { return to_string(c.family); },
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.family = parse_enum(k, v, &glmm_family_from_string);
        }}},
      {"model.grid", PDM_INT_FIELD(grid, Index)},
      {"model.sites", PDM_INT_FIELD(sites, Index)},
      {"model.trials", PDM_INT_FIELD(trials, int)},
      {"model.mean_left", PDM_REAL_FIELD(mean_left)},
      {"model.mean_right", PDM_REAL_FIELD(mean_right)},
      {"covariance.family",
       {[](const ExperimentConfig& c) { return to_string(c.covariance.family); },
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.covariance.family = parse_enum(k, v, &covariance_family_from_string);
        }}},
      {"covariance.sill", PDM_REAL_FIELD(covariance.sill)},
      {"covariance.range", PDM_REAL_FIELD(covariance.range)},
      {"covariance.smoothness", PDM_REAL_FIELD(covariance.smoothness)},
      {"run.iterations", PDM_INT_FIELD(iterations, Index)},
      {"run.burn_in", PDM_INT_FIELD(burn_in, Index)},
      {"run.starts", PDM_INT_FIELD(starts, Index)},
      {"run.seed", PDM_INT_FIELD(seed, std::uint64_t)},
      {"run.roster",
       {[](const ExperimentConfig& c) { return join(c.roster); },
        [](ExperimentConfig& c, const std::string&, const std::string& v) { c.roster = split_list(v); }}},
      {"run.threads", PDM_INT_FIELD(threads, unsigned)},
      {"tune.band_low", PDM_REAL_FIELD(tune.band_low)},
      {"tune.band_high", PDM_REAL_FIELD(tune.band_high)},
      {"tune.pilot_iterations", PDM_INT_FIELD(tune.pilot_iterations, Index)},
      {"tune.max_evaluations", PDM_INT_FIELD(tune.max_evaluations, int)},
      {"sampler.algorithm",
       {[](const ExperimentConfig& c) { return to_string(c.algorithm); },
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.algorithm = parse_enum(k, v, &algorithm_from_string);
        }}},
      {"sampler.preconditioner",
       {[](const ExperimentConfig& c) { return to_string(c.preconditioner); },
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.preconditioner = parse_enum(k, v, &preconditioner_from_string);
        }}},
      {"sampler.step_size", PDM_REAL_FIELD(step_size)},
      {"sampler.auto_tune", PDM_BOOL_FIELD(auto_tune)},
      {"sampler.start", PDM_STRING_FIELD(start)},
      {"diagnostics.max_lag", PDM_INT_FIELD(max_lag, Index)},
      {"diagnostics.mpsrf_checkpoints", PDM_INT_FIELD(mpsrf_checkpoints, Index)},
      {"check.drift",
       {[](const ExperimentConfig& c) { return to_string(c.drift.kind); },
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.drift.kind = parse_enum(k, v, &drift_kind_from_string);
        }}},
      {"check.s", PDM_REAL_FIELD(drift.s)},
      {"check.c1", PDM_REAL_FIELD(drift.c1)},
      {"check.n_mc", PDM_INT_FIELD(drift.n_mc, Index)},
      {"check.radii",
       {[](const ExperimentConfig& c) { return join(c.drift.radii); },
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.drift.radii.clear();
          for (const auto& item : split_list(v)) c.drift.radii.push_back(parse_real(k, item));
        }}},
      {"output.traces", PDM_BOOL_FIELD(write_traces)},
      {"output.trace_format", PDM_STRING_FIELD(trace_format)},
      {"output.progress_interval", PDM_INT_FIELD(progress_interval, Index)},
  };
  return table;
}

#undef PDM_INT_FIELD
#undef PDM_REAL_FIELD
#undef PDM_BOOL_FIELD
#undef PDM_STRING_FIELD

const Field* find_field(const std::string& key) {
  for (const auto& [name, field] : fields()) {
    if (name == key) return &field;
  }
  return nullptr;
}

const std::vector<std::string> kStarts = {"truth", "negated", "zero", "plus_one", "minus_one"};

}  // namespace

RosterEntry roster_entry(const std::string& label) {
  RosterEntry e;
  e.label = label;
  if (label == "PMALA" || label == "MMALA") {
    e.algorithm = label == "PMALA" ? Algorithm::pmala : Algorithm::mmala;
    e.preconditioner = PreconditionerKind::position_dependent;
    return e;
  }
  static const std::vector<std::pair<std::string, Algorithm>> prefixes = {
      {"RWM", Algorithm::rwm}, {"PCMALA", Algorithm::pcmala}, {"PCULA", Algorithm::pcula}};
  static const PreconditionerKind kinds[] = {PreconditionerKind::identity, PreconditionerKind::prior_cov,
                                             PreconditionerKind::diag_mode_info_inv,
                                             PreconditionerKind::mode_info_inv};
  for (const auto& [prefix, algorithm] : prefixes) {
    if (label.size() == prefix.size() + 1 && label.rfind(prefix, 0) == 0) {
      const char digit = label.back();
      if (digit >= '1' && digit <= '4') {
        e.algorithm = algorithm;
        e.preconditioner = kinds[digit - '1'];
        return e;
      }
    }
  }
  throw invalid_argument("unknown roster label '" + label + "'");
}

std::vector<std::string> default_roster() {
  return {"RWM1", "RWM2", "RWM3", "RWM4", "PCMALA1", "PCMALA2", "PCMALA3",
          "PCMALA4", "PMALA", "PCULA1", "PCULA2", "PCULA3", "PCULA4"};
}

std::vector<std::string> profile_names() { return {"desk", "paper"}; }

ExperimentConfig profile_config(const std::string& profile) {
  ExperimentConfig c;
  c.roster = default_roster();
  if (profile == "desk") {
    c.profile = "desk";
    c.sites = 50;
    c.iterations = 20000;
    c.starts = 5;
  } else if (profile == "paper") {
    c.profile = "paper";
    c.sites = 350;
    c.iterations = 150000;
    c.starts = 5;
  } else {
    throw invalid_argument("unknown profile '" + profile + "' (expected desk or paper)");
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (sites < 1) throw invalid_argument("model.sites must be at least 1");
  if (grid < 2) throw invalid_argument("model.grid must be at least 2");
  if (trials < 1) throw invalid_argument("model.trials must be at least 1");
  covariance.validate();
  if (iterations < 1) throw invalid_argument("run.iterations must be at least 1");
  if (burn_in < 0 || burn_in >= iterations) throw invalid_argument("run.burn_in must lie in [0, run.iterations)");
  if (starts < 1 || starts > 5) throw invalid_argument("run.starts must lie in [1, 5]");
  for (const auto& label : roster) roster_entry(label);
  if (!(tune.band_low > 0.0 && tune.band_low < tune.band_high && tune.band_high < 1.0)) {
    throw invalid_argument("tune band must satisfy 0 < band_low < band_high < 1");
  }
  if (tune.pilot_iterations < 2) throw invalid_argument("tune.pilot_iterations must be at least 2");
  if (tune.max_evaluations < 1) throw invalid_argument("tune.max_evaluations must be at least 1");
  if (!(step_size > 0.0)) throw invalid_argument("sampler.step_size must be positive");
  if (std::find(kStarts.begin(), kStarts.end(), start) == kStarts.end()) {
    throw invalid_argument("sampler.start must be one of truth, negated, zero, plus_one, minus_one");
  }
  if (max_lag < 0) throw invalid_argument("diagnostics.max_lag must be non-negative");
  if (mpsrf_checkpoints < 1) throw invalid_argument("diagnostics.mpsrf_checkpoints must be at least 1");
  if (drift.kind != DriftKind::quadratic && !(drift.s > 0.0)) throw invalid_argument("check.s must be positive");
  if (!(drift.c1 >= 0.0 && drift.c1 < 1.0)) throw invalid_argument("check.c1 must lie in [0, 1)");
  if (drift.n_mc < 2) throw invalid_argument("check.n_mc must be at least 2");
  if (drift.radii.empty()) throw invalid_argument("check.radii must not be empty");
  if (trace_format != "binary" && trace_format != "csv") {
    throw invalid_argument("output.trace_format must be binary or csv");
  }
  if (progress_interval < 0) throw invalid_argument("output.progress_interval must be non-negative");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys = {"profile"};
  for (const auto& [name, field] : fields()) keys.push_back(name);
  return keys;
}

void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
  if (key == "profile") {
    config = profile_config(value);
    return;
  }
  const Field* field = find_field(key);
  if (!field) throw parse_error("unknown config key '" + key + "'");
  field->set(config, key, value);
}

std::string get_config_value(const ExperimentConfig& config, const std::string& key) {
  if (key == "profile") return config.profile;
  const Field* field = find_field(key);
  if (!field) throw parse_error("unknown config key '" + key + "'");
  return field->get(config);
}

ExperimentConfig parse_config(const std::string& text, const ExperimentConfig& base) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<std::string> unknown;
  std::vector<std::string> malformed;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      malformed.push_back("line " + std::to_string(number));
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key != "profile" && !find_field(key)) {
      unknown.push_back(key);
      continue;
    }
    entries.emplace_back(key, value);
  }
  if (!malformed.empty()) throw parse_error("config lines without '=': " + join(malformed));
  if (!unknown.empty()) throw parse_error("unknown config keys: " + join(unknown));

  ExperimentConfig config = base;
  for (const auto& [key, value] : entries) {
    if (key == "profile") config = profile_config(value);
  }
  for (const auto& [key, value] : entries) {
    if (key != "profile") set_config_value(config, key, value);
  }
  return config;
}

ExperimentConfig load_config(const std::string& path, const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), base);
}

void apply_overrides(ExperimentConfig& config, const std::vector<std::string>& overrides) {
  std::vector<std::string> unknown;
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw parse_error("override '" + item + "' is not key=value");
    const std::string key = trim(item.substr(0, eq));
    if (key != "profile" && !find_field(key)) unknown.push_back(key);
  }
  if (!unknown.empty()) throw parse_error("unknown config keys: " + join(unknown));
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    set_config_value(config, trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
  }
}

std::string to_text(const ExperimentConfig& config) {
  std::string out = "profile = " + config.profile + "\n";
  for (const auto& [name, field] : fields()) out += name + " = " + field.get(config) + "\n";
  return out;
}

nlohmann::json to_json(const ExperimentConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  j["profile"] = config.profile;
  for (const auto& [name, field] : fields()) j[name] = field.get(config);
  return j;
}

}  // namespace pdmala
