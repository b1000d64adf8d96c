#include "pdmala/pdmala.h"

#include "pdmala/config.hpp"
#include "pdmala/diagnostics.hpp"
#include "pdmala/ergodicity.hpp"
#include "pdmala/harness.hpp"
#include "pdmala/trace_io.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

struct pdm_config {
  pdmala::ExperimentConfig value;
};

struct pdm_dataset {
  pdmala::Dataset value;
};

struct pdm_trace {
  pdmala::ChainTrace value;
};

namespace {

thread_local std::string last_error;

pdm_status status_of(pdmala::ErrorCode code) {
  switch (code) {
    case pdmala::ErrorCode::invalid_argument: return PDM_ERR_INVALID_ARGUMENT;
    case pdmala::ErrorCode::numerical: return PDM_ERR_NUMERICAL;
    case pdmala::ErrorCode::convergence: return PDM_ERR_CONVERGENCE;
    case pdmala::ErrorCode::io: return PDM_ERR_IO;
    case pdmala::ErrorCode::parse: return PDM_ERR_PARSE;
  }
  return PDM_ERR_INTERNAL;
}

template <typename F>
pdm_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return PDM_OK;
  } catch (const pdmala::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return PDM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return PDM_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown exception";
    return PDM_ERR_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (!p) throw pdmala::invalid_argument(std::string(name) + " must not be NULL");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

pdmala::Matrix square(const double* data, size_t d) {
  require(data, "matrix");
  if (d == 0) throw pdmala::invalid_argument("matrix dimension must be positive");
  const auto n = static_cast<pdmala::Index>(d);
  return Eigen::Map<const pdmala::Matrix>(data, n, n);
}

}  // namespace

extern "C" {

const char* pdm_version(void) { return PDMALA_VERSION; }

const char* pdm_last_error(void) { return last_error.c_str(); }

const char* pdm_status_name(pdm_status status) {
  switch (status) {
    case PDM_OK: return "ok";
    case PDM_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case PDM_ERR_NUMERICAL: return "numerical";
    case PDM_ERR_CONVERGENCE: return "convergence";
    case PDM_ERR_IO: return "io";
    case PDM_ERR_PARSE: return "parse";
    case PDM_ERR_INTERNAL: return "internal";
  }
  return "internal";
}

void pdm_string_free(char* s) { std::free(s); }

pdm_status pdm_config_new(const char* profile, pdm_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new pdm_config{pdmala::profile_config(profile ? profile : "desk")};
  });
}

pdm_status pdm_config_parse(const char* text, pdm_config** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new pdm_config{pdmala::parse_config(text)};
  });
}

pdm_status pdm_config_load(const char* path, pdm_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new pdm_config{pdmala::load_config(path)};
  });
}

pdm_status pdm_config_set(pdm_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    pdmala::set_config_value(config->value, key, value);
  });
}

pdm_status pdm_config_get(const pdm_config* config, const char* key, char** out) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(out, "out");
    *out = copy_string(pdmala::get_config_value(config->value, key));
  });
}

pdm_status pdm_config_validate(const pdm_config* config) {
  return guarded([&] {
    require(config, "config");
    config->value.validate();
  });
}

pdm_status pdm_config_to_text(const pdm_config* config, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = copy_string(pdmala::to_text(config->value));
  });
}

pdm_status pdm_config_to_json(const pdm_config* config, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = copy_string(pdmala::to_json(config->value).dump(2));
  });
}

void pdm_config_free(pdm_config* config) { delete config; }

pdm_status pdm_dataset_simulate(const pdm_config* config, pdm_dataset** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = new pdm_dataset{pdmala::simulate_dataset(config->value)};
  });
}

pdm_status pdm_dataset_load(const char* path, pdm_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new pdm_dataset{pdmala::read_dataset(path)};
  });
}

pdm_status pdm_dataset_save(const pdm_dataset* dataset, const char* path) {
  return guarded([&] {
    require(dataset, "dataset");
    require(path, "path");
    pdmala::write_dataset(path, dataset->value);
  });
}

pdm_status pdm_dataset_to_json(const pdm_dataset* dataset, char** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    *out = copy_string(pdmala::to_json(dataset->value).dump(1));
  });
}

int64_t pdm_dataset_dimension(const pdm_dataset* dataset) { return dataset ? dataset->value.dimension() : 0; }

void pdm_dataset_free(pdm_dataset* dataset) { delete dataset; }

pdm_status pdm_tune(const pdm_config* config, const pdm_dataset* dataset, char** json_out) {
  return guarded([&] {
    require(config, "config");
    require(dataset, "dataset");
    require(json_out, "json_out");
    *json_out = copy_string(pdmala::to_json(pdmala::tune_single(config->value, dataset->value)).dump(2));
  });
}

pdm_status pdm_run_chain(const pdm_config* config, const pdm_dataset* dataset, pdm_progress_fn progress,
                         void* user, pdm_trace** trace_out, char** summary_out) {
  return guarded([&] {
    require(config, "config");
    require(dataset, "dataset");
    require(trace_out, "trace_out");
    pdmala::Progress p;
    if (progress) {
      p.interval = config->value.progress_interval;
      p.callback = [progress, user](pdmala::Index t, double rate) { progress(t, rate, user); };
    }
    pdmala::SingleRun run = pdmala::run_single(config->value, dataset->value, p);
    std::string summary = pdmala::to_json(run).dump(2);
    *trace_out = new pdm_trace{std::move(run.trace)};
    if (summary_out) *summary_out = copy_string(summary);
  });
}

pdm_status pdm_trace_read(const char* path, pdm_trace** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new pdm_trace{pdmala::read_trace(path)};
  });
}

pdm_status pdm_trace_write(const pdm_trace* trace, const char* path, const char* format) {
  return guarded([&] {
    require(trace, "trace");
    require(path, "path");
    const std::string f = format ? format : "binary";
    if (f == "binary") {
      pdmala::write_trace_binary(path, trace->value);
    } else if (f == "csv") {
      pdmala::write_trace_csv(std::string(path), trace->value);
    } else {
      throw pdmala::invalid_argument("trace format must be binary or csv");
    }
  });
}

int64_t pdm_trace_iterations(const pdm_trace* trace) { return trace ? trace->value.iterations() : 0; }

int64_t pdm_trace_dimension(const pdm_trace* trace) { return trace ? trace->value.dimension() : 0; }

double pdm_trace_acceptance_rate(const pdm_trace* trace) { return trace ? trace->value.acceptance_rate : 0.0; }

pdm_status pdm_trace_copy_states(const pdm_trace* trace, double* buffer, size_t length) {
  return guarded([&] {
    require(trace, "trace");
    require(buffer, "buffer");
    const auto& s = trace->value.states;
    if (length < static_cast<size_t>(s.size())) throw pdmala::invalid_argument("buffer too small for trace states");
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(buffer, s.rows(), s.cols()) = s;
  });
}

void pdm_trace_free(pdm_trace* trace) { delete trace; }

pdm_status pdm_diagnose(const pdm_trace* trace, const pdm_config* config, char** json_out) {
  return guarded([&] {
    require(trace, "trace");
    require(json_out, "json_out");
    pdmala::DiagnosticsOptions options;
    options.univariate_ess = trace->value.adjusted;
    if (config) {
      options.max_lag = config->value.max_lag;
      options.burn_in = config->value.burn_in;
    }
    *json_out = copy_string(pdmala::to_json(pdmala::diagnose(trace->value, options)).dump(2));
  });
}

pdm_status pdm_check(const pdm_config* config, const pdm_dataset* dataset, char** json_out) {
  return guarded([&] {
    require(config, "config");
    require(dataset, "dataset");
    require(json_out, "json_out");
    const auto entry = pdmala::configured_entry(config->value);
    nlohmann::json j;
    j["label"] = entry.label;
    j["algorithm"] = pdmala::to_string(entry.algorithm);
    j["preconditioner"] = pdmala::to_string(entry.preconditioner);
    j["family"] = pdmala::to_string(dataset->value.family);
    j["step_size"] = config->value.step_size;
    j["reports"] = pdmala::to_json(pdmala::check_model(config->value, dataset->value));
    *json_out = copy_string(j.dump(2));
  });
}

pdm_status pdm_compare(const pdm_config* config, const pdm_dataset* dataset, const char* directory, pdm_log_fn log,
                       void* user, char** manifest_out) {
  return guarded([&] {
    require(config, "config");
    require(dataset, "dataset");
    require(directory, "directory");
    pdmala::ComparisonOptions options;
    if (log) options.log = [log, user](const std::string& message) { log(message.c_str(), user); };
    pdmala::write_bundle(config->value, dataset->value, directory, options);
    if (manifest_out) {
      std::ifstream in(std::string(directory) + "/manifest.json", std::ios::binary);
      if (!in) throw pdmala::Error(pdmala::ErrorCode::io, "cannot reopen manifest.json");
      std::ostringstream text;
      text << in.rdbuf();
      *manifest_out = copy_string(text.str());
    }
  });
}

pdm_status pdm_c2(double s, double h, int d, double log_det_g1, double log_det_g2, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = pdmala::c2(s, h, d, log_det_g1, log_det_g2);
  });
}

pdm_status pdm_pcmala_h_bound(const double* sigma, const double* g, size_t d, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = pdmala::pcmala_h_bound(pdmala::SpdMatrix(square(sigma, d)), pdmala::SpdMatrix(square(g, d)));
  });
}

pdm_status pdm_mmala_h_bound(const double* sigma, const double* trials, size_t d, double* out) {
  return guarded([&] {
    require(trials, "trials");
    require(out, "out");
    const pdmala::Vector l = Eigen::Map<const pdmala::Vector>(trials, static_cast<pdmala::Index>(d));
    *out = pdmala::mmala_h_bound(pdmala::SpdMatrix(square(sigma, d)), l);
  });
}

pdm_status pdm_pcula_check(double h, const double* g, const double* sigma, size_t d, double* lambda_max_out,
                           int* satisfied_out) {
  return guarded([&] {
    require(lambda_max_out, "lambda_max_out");
    const auto check = pdmala::pcula_spectral_check(h, square(g, d), pdmala::SpdMatrix(square(sigma, d)));
    *lambda_max_out = check.lambda_max;
    if (satisfied_out) *satisfied_out = check.verdict == pdmala::Verdict::satisfied ? 1 : 0;
  });
}

}  // extern "C"
