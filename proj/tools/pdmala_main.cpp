// pdmala command-line front end. Everything goes through the C API.

#include "pdmala/pdmala.h"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr const char* kIncomplete = "INCOMPLETE";

struct Failure {
  pdm_status status;
  std::string message;
};

void check(pdm_status status) {
  if (status != PDM_OK) throw Failure{status, pdm_last_error()};
}

struct ConfigFree {
  void operator()(pdm_config* c) const { pdm_config_free(c); }
};
struct DatasetFree {
  void operator()(pdm_dataset* d) const { pdm_dataset_free(d); }
};
struct TraceFree {
  void operator()(pdm_trace* t) const { pdm_trace_free(t); }
};
using ConfigPtr = std::unique_ptr<pdm_config, ConfigFree>;
using DatasetPtr = std::unique_ptr<pdm_dataset, DatasetFree>;
using TracePtr = std::unique_ptr<pdm_trace, TraceFree>;

// Takes ownership of a C API string.
std::string take(char* s) {
  std::string out = s ? s : "";
  pdm_string_free(s);
  return out;
}

void print(const std::string& text) {
  std::fwrite(text.data(), 1, text.size(), stdout);
  if (text.empty() || text.back() != '\n') std::fputc('\n', stdout);
  std::fflush(stdout);
}

void error_record(const std::string& status, const std::string& message, int code) {
  nlohmann::json j{{"error", message}, {"status", status}, {"code", code}};
  std::cerr << j.dump() << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{PDM_ERR_IO, "cannot open config file '" + path + "'"};
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

struct Options {
  std::string config_path;
  std::string profile;
  std::vector<std::string> overrides;
  std::string output_dir;
  std::string dataset_path;

  // check shortcuts
  std::string model;
  std::string algo;
  std::string precond;
  std::optional<double> step_size;

  std::string trace_path;
};

ConfigPtr build_config(const Options& o) {
  pdm_config* raw = nullptr;
  if (!o.config_path.empty()) {
    std::string text = read_file(o.config_path);
    // A command-line profile wins over one named in the file.
    if (!o.profile.empty()) text += "\nprofile = " + o.profile + "\n";
    check(pdm_config_parse(text.c_str(), &raw));
  } else {
    check(pdm_config_new(o.profile.empty() ? nullptr : o.profile.c_str(), &raw));
  }
  ConfigPtr config(raw);

  std::vector<std::string> bad;
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      bad.push_back(kv);
      continue;
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(kv.substr(0, eq));
    const std::string value = trim(kv.substr(eq + 1));
    if (pdm_config_set(config.get(), key.c_str(), value.c_str()) != PDM_OK) bad.push_back(key + ": " + pdm_last_error());
  }
  if (!bad.empty()) {
    std::string message = "invalid overrides:";
    for (const auto& b : bad) message += " [" + b + "]";
    throw Failure{PDM_ERR_PARSE, message};
  }

  if (!o.model.empty()) check(pdm_config_set(config.get(), "model.family", o.model.c_str()));
  if (!o.algo.empty()) check(pdm_config_set(config.get(), "sampler.algorithm", o.algo.c_str()));
  if (!o.precond.empty()) check(pdm_config_set(config.get(), "sampler.preconditioner", o.precond.c_str()));
  if (o.step_size) {
    std::ostringstream s;
    s.precision(17);
    s << *o.step_size;
    check(pdm_config_set(config.get(), "sampler.step_size", s.str().c_str()));
    check(pdm_config_set(config.get(), "sampler.auto_tune", "false"));
  }
  check(pdm_config_validate(config.get()));
  return config;
}

DatasetPtr build_dataset(const Options& o, const pdm_config* config) {
  pdm_dataset* raw = nullptr;
  if (!o.dataset_path.empty())
    check(pdm_dataset_load(o.dataset_path.c_str(), &raw));
  else
    check(pdm_dataset_simulate(config, &raw));
  return DatasetPtr(raw);
}

// Output directory that carries an INCOMPLETE marker until finish().
class OutputDir {
 public:
  explicit OutputDir(const std::string& path) : path_(path) {
    std::error_code ec;
    fs::create_directories(path_, ec);
    if (ec) throw Failure{PDM_ERR_IO, "cannot create output directory '" + path + "': " + ec.message()};
    std::ofstream(path_ / kIncomplete) << "in progress\n";
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  void finish() {
    std::error_code ec;
    fs::remove(path_ / kIncomplete, ec);
  }

 private:
  fs::path path_;
};

std::string config_value(const pdm_config* config, const char* key) {
  char* out = nullptr;
  check(pdm_config_get(config, key, &out));
  return take(out);
}

int cmd_simulate(const Options& o) {
  auto config = build_config(o);
  OutputDir out(o.output_dir);
  auto dataset = build_dataset(o, config.get());
  check(pdm_dataset_save(dataset.get(), out.file("dataset.json").c_str()));
  char* json = nullptr;
  check(pdm_dataset_to_json(dataset.get(), &json));
  out.finish();
  print(take(json));
  return 0;
}

int cmd_tune(const Options& o) {
  auto config = build_config(o);
  auto dataset = build_dataset(o, config.get());
  char* json = nullptr;
  check(pdm_tune(config.get(), dataset.get(), &json));
  print(take(json));
  return 0;
}

void progress_line(int64_t iteration, double rate, void*) {
  std::fprintf(stderr, "iteration %lld acceptance %.4f\n", static_cast<long long>(iteration), rate);
  std::fflush(stderr);
}

int cmd_run(const Options& o) {
  auto config = build_config(o);
  OutputDir out(o.output_dir);
  auto dataset = build_dataset(o, config.get());
  const std::string format = config_value(config.get(), "output.trace_format");
  pdm_trace* raw = nullptr;
  char* summary = nullptr;
  check(pdm_run_chain(config.get(), dataset.get(), progress_line, nullptr, &raw, &summary));
  TracePtr trace(raw);
  const std::string text = take(summary);
  const std::string trace_file = format == "csv" ? "trace.csv" : "trace.bin";
  check(pdm_trace_write(trace.get(), out.file(trace_file).c_str(), format.c_str()));
  std::ofstream(out.file("run.json"), std::ios::binary) << text << '\n';
  out.finish();
  print(text);
  return 0;
}

int cmd_diagnose(const Options& o) {
  auto config = build_config(o);
  pdm_trace* raw = nullptr;
  check(pdm_trace_read(o.trace_path.c_str(), &raw));
  TracePtr trace(raw);
  char* json = nullptr;
  check(pdm_diagnose(trace.get(), config.get(), &json));
  print(take(json));
  return 0;
}

int cmd_check(const Options& o) {
  auto config = build_config(o);
  auto dataset = build_dataset(o, config.get());
  char* json = nullptr;
  check(pdm_check(config.get(), dataset.get(), &json));
  print(take(json));
  return 0;
}

void log_line(const char* message, void*) {
  std::fprintf(stderr, "%s\n", message);
  std::fflush(stderr);
}

int cmd_compare(const Options& o) {
  auto config = build_config(o);
  auto dataset = build_dataset(o, config.get());
  char* manifest = nullptr;
  // The library manages the INCOMPLETE marker of the bundle itself.
  check(pdm_compare(config.get(), dataset.get(), o.output_dir.c_str(), log_line, nullptr, &manifest));
  print(take(manifest));
  return 0;
}

std::string default_output_dir() {
  const char* env = std::getenv("PDMALA_OUTPUT_DIR");
  return env && *env ? env : "pdmala-output";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Position-dependent MALA samplers for spatial GLMMs"};
  app.set_version_flag("--version", pdm_version());
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  o.output_dir = default_output_dir();
  app.add_option("-c,--config", o.config_path, "Config file (key = value lines)")->check(CLI::ExistingFile);
  app.add_option("-p,--profile", o.profile, "Preset: desk or paper");
  app.add_option("-s,--set", o.overrides, "Override one config key, KEY=VALUE")->allow_extra_args(false);
  app.add_option("-o,--out", o.output_dir, "Output directory (default $PDMALA_OUTPUT_DIR or ./pdmala-output)");

  auto* simulate = app.add_subcommand("simulate", "Simulate a dataset and write dataset.json");
  auto* tune = app.add_subcommand("tune", "Tune the step size of the configured sampler");
  auto* run = app.add_subcommand("run", "Run one chain; progress goes to stderr");
  auto* diagnose = app.add_subcommand("diagnose", "Diagnostics of a stored trace");
  auto* check_cmd = app.add_subcommand("check", "Ergodicity checks for the configured sampler");
  auto* compare = app.add_subcommand("compare", "Run the full comparison and write the bundle");

  for (auto* sub : {simulate, tune, run, check_cmd, compare})
    sub->add_option("-d,--dataset", o.dataset_path, "Dataset JSON; simulated from the config when absent")
        ->check(CLI::ExistingFile);
  diagnose->add_option("trace", o.trace_path, "Trace file (binary or csv)")->required()->check(CLI::ExistingFile);
  check_cmd->add_option("--model", o.model, "GLMM family: binomial or poisson");
  check_cmd->add_option("--algo", o.algo, "Algorithm: rwm, pcmala, mmala, pmala, pcula");
  check_cmd->add_option("--precond", o.precond, "Preconditioner kind");
  check_cmd->add_option("--step-size", o.step_size, "Step size (disables tuning)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*tune) return cmd_tune(o);
    if (*run) return cmd_run(o);
    if (*diagnose) return cmd_diagnose(o);
    if (*check_cmd) return cmd_check(o);
    if (*compare) return cmd_compare(o);
  } catch (const Failure& f) {
    error_record(pdm_status_name(f.status), f.message, static_cast<int>(f.status));
    return kExitRuntime;
  } catch (const std::exception& e) {
    error_record(pdm_status_name(PDM_ERR_INTERNAL), e.what(), PDM_ERR_INTERNAL);
    return kExitRuntime;
  }
  std::cerr << app.help();
  return kExitUsage;
}
