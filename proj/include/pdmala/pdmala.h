/* C interface to the pdmala sampler library.
 *
 * Objects are opaque handles created by *_new / *_load / *_simulate style
 * functions and released with the matching *_free. Every fallible call
 * returns a pdm_status; on failure pdm_last_error() describes the problem
 * for the calling thread. Strings returned through char** out-parameters
 * are owned by the caller and released with pdm_string_free.
 *
 * Matrices are passed as column-major arrays of d*d doubles. */
#ifndef PDMALA_H
#define PDMALA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PDM_API __declspec(dllexport)
#else
#define PDM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pdm_status {
  PDM_OK = 0,
  PDM_ERR_INVALID_ARGUMENT = 1,
  PDM_ERR_NUMERICAL = 2,
  PDM_ERR_CONVERGENCE = 3,
  PDM_ERR_IO = 4,
  PDM_ERR_PARSE = 5,
  PDM_ERR_INTERNAL = 99
} pdm_status;

typedef struct pdm_config pdm_config;
typedef struct pdm_dataset pdm_dataset;
typedef struct pdm_trace pdm_trace;

/* Called with (iteration, running acceptance rate, user data). */
typedef void (*pdm_progress_fn)(int64_t iteration, double acceptance_rate, void* user);
/* Called with one human-readable line. */
typedef void (*pdm_log_fn)(const char* message, void* user);

PDM_API const char* pdm_version(void);
/* Message of the last failed call on this thread; "" if none. */
PDM_API const char* pdm_last_error(void);
PDM_API const char* pdm_status_name(pdm_status status);
PDM_API void pdm_string_free(char* s);

/* Configuration */
PDM_API pdm_status pdm_config_new(const char* profile, pdm_config** out);
PDM_API pdm_status pdm_config_parse(const char* text, pdm_config** out);
PDM_API pdm_status pdm_config_load(const char* path, pdm_config** out);
PDM_API pdm_status pdm_config_set(pdm_config* config, const char* key, const char* value);
PDM_API pdm_status pdm_config_get(const pdm_config* config, const char* key, char** out);
PDM_API pdm_status pdm_config_validate(const pdm_config* config);
PDM_API pdm_status pdm_config_to_text(const pdm_config* config, char** out);
PDM_API pdm_status pdm_config_to_json(const pdm_config* config, char** out);
PDM_API void pdm_config_free(pdm_config* config);

/* Datasets */
PDM_API pdm_status pdm_dataset_simulate(const pdm_config* config, pdm_dataset** out);
PDM_API pdm_status pdm_dataset_load(const char* path, pdm_dataset** out);
PDM_API pdm_status pdm_dataset_save(const pdm_dataset* dataset, const char* path);
PDM_API pdm_status pdm_dataset_to_json(const pdm_dataset* dataset, char** out);
PDM_API int64_t pdm_dataset_dimension(const pdm_dataset* dataset);
PDM_API void pdm_dataset_free(pdm_dataset* dataset);

/* Single chains, driven by the sampler.* configuration keys. */
PDM_API pdm_status pdm_tune(const pdm_config* config, const pdm_dataset* dataset, char** json_out);
/* summary_out may be NULL. progress may be NULL; it is called every
 * output.progress_interval iterations. */
PDM_API pdm_status pdm_run_chain(const pdm_config* config, const pdm_dataset* dataset,
                                 pdm_progress_fn progress, void* user, pdm_trace** trace_out,
                                 char** summary_out);

/* Traces */
PDM_API pdm_status pdm_trace_read(const char* path, pdm_trace** out);
/* format is "binary" or "csv". */
PDM_API pdm_status pdm_trace_write(const pdm_trace* trace, const char* path, const char* format);
PDM_API int64_t pdm_trace_iterations(const pdm_trace* trace);
PDM_API int64_t pdm_trace_dimension(const pdm_trace* trace);
PDM_API double pdm_trace_acceptance_rate(const pdm_trace* trace);
/* Copies the n x m states row by row into buffer (length >= n*m). */
PDM_API pdm_status pdm_trace_copy_states(const pdm_trace* trace, double* buffer, size_t length);
PDM_API void pdm_trace_free(pdm_trace* trace);

/* Diagnostics of one trace with the diagnostics.* and run.burn_in keys;
 * config may be NULL for defaults. */
PDM_API pdm_status pdm_diagnose(const pdm_trace* trace, const pdm_config* config, char** json_out);

/* Ergodicity checks for the configured sampler and step size. */
PDM_API pdm_status pdm_check(const pdm_config* config, const pdm_dataset* dataset, char** json_out);

/* Full comparison bundle written into directory; manifest_out may be NULL. */
PDM_API pdm_status pdm_compare(const pdm_config* config, const pdm_dataset* dataset, const char* directory,
                               pdm_log_fn log, void* user, char** manifest_out);

/* Low-level numerics */
PDM_API pdm_status pdm_c2(double s, double h, int d, double log_det_g1, double log_det_g2, double* out);
PDM_API pdm_status pdm_pcmala_h_bound(const double* sigma, const double* g, size_t d, double* out);
PDM_API pdm_status pdm_mmala_h_bound(const double* sigma, const double* trials, size_t d, double* out);
/* satisfied_out receives 1 when the largest eigenvalue of A^T A is below 1. */
PDM_API pdm_status pdm_pcula_check(double h, const double* g, const double* sigma, size_t d,
                                   double* lambda_max_out, int* satisfied_out);

#ifdef __cplusplus
}
#endif

#endif
