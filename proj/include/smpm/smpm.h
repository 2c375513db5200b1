#ifndef SMPM_SMPM_H
#define SMPM_SMPM_H

#include <stdint.h>

#if defined(_WIN32)
#define SMPM_API __declspec(dllexport)
#else
#define SMPM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum smpm_status {
  SMPM_OK = 0,
  SMPM_ERR_CONFIGURATION = 1,
  SMPM_ERR_INVALID_PROBLEM = 2,
  SMPM_ERR_UNSUPPORTED_EXACT = 3,
  SMPM_ERR_DEGENERATE_SAMPLE = 4,
  SMPM_ERR_UNSUPPORTED = 5,
  SMPM_ERR_HYPOTHESIS_VIOLATION = 6,
  SMPM_ERR_NUMERICAL_DIVERGENCE = 7,
  SMPM_ERR_IO = 8,
  SMPM_ERR_INVALID_ARGUMENT = 9,
  SMPM_ERR_INTERNAL = 10
} smpm_status;

/* Opaque run configuration. */
typedef struct smpm_config smpm_config;

/* Message of the last failed call on this thread; empty after success. */
SMPM_API const char* smpm_last_error(void);
SMPM_API const char* smpm_status_name(smpm_status status);

SMPM_API smpm_status smpm_config_from_json(const char* json, smpm_config** out);
SMPM_API smpm_status smpm_config_from_file(const char* path, smpm_config** out);
/* scale is "small" or "paper". */
SMPM_API smpm_status smpm_config_from_preset(const char* name, const char* scale, smpm_config** out);
SMPM_API void smpm_config_free(smpm_config* config);

SMPM_API smpm_status smpm_config_set_seed(smpm_config* config, uint64_t seed);
SMPM_API smpm_status smpm_config_set_replicates(smpm_config* config, int replicates);
SMPM_API smpm_status smpm_config_set_iterations(smpm_config* config, int64_t T);
SMPM_API smpm_status smpm_config_set_output(smpm_config* config, const char* dir);

/* Strings returned through char** are owned by the caller; release them
   with smpm_string_free. */
SMPM_API smpm_status smpm_config_to_json(const smpm_config* config, char** out);
SMPM_API smpm_status smpm_rates_json(const smpm_config* config, char** out);
/* Runs every arm and writes the outputs to the configured directory; the
   summary JSON is returned when summary is non-null. */
SMPM_API smpm_status smpm_run(const smpm_config* config, char** summary);

/* Newline-separated preset names. */
SMPM_API smpm_status smpm_preset_names(char** out);
/* Support of a sampling law given as JSON, e.g. {"law":"uniform_minibatch","s":2}. */
SMPM_API smpm_status smpm_support_csv(const char* sampling_json, int n, char** out);

SMPM_API void smpm_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
