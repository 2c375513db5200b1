#include "smpm/smpm.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "smpm/config.hpp"
#include "smpm/errors.hpp"
#include "smpm/experiment.hpp"
#include "smpm/sampling.hpp"

struct smpm_config {
  smpm::RunConfig cfg;
};

namespace {

thread_local std::string g_last_error;

smpm_status status_of(smpm::ErrorCode code) {
  switch (code) {
    case smpm::ErrorCode::kConfiguration: return SMPM_ERR_CONFIGURATION;
    case smpm::ErrorCode::kInvalidProblem: return SMPM_ERR_INVALID_PROBLEM;
    case smpm::ErrorCode::kUnsupportedExact: return SMPM_ERR_UNSUPPORTED_EXACT;
    case smpm::ErrorCode::kDegenerateSample: return SMPM_ERR_DEGENERATE_SAMPLE;
    case smpm::ErrorCode::kUnsupported: return SMPM_ERR_UNSUPPORTED;
    case smpm::ErrorCode::kHypothesisViolation: return SMPM_ERR_HYPOTHESIS_VIOLATION;
    case smpm::ErrorCode::kNumericalDivergence: return SMPM_ERR_NUMERICAL_DIVERGENCE;
    case smpm::ErrorCode::kIo: return SMPM_ERR_IO;
  }
  return SMPM_ERR_INTERNAL;
}

smpm_status failure(smpm_status s, const std::string& message) {
  g_last_error = message;
  return s;
}

template <class F>
smpm_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return SMPM_OK;
  } catch (const smpm::Error& e) {
    return failure(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return failure(SMPM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return failure(SMPM_ERR_INTERNAL, e.what());
  } catch (...) {
    return failure(SMPM_ERR_INTERNAL, "unknown error");
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void need(bool ok, const char* what) {
  if (!ok) throw smpm::Error(smpm::ErrorCode::kConfiguration, what);
}

}  // namespace

#define SMPM_REQUIRE_ARG(cond, msg) \
  if (!(cond)) return failure(SMPM_ERR_INVALID_ARGUMENT, msg)

extern "C" {

const char* smpm_last_error(void) { return g_last_error.c_str(); }

const char* smpm_status_name(smpm_status s) {
  switch (s) {
    case SMPM_OK: return "OK";
    case SMPM_ERR_CONFIGURATION: return "CONFIGURATION";
    case SMPM_ERR_INVALID_PROBLEM: return "INVALID_PROBLEM";
    case SMPM_ERR_UNSUPPORTED_EXACT: return "UNSUPPORTED_EXACT";
    case SMPM_ERR_DEGENERATE_SAMPLE: return "DEGENERATE_SAMPLE";
    case SMPM_ERR_UNSUPPORTED: return "UNSUPPORTED";
    case SMPM_ERR_HYPOTHESIS_VIOLATION: return "HYPOTHESIS_VIOLATION";
    case SMPM_ERR_NUMERICAL_DIVERGENCE: return "NUMERICAL_DIVERGENCE";
    case SMPM_ERR_IO: return "IO";
    case SMPM_ERR_INVALID_ARGUMENT: return "INVALID_ARGUMENT";
    case SMPM_ERR_INTERNAL: return "INTERNAL";
  }
  return "UNKNOWN";
}

smpm_status smpm_config_from_json(const char* json, smpm_config** out) {
  SMPM_REQUIRE_ARG(json && out, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new smpm_config{smpm::config_from_json(json)}; });
}

smpm_status smpm_config_from_file(const char* path, smpm_config** out) {
  SMPM_REQUIRE_ARG(path && out, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new smpm_config{smpm::load_config(path)}; });
}

smpm_status smpm_config_from_preset(const char* name, const char* scale, smpm_config** out) {
  SMPM_REQUIRE_ARG(name && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    const auto s = smpm::scale_from_string(scale ? scale : "paper");
    *out = new smpm_config{smpm::preset(name, s)};
  });
}

void smpm_config_free(smpm_config* config) { delete config; }

smpm_status smpm_config_set_seed(smpm_config* config, uint64_t seed) {
  SMPM_REQUIRE_ARG(config, "null configuration");
  config->cfg.seed = seed;
  return guarded([] {});
}

smpm_status smpm_config_set_replicates(smpm_config* config, int replicates) {
  SMPM_REQUIRE_ARG(config, "null configuration");
  SMPM_REQUIRE_ARG(replicates >= 1, "replicates must be at least 1");
  config->cfg.replicates = replicates;
  return guarded([] {});
}

smpm_status smpm_config_set_iterations(smpm_config* config, int64_t T) {
  SMPM_REQUIRE_ARG(config, "null configuration");
  SMPM_REQUIRE_ARG(T >= 0, "T must be nonnegative");
  config->cfg.T = T;
  return guarded([] {});
}

smpm_status smpm_config_set_output(smpm_config* config, const char* dir) {
  SMPM_REQUIRE_ARG(config && dir, "null argument");
  config->cfg.output = dir;
  return guarded([] {});
}

smpm_status smpm_config_to_json(const smpm_config* config, char** out) {
  SMPM_REQUIRE_ARG(config && out, "null argument");
  *out = nullptr;
  return guarded([&] { *out = copy_string(smpm::config_to_json(config->cfg)); });
}

smpm_status smpm_rates_json(const smpm_config* config, char** out) {
  SMPM_REQUIRE_ARG(config && out, "null argument");
  *out = nullptr;
  return guarded([&] { *out = copy_string(smpm::rates_json(smpm::prepare(config->cfg))); });
}

smpm_status smpm_run(const smpm_config* config, char** summary) {
  SMPM_REQUIRE_ARG(config, "null configuration");
  if (summary) *summary = nullptr;
  return guarded([&] {
    need(!config->cfg.output.empty(), "output directory is empty");
    const auto result = smpm::run_experiment(config->cfg);
    smpm::write_outputs(result, config->cfg.output);
    if (summary) *summary = copy_string(smpm::summary_json(result));
  });
}

smpm_status smpm_preset_names(char** out) {
  SMPM_REQUIRE_ARG(out, "null argument");
  *out = nullptr;
  return guarded([&] {
    std::string s;
    for (const auto& n : smpm::preset_names()) s += n + "\n";
    *out = copy_string(s);
  });
}

smpm_status smpm_support_csv(const char* sampling_json, int n, char** out) {
  SMPM_REQUIRE_ARG(sampling_json && out, "null argument");
  SMPM_REQUIRE_ARG(n >= 1, "n must be at least 1");
  *out = nullptr;
  return guarded([&] {
    const auto dist = smpm::distribution_for(smpm::sampling_spec_from_json(sampling_json), n);
    *out = copy_string(smpm::support_csv(smpm::enumerate_support(dist)));
  });
}

void smpm_string_free(char* s) { std::free(s); }

}  // extern "C"
