#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smpm/config.hpp"
#include "smpm/fedsim.hpp"
#include "smpm/lyapunov.hpp"
#include "smpm/problems.hpp"
#include "smpm/sampling.hpp"
#include "smpm/solver.hpp"
#include "smpm/trace_io.hpp"

namespace smpm {

struct PreparedArm {
  ArmConfig config;
  SamplingDistribution dist;
  SolverParams params;
  std::optional<FedParams> fed;  // FedSMPM arms
  std::optional<LyapunovSpec> lyapunov;
  std::optional<StepsizePlan> plan;
  std::optional<ImportancePlan> importance;
};

struct PreparedExperiment {
  RunConfig config;
  ProblemInstance instance;
  Vector x0;
  std::vector<PreparedArm> arms;
};

// Builds the instance and every arm. A failed hypothesis is rethrown with the
// arm's name prepended and its error code kept.
PreparedExperiment prepare(const RunConfig& cfg);

// Every iteration up to 1000, then every 10th, and always the last one.
bool default_log_when(std::int64_t t, std::int64_t T);

struct ArmResult {
  std::string name;
  std::vector<std::vector<TraceRow>> replicates;
  std::vector<MeanRow> mean;  // empty when a replicate diverged
  double gamma0 = 0.0;
  std::optional<double> rho;
  std::optional<int> grid_index;
  std::optional<std::int64_t> diverged_at;  // earliest divergence over replicates
  std::optional<std::int64_t> iterations_to_target;
  std::optional<double> comm_to_target;  // mean parallel uplink at that point
  double final_sq_dist = 0.0;            // replicate mean, +inf when diverged
  std::optional<bool> overlay_ok;        // mean Psi <= 1.05 envelope at every logged t
};

struct ExperimentResult {
  RunConfig config;
  std::vector<ArmResult> arms;
  std::optional<std::string> best_grid_arm;  // lowest final error among grid arms
  std::optional<int> best_grid_index;
  double seconds = 0.0;
};

// Worker count from SMPM_THREADS, else the hardware concurrency.
int worker_count();

ExperimentResult run_experiment(const PreparedExperiment& prepared);
ExperimentResult run_experiment(const RunConfig& cfg);

std::string summary_json(const ExperimentResult& result);
// config.json, trace_<arm>.csv, mean_<arm>.csv and summary.json under dir.
void write_outputs(const ExperimentResult& result, const std::string& dir);

// Rates and plans of every arm without iterating, as JSON.
std::string rates_json(const PreparedExperiment& prepared);

}  // namespace smpm
