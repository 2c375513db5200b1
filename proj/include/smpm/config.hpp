#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smpm/problems.hpp"
#include "smpm/sampling.hpp"

namespace smpm {

// law: uniform_minibatch (s), singleton_weighted (weights), independent
// (weights), full_batch, explicit (support), importance (from the importance
// sampling plan).
struct SamplingSpec {
  std::string law = "uniform_minibatch";
  int s = 1;
  std::vector<double> weights;
  std::vector<SupportEntry> support;
};

// rule: constant (gamma), adaptive (mu, a), uniform_plan, importance_plan,
// fed_plan, similarity_plan.
struct ScheduleSpec {
  std::string rule = "constant";
  double gamma = 0.0;
  std::optional<double> mu;  // adaptive; defaults to the theorem's value
  double a = 5.5;
};

SamplingSpec sampling_spec_from_json(const std::string& text);
// Every law except importance, which needs an instance.
SamplingDistribution distribution_for(const SamplingSpec& spec, int n);

struct ArmConfig {
  std::string name;
  SamplingSpec sampling;
  ScheduleSpec schedule;
  std::optional<double> p_hat;
  std::optional<std::string> theorem;  // Lyapunov variant for the overlay
  std::optional<int> fed_k;            // run FedSMPM with rand-k
  std::optional<int> grid_index;
  bool track_z = false;
};

struct RunConfig {
  std::string preset;  // informational
  ProblemKind experiment = ProblemKind::kExp1;
  GeneratorParams problem = Exp1Params{};
  std::string instance_path;  // CUSTOM
  std::optional<double> delta;
  std::uint64_t problem_seed = 1;
  std::uint64_t seed = 0;
  int replicates = 1;
  std::int64_t T = 1000;
  double x0_fill = 0.0;
  std::optional<double> target;
  std::string output = "smpm_out";
  std::vector<ArmConfig> arms;
};

std::string config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, const std::string& path);

enum class Scale { kSmall, kPaper };
Scale scale_from_string(const std::string& name);

// exp1-alpha095, exp1-alpha05, exp1-alpha005, exp2, exp3-L50, exp3-L500, exp3-L5000.
std::vector<std::string> preset_names();
RunConfig preset(const std::string& name, Scale scale = Scale::kPaper);

}  // namespace smpm
