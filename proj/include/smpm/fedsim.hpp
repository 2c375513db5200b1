#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "smpm/problems.hpp"
#include "smpm/rates.hpp"
#include "smpm/sampling.hpp"
#include "smpm/solver.hpp"

namespace smpm {

struct RandKMask {
  std::vector<int> kept;  // sorted, 0-based
};

// What crosses the client -> server boundary: k coordinates and their
// unscaled values. Never a dense vector.
struct CompressedMessage {
  int client = -1;
  std::vector<int> indices;
  std::vector<double> values;
};

std::pair<CompressedMessage, RandKMask> compress(const Vector& v, int k, Rng& rng);

// Coordinatewise aggregation: x_hat_j + (sum of received values at j)/s_j when
// s_j > 0, otherwise x_hat_j with probability p_hat and x_prev_j otherwise. One
// coin per uncovered coordinate, drawn in increasing j.
Vector rescale(const std::vector<CompressedMessage>& messages, const Vector& x_hat, const Vector& x_prev,
               double p_hat, Rng& rng);

struct CommLedger {
  std::int64_t rounds = 0;
  std::int64_t uplink_parallel_reals = 0;
  std::int64_t uplink_total_reals = 0;
  std::int64_t downlink_reals = 0;
};

struct RoundRecord {
  std::int64_t t = 0;
  SubsetSample omega;
  std::vector<CompressedMessage> messages;
  std::int64_t uplink_parallel_reals = 0;
  std::int64_t uplink_total_reals = 0;
  std::int64_t downlink_reals = 0;
};

struct FedParams {
  SolverParams solver;
  int k = 1;
  double p_check_empty = 0.0;
  Vector effective_p;
  Vector effective_tilde_p;
  std::optional<FedTheoremRate> theorem;
  std::optional<StepsizePlan> plan;
};

// Generic path: parameters from the compressed view of dist. With
// theorem_exact the instance and law must match the FedSMPM theorem (f = g = 0,
// uniform L_h and mu_h > 0, uniform minibatch), and the theorem's rate and
// stepsize plan are attached. Without a gamma the plan's gamma is used.
FedParams derive_fed_params(const ProblemInstance& instance, const SamplingDistribution& dist, int k,
                            std::optional<double> gamma, bool theorem_exact);

RoundRecord fed_step(SolverState& state, const ProblemInstance& instance, const FedParams& params,
                     const SamplingDistribution& dist, AlgorithmStreams& streams, CommLedger& ledger,
                     StepWorkspace& ws);

using FedMetricSink = std::function<void(const IterationMetrics&, const CommLedger&)>;

struct FedRunResult {
  SolverState state;
  CommLedger ledger;
};

FedRunResult fed_run(const ProblemInstance& instance, const FedParams& params, const SamplingDistribution& dist,
                     AlgorithmStreams& streams, std::int64_t T, SolverState state, const FedMetricSink& sink,
                     const RunOptions& options = {});

}  // namespace smpm
