#pragma once

#include <optional>
#include <string>

#include "smpm/problems.hpp"
#include "smpm/rates.hpp"
#include "smpm/sampling.hpp"
#include "smpm/solver.hpp"

namespace smpm {

enum class LyapunovKind {
  kTheorem1,             // constant gamma, finite L_{h_i}
  kN1SimpleG,            // n = 1, g a scaled squared norm
  kAcceleratedPEmpty0,   // O(1/t^2), p_empty = 0
  kAcceleratedMuH0,      // O(1/t^2), mu_{h_i} = 0
  kSimilarity,           // delta-similar h_i, needs z tracking
  kFedTheorem,           // FedSMPM, uniform clients, f = 0
};

const char* to_string(LyapunovKind kind);
LyapunovKind lyapunov_kind_from_string(const std::string& name);

// Psi^t = wx(t) ||x - x*||^2 + wz sum_i ||z_i - x*||^2 + s(t) sum_i wu_i ||u_i - u_i*||^2.
// For the constant-stepsize kinds wx and s are fixed (s = 1); for the
// accelerated kinds they depend on gamma_{t-1}.
struct LyapunovSpec {
  LyapunovKind kind = LyapunovKind::kTheorem1;
  double x_weight = 1.0;
  double z_weight = 0.0;
  Vector u_weights;
  std::optional<RateReport> rate;  // linear kinds only
  // Accelerated kinds: wx(t) = 1 + gamma_{t-1} mu_hat, s(t) = gamma_{t-1}^2.
  double mu_hat = 0.0;
  std::optional<StepsizeSchedule> schedule;

  double x_weight_at(std::int64_t t) const;
  double u_scale_at(std::int64_t t) const;
  std::optional<double> rho() const { return rate ? std::optional<double>(rate->rho) : std::nullopt; }
  // rho^t Psi^0 for linear kinds, ((a-1)/(a+t-1))^2 Psi^0 for accelerated ones.
  double envelope(std::int64_t t, double psi0) const;
};

// Rate-calculator inputs that match a derived parameter set.
RateInputs rate_inputs(const ProblemInstance& instance, const SolverParams& params);

// Builds the weights of the requested theorem and checks its hypotheses.
LyapunovSpec make_lyapunov(LyapunovKind kind, const ProblemInstance& instance, const SolverParams& params);

// Weights for the FedSMPM theorem; k kept coordinates, uniform batch size s.
LyapunovSpec make_fed_lyapunov(const ProblemInstance& instance, const SolverParams& params, int k, int s);

// From-scratch evaluation.
double lyapunov(const SolverState& state, const ProblemInstance& instance, const LyapunovSpec& spec);
// Uses the cached per-client error norms in the state.
double lyapunov_cached(const SolverState& state, const ProblemInstance& instance, const LyapunovSpec& spec);

// E[Psi^{t+1} | state], walking every subset and both empty-set branches.
double conditional_expected_lyapunov(const SolverState& state, const ProblemInstance& instance,
                                     const SolverParams& params, const SamplingDistribution& dist,
                                     const LyapunovSpec& spec);

}  // namespace smpm
