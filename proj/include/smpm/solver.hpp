#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <variant>

#include "smpm/problems.hpp"
#include "smpm/rng.hpp"
#include "smpm/sampling.hpp"

namespace smpm {

class StepsizeSchedule {
 public:
  struct Constant {
    double gamma;
  };
  // gamma_t = 2/(mu (a + t)); t = -1 is allowed and gives 2/(mu (a - 1)).
  struct Adaptive {
    double mu;
    double a;
  };

  static StepsizeSchedule constant(double gamma);
  static StepsizeSchedule adaptive(double mu, double a);

  double gamma(std::int64_t t) const;
  bool is_constant() const { return std::holds_alternative<Constant>(rule_); }
  const std::variant<Constant, Adaptive>& rule() const { return rule_; }

 private:
  explicit StepsizeSchedule(std::variant<Constant, Adaptive> rule) : rule_(rule) {}
  std::variant<Constant, Adaptive> rule_;
};

struct SolverParams {
  Vector eta;
  double p_hat = 1.0;
  double p_bar = 0.0;
  double mu_hat_h = 0.0;
  StepsizeSchedule schedule = StepsizeSchedule::constant(1.0);
  bool track_z = false;
  // Sampling quantities the parameters were derived from.
  double p_empty = 0.0;
  Vector p;
  Vector tilde_p;
};

// Theorem-driven parameters. With no explicit p_hat the default
// p_hat = 1/(1 + gamma mu_hat_h) is used, which makes p_bar = p_empty.
SolverParams derive_params(const ProblemInstance& instance, const SamplingDistribution& dist,
                           const StepsizeSchedule& schedule, std::optional<double> explicit_p_hat = std::nullopt,
                           bool track_z = false);
// Same, with tilde_p supplied by the caller (e.g. a Monte-Carlo estimate for
// laws too large to enumerate).
SolverParams derive_params(const ProblemInstance& instance, const SamplingDistribution& dist, const Vector& tilde_p,
                           const StepsizeSchedule& schedule, std::optional<double> explicit_p_hat = std::nullopt,
                           bool track_z = false);

// Largest mu the adaptive schedule may use with this instance and law.
double adaptive_mu_limit(const ProblemInstance& instance, const SamplingDistribution& dist);

struct SolverState {
  std::int64_t t = 0;
  Vector x;
  Matrix u;  // d x n
  Vector u_bar;
  std::optional<Matrix> z;
  // Cached ||u_i - u_i*||^2 and ||z_i - x*||^2, refreshed for touched clients.
  Vector dual_sq;
  Vector z_sq;
};

// u_i^0 = grad h_i(x0) for smooth h_i and 0 otherwise; z_i^0 = x0.
SolverState initial_state(const ProblemInstance& instance, const Vector& x0, bool track_z = false);
// Starts from the reference pair (x*, u*).
SolverState reference_state(const ProblemInstance& instance, bool track_z = false);
// Recomputes u_bar and the cached error norms from scratch.
void resync(SolverState& state, const ProblemInstance& instance);

// Substreams of one algorithm run: subset draws, the empty-set / rescale
// coins, and the root from which per-round, per-client mask streams split.
struct AlgorithmStreams {
  explicit AlgorithmStreams(std::uint64_t seed);
  Rng omega;
  Rng coin;
  Rng mask_root;
};

struct StepWorkspace {
  Vector v;
  Vector x_hat;
  Vector grad;
  Vector y;
  Vector du;
  Vector sum;
  SubsetSample omega;
};

inline constexpr std::int64_t kResyncPeriod = 1024;
inline constexpr double kDivergenceNorm = 1e12;

// x_hat = prox_{gamma g}(x - gamma grad f(x) - gamma u_bar), the server half of a step.
void server_point(const SolverState& state, const ProblemInstance& instance, double gamma, StepWorkspace& ws);

// One iteration with a given subset; accept_x_hat is the coin used when omega is empty.
void apply_step(SolverState& state, const ProblemInstance& instance, const SolverParams& params,
                const SubsetSample& omega, bool accept_x_hat, StepWorkspace& ws);

void step(SolverState& state, const ProblemInstance& instance, const SolverParams& params,
          const SamplingDistribution& dist, AlgorithmStreams& streams, StepWorkspace& ws);

// Throws DivergenceError when x is non-finite or its norm exceeds kDivergenceNorm.
void check_divergence(const SolverState& state);

struct IterationMetrics {
  std::int64_t t;
  double sq_dist;
  std::optional<double> lyapunov;
  double dual_residual;  // max_i ||u_i - u_i*||
};

using MetricSink = std::function<void(const IterationMetrics&)>;

struct LyapunovSpec;

struct RunOptions {
  const LyapunovSpec* lyapunov = nullptr;
  // Which iterations reach the sink; all of them when empty.
  std::function<bool(std::int64_t)> log_when;
};

SolverState run(const ProblemInstance& instance, const SolverParams& params, const SamplingDistribution& dist,
                AlgorithmStreams& streams, std::int64_t T, SolverState state, const MetricSink& sink,
                const RunOptions& options = {});

IterationMetrics measure(const SolverState& state, const ProblemInstance& instance, const LyapunovSpec* spec);

// Reference Point-SAGA iteration for f = g = 0 and |Omega| = 1.
std::pair<Vector, Matrix> point_saga_step(const Vector& x, const Matrix& u, int j, double gamma,
                                          const std::vector<ProxOracle>& h);

struct ImportancePlan {
  Vector b;
  Vector p;
  double gamma = 0.0;
  double L_bar = 0.0;  // ((1/n) sum sqrt(L_i))^2
  double complexity = 0.0;
};

ImportancePlan importance_plan(const Vector& L_h, double mu_f, double mu_g, double L_f, double max_L);

}  // namespace smpm
