#include "smpm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smpm/errors.hpp"
#include "smpm/lyapunov.hpp"

namespace smpm {
namespace {

constexpr double kTol = 1e-12;

}  // namespace

StepsizeSchedule StepsizeSchedule::constant(double gamma) {
  require(std::isfinite(gamma) && gamma > 0.0, ErrorCode::kConfiguration, "constant stepsize must be positive");
  return StepsizeSchedule(Constant{gamma});
}

StepsizeSchedule StepsizeSchedule::adaptive(double mu, double a) {
  require(std::isfinite(mu) && mu > 0.0, ErrorCode::kConfiguration, "adaptive schedule needs mu > 0");
  require(a > 5.0, ErrorCode::kConfiguration, "adaptive schedule needs a > 5");
  return StepsizeSchedule(Adaptive{mu, a});
}

double StepsizeSchedule::gamma(std::int64_t t) const {
  if (const auto* c = std::get_if<Constant>(&rule_)) return c->gamma;
  const auto& a = std::get<Adaptive>(rule_);
  return 2.0 / (a.mu * (a.a + static_cast<double>(t)));
}

SolverParams derive_params(const ProblemInstance& inst, const SamplingDistribution& dist,
                           const StepsizeSchedule& schedule, std::optional<double> explicit_p_hat, bool track_z) {
  return derive_params(inst, dist, dist.tilde_p(), schedule, explicit_p_hat, track_z);
}

SolverParams derive_params(const ProblemInstance& inst, const SamplingDistribution& dist, const Vector& tilde_p,
                           const StepsizeSchedule& schedule, std::optional<double> explicit_p_hat, bool track_z) {
  require(dist.n() == inst.n, ErrorCode::kConfiguration, "sampling law and instance disagree on n");
  const int n = inst.n;
  const double L_f = inst.f.L();
  const double mu_f = inst.f.mu();
  const double mu_g = inst.g.mu();
  if (explicit_p_hat)
    require(*explicit_p_hat >= 0.0 && *explicit_p_hat <= 1.0, ErrorCode::kConfiguration, "p_hat must lie in [0,1]");

  SolverParams out;
  out.schedule = schedule;
  out.track_z = track_z;
  out.p_empty = dist.p_empty();
  out.p = dist.p();
  require(tilde_p.size() == inst.n && (tilde_p.array() > 0.0).all(), ErrorCode::kConfiguration,
          "tilde_p must be positive with one entry per client");
  out.tilde_p = tilde_p;
  const double pe = out.p_empty;

  // e_i = 1/(n tilde_p_i); eta_i is e_i scaled by (1 - p_empty + p_bar)/(1 - p_empty).
  const Vector e = (static_cast<double>(n) * out.tilde_p).cwiseInverse();

  if (const auto* c = std::get_if<StepsizeSchedule::Constant>(&schedule.rule())) {
    const double gamma = c->gamma;
    require(L_f == 0.0 || gamma < 2.0 / L_f, ErrorCode::kHypothesisViolation,
            "constant stepsize must satisfy gamma < 2/L_f");
    double m0 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) m0 = std::min(m0, 2.0 * e[i] * cocoercive_modulus(inst.h[i].mu(), inst.h[i].L()));
    if (pe == 0.0) {
      out.eta = e;
      out.mu_hat_h = m0;
      out.p_bar = 0.0;
      out.p_hat = explicit_p_hat.value_or(1.0 / (1.0 + gamma * m0));
    } else if (!explicit_p_hat) {
      const double scale = 1.0 / (1.0 - pe);
      out.eta = scale * e;
      out.mu_hat_h = scale * m0;
      out.p_hat = 1.0 / (1.0 + gamma * out.mu_hat_h);
      out.p_bar = pe;
    } else {
      // Solve p_bar = pe v (1 + gamma mu_hat) with mu_hat = m0 (1 - pe + p_bar)/(1 - pe).
      const double v = *explicit_p_hat;
      const double denom = 1.0 - pe * v * gamma * m0 / (1.0 - pe);
      require(denom > 0.0, ErrorCode::kHypothesisViolation, "explicit p_hat admits no consistent p_bar");
      out.p_bar = pe * v * (1.0 + gamma * m0) / denom;
      const double scale = (1.0 - pe + out.p_bar) / (1.0 - pe);
      out.eta = scale * e;
      out.mu_hat_h = scale * m0;
      out.p_hat = v;
      require(v <= (1.0 + kTol) / (1.0 + gamma * out.mu_hat_h), ErrorCode::kHypothesisViolation,
              "explicit p_hat exceeds 1/(1 + gamma mu_hat_h)");
    }
  } else {
    const auto& a = std::get<StepsizeSchedule::Adaptive>(schedule.rule());
    const double gamma0 = schedule.gamma(0);
    require(L_f + mu_f == 0.0 || gamma0 <= 2.0 / (L_f + mu_f) * (1.0 + kTol), ErrorCode::kHypothesisViolation,
            "adaptive schedule needs gamma_0 <= 2/(L_f + mu_f)");
    double mu_theorem;
    if (pe == 0.0) {
      out.eta = e;
      double m0 = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) m0 = std::min(m0, 2.0 * e[i] * inst.h[i].mu());
      out.mu_hat_h = m0;
      out.p_bar = 0.0;
      out.p_hat = explicit_p_hat.value_or(1.0);
      mu_theorem = std::max({mu_f, mu_g / 2.0, m0 / 2.0});
    } else {
      bool any_mu_h = false;
      for (const auto& hi : inst.h) any_mu_h = any_mu_h || hi.mu() > 0.0;
      require(!any_mu_h, ErrorCode::kUnsupported,
              "adaptive stepsizes with p_empty > 0 need mu_{h_i} = 0 for every i");
      require(!explicit_p_hat || *explicit_p_hat == 1.0, ErrorCode::kHypothesisViolation,
              "adaptive stepsizes with p_empty > 0 need p_hat = 1");
      out.eta = e / (1.0 - pe);
      out.mu_hat_h = 0.0;
      out.p_hat = 1.0;
      out.p_bar = pe;
      mu_theorem = std::max(mu_f, mu_g / 2.0);
    }
    require(mu_theorem > 0.0, ErrorCode::kHypothesisViolation, "adaptive schedule needs strong convexity");
    require(a.mu <= mu_theorem * (1.0 + kTol), ErrorCode::kHypothesisViolation,
            "adaptive schedule mu exceeds the strong convexity the theorem provides");
  }
  return out;
}

double adaptive_mu_limit(const ProblemInstance& inst, const SamplingDistribution& dist) {
  const double mu_f = inst.f.mu();
  const double mu_g = inst.g.mu();
  if (dist.p_empty() > 0.0) return std::max(mu_f, mu_g / 2.0);
  const Vector& tp = dist.tilde_p();
  double m0 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < inst.n; ++i) m0 = std::min(m0, 2.0 * inst.h[i].mu() / (inst.n * tp[i]));
  return std::max({mu_f, mu_g / 2.0, m0 / 2.0});
}

SolverState initial_state(const ProblemInstance& inst, const Vector& x0, bool track_z) {
  require(x0.size() == inst.d, ErrorCode::kConfiguration, "x0 has the wrong dimension");
  SolverState st;
  st.x = x0;
  st.u = Matrix::Zero(inst.d, inst.n);
  for (int i = 0; i < inst.n; ++i)
    if (inst.h[i].has_gradient()) st.u.col(i) = inst.h[i].gradient(x0);
  if (track_z) st.z = x0.replicate(1, inst.n);
  resync(st, inst);
  return st;
}

SolverState reference_state(const ProblemInstance& inst, bool track_z) {
  SolverState st;
  st.x = inst.x_star;
  st.u = inst.u_star;
  if (track_z) st.z = inst.x_star.replicate(1, inst.n);
  resync(st, inst);
  return st;
}

void resync(SolverState& st, const ProblemInstance& inst) {
  st.u_bar = st.u.rowwise().mean();
  st.dual_sq = (st.u - inst.u_star).colwise().squaredNorm().transpose();
  if (st.z) {
    st.z_sq = (st.z->colwise() - inst.x_star).colwise().squaredNorm().transpose();
  } else {
    st.z_sq.resize(0);
  }
}

AlgorithmStreams::AlgorithmStreams(std::uint64_t seed)
    : omega(Rng(seed).split(1)), coin(Rng(seed).split(2)), mask_root(Rng(seed).split(3)) {}

void server_point(const SolverState& st, const ProblemInstance& inst, double gamma, StepWorkspace& ws) {
  if (inst.f.is_zero()) {
    ws.v = st.x - gamma * st.u_bar;
  } else {
    inst.f.grad_into(st.x, ws.grad);
    ws.v = st.x - gamma * (ws.grad + st.u_bar);
  }
  if (inst.g.is_zero()) {
    ws.x_hat = ws.v;
  } else {
    inst.g.prox_into(gamma, ws.v, ws.x_hat);
  }
}

void check_divergence(const SolverState& st) {
  const double norm = st.x.norm();
  if (!std::isfinite(norm) || norm > kDivergenceNorm) {
    throw DivergenceError(st.t, "iterate diverged at t = " + std::to_string(st.t));
  }
}

void apply_step(SolverState& st, const ProblemInstance& inst, const SolverParams& prm, const SubsetSample& omega,
                bool accept_x_hat, StepWorkspace& ws) {
  const double gamma = prm.schedule.gamma(st.t);
  server_point(st, inst, gamma, ws);
  if (omega.empty()) {
    if (accept_x_hat) st.x = ws.x_hat;
  } else {
    const double inv_n = 1.0 / inst.n;
    ws.sum.setZero(inst.d);
    for (int i : omega) {
      const double ge = gamma * prm.eta[i];
      ws.v = ws.x_hat + ge * st.u.col(i);
      inst.h[i].prox_into(ge, ws.v, ws.y);
      ws.du = (ws.x_hat - ws.y) / ge;
      st.u.col(i) += ws.du;
      st.u_bar += inv_n * ws.du;
      ws.sum += ws.y;
      st.dual_sq[i] = (st.u.col(i) - inst.u_star.col(i)).squaredNorm();
      if (!std::isfinite(st.dual_sq[i])) throw DivergenceError(st.t, "dual diverged at t = " + std::to_string(st.t));
      if (st.z) {
        st.z->col(i) = ws.y;
        st.z_sq[i] = (ws.y - inst.x_star).squaredNorm();
      }
    }
    st.x = ws.sum / static_cast<double>(omega.size());
  }
  ++st.t;
  if (st.t % kResyncPeriod == 0) resync(st, inst);
  check_divergence(st);
}

void step(SolverState& st, const ProblemInstance& inst, const SolverParams& prm, const SamplingDistribution& dist,
          AlgorithmStreams& streams, StepWorkspace& ws) {
  dist.sample(streams.omega, ws.omega);
  bool accept = true;
  if (ws.omega.empty()) accept = streams.coin.bernoulli(prm.p_hat);
  apply_step(st, inst, prm, ws.omega, accept, ws);
}

IterationMetrics measure(const SolverState& st, const ProblemInstance& inst, const LyapunovSpec* spec) {
  IterationMetrics m;
  m.t = st.t;
  m.sq_dist = (st.x - inst.x_star).squaredNorm();
  m.dual_residual = st.dual_sq.size() ? std::sqrt(st.dual_sq.maxCoeff()) : 0.0;
  if (spec) m.lyapunov = lyapunov_cached(st, inst, *spec);
  return m;
}

SolverState run(const ProblemInstance& inst, const SolverParams& prm, const SamplingDistribution& dist,
                AlgorithmStreams& streams, std::int64_t T, SolverState st, const MetricSink& sink,
                const RunOptions& options) {
  require(T >= 0, ErrorCode::kConfiguration, "iteration count must be nonnegative");
  require(st.x.size() == inst.d && st.u.rows() == inst.d && st.u.cols() == inst.n, ErrorCode::kConfiguration,
          "state dimensions do not match the instance");
  require(prm.eta.size() == inst.n, ErrorCode::kConfiguration, "parameters do not match the instance");
  auto emit = [&]() {
    if (sink && (!options.log_when || options.log_when(st.t))) sink(measure(st, inst, options.lyapunov));
  };
  StepWorkspace ws;
  emit();
  for (std::int64_t k = 0; k < T; ++k) {
    step(st, inst, prm, dist, streams, ws);
    emit();
  }
  return st;
}

std::pair<Vector, Matrix> point_saga_step(const Vector& x, const Matrix& u, int j, double gamma,
                                          const std::vector<ProxOracle>& h) {
  require(j >= 0 && j < static_cast<int>(h.size()) && u.cols() == static_cast<Eigen::Index>(h.size()),
          ErrorCode::kConfiguration, "point_saga_step: bad index or dimensions");
  const Vector u_bar = u.rowwise().mean();
  const Vector z = x + gamma * (u.col(j) - u_bar);
  Vector x_next = h[j].prox(gamma, z);
  Matrix u_next = u;
  u_next.col(j) = (z - x_next) / gamma;
  return {std::move(x_next), std::move(u_next)};
}

ImportancePlan importance_plan(const Vector& L_h, double mu_f, double mu_g, double L_f, double max_L) {
  const double mu = mu_f + mu_g;
  require(mu > 0.0, ErrorCode::kHypothesisViolation, "importance sampling plan needs mu_f + mu_g > 0");
  require(L_h.size() > 0 && (L_h.array() >= 0.0).all() && max_L > 0.0, ErrorCode::kHypothesisViolation,
          "importance sampling plan needs nonnegative L_{h_i} and max L > 0");
  const double n = static_cast<double>(L_h.size());
  ImportancePlan out;
  out.b = (L_h.array() / (n * mu)).sqrt().max(1.0).matrix();
  const double b_sum = out.b.sum();
  out.p = out.b / b_sum;
  out.gamma = std::max(std::sqrt(n / (max_L * mu)), 1.0 / mu) / b_sum;
  if (L_f > 0.0) out.gamma = std::min(out.gamma, 1.0 / L_f);
  const double root_mean = L_h.array().sqrt().mean();
  out.L_bar = root_mean * root_mean;
  out.complexity = L_f / mu + n + std::sqrt(n * out.L_bar / mu);
  return out;
}

}  // namespace smpm
