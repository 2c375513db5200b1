#include "smpm/lyapunov.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "smpm/errors.hpp"

namespace smpm {
namespace {

constexpr double kTol = 1e-9;

double constant_gamma(const SolverParams& params, const char* what) {
  const auto* c = std::get_if<StepsizeSchedule::Constant>(&params.schedule.rule());
  require(c != nullptr, ErrorCode::kHypothesisViolation, std::string(what) + " needs a constant stepsize");
  return c->gamma;
}

const StepsizeSchedule::Adaptive& adaptive_rule(const SolverParams& params, const char* what) {
  const auto* a = std::get_if<StepsizeSchedule::Adaptive>(&params.schedule.rule());
  require(a != nullptr, ErrorCode::kHypothesisViolation, std::string(what) + " needs the adaptive stepsize");
  return *a;
}

}  // namespace

const char* to_string(LyapunovKind kind) {
  switch (kind) {
    case LyapunovKind::kTheorem1: return "THM1";
    case LyapunovKind::kN1SimpleG: return "THM_N1_SIMPLE_G";
    case LyapunovKind::kAcceleratedPEmpty0: return "THM_AC_PEMPTY0";
    case LyapunovKind::kAcceleratedMuH0: return "THM_AC_MUH0";
    case LyapunovKind::kSimilarity: return "THM_SIMILAR";
    case LyapunovKind::kFedTheorem: return "THM_FED";
  }
  return "THM1";
}

LyapunovKind lyapunov_kind_from_string(const std::string& name) {
  std::string u = name;
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
  for (auto k : {LyapunovKind::kTheorem1, LyapunovKind::kN1SimpleG, LyapunovKind::kAcceleratedPEmpty0,
                 LyapunovKind::kAcceleratedMuH0, LyapunovKind::kSimilarity, LyapunovKind::kFedTheorem})
    if (u == to_string(k)) return k;
  fail(ErrorCode::kConfiguration, "unknown Lyapunov variant: " + name);
}

double LyapunovSpec::x_weight_at(std::int64_t t) const {
  if (!schedule) return x_weight;
  return 1.0 + schedule->gamma(t - 1) * mu_hat;
}

double LyapunovSpec::u_scale_at(std::int64_t t) const {
  if (!schedule) return 1.0;
  const double g = schedule->gamma(t - 1);
  return g * g;
}

double LyapunovSpec::envelope(std::int64_t t, double psi0) const {
  if (schedule) {
    const auto& a = std::get<StepsizeSchedule::Adaptive>(schedule->rule());
    const double r = (a.a - 1.0) / (a.a + static_cast<double>(t) - 1.0);
    return r * r * psi0;
  }
  require(rate.has_value(), ErrorCode::kHypothesisViolation, "no rate attached to this Lyapunov function");
  return std::pow(rate->rho, static_cast<double>(t)) * psi0;
}

RateInputs rate_inputs(const ProblemInstance& inst, const SolverParams& params) {
  RateInputs in;
  in.gamma = params.schedule.gamma(0);
  in.L_f = inst.f.L();
  in.mu_f = inst.f.mu();
  in.mu_g = inst.g.mu();
  in.mu_hat_h = params.mu_hat_h;
  in.p_empty = params.p_empty;
  in.p_hat = params.p_hat;
  in.p_bar = params.p_bar;
  for (int i = 0; i < inst.n; ++i)
    in.clients.push_back({params.p[i], params.eta[i], inst.h[i].L(), inst.h[i].mu()});
  return in;
}

LyapunovSpec make_lyapunov(LyapunovKind kind, const ProblemInstance& inst, const SolverParams& params) {
  require(params.eta.size() == inst.n, ErrorCode::kConfiguration, "parameters do not match the instance");
  const int n = inst.n;
  LyapunovSpec spec;
  spec.kind = kind;
  spec.u_weights.resize(n);

  switch (kind) {
    case LyapunovKind::kTheorem1: {
      const double g = constant_gamma(params, "THM1");
      spec.rate = rho_theorem1(rate_inputs(inst, params));
      spec.x_weight = 1.0 + g * params.mu_hat_h;
      const double front = (1.0 - params.p_empty + params.p_bar) / n;
      for (int i = 0; i < n; ++i) {
        spec.u_weights[i] = front / params.p[i] *
                            (g * g * params.eta[i] + 2.0 * g * inverse_curvature_sum(inst.h[i].mu(), inst.h[i].L()));
      }
      break;
    }
    case LyapunovKind::kN1SimpleG: {
      const double g = constant_gamma(params, "THM_N1_SIMPLE_G");
      require(n == 1, ErrorCode::kHypothesisViolation, "THM_N1_SIMPLE_G needs n = 1");
      require(inst.g.is_zero() || std::holds_alternative<ScaledSqNorm>(inst.g.function()),
              ErrorCode::kHypothesisViolation, "THM_N1_SIMPLE_G needs g = (mu_g/2)||.||^2");
      spec.rate = rho_n1_simple_g(rate_inputs(inst, params));
      const double eta = params.eta[0];
      spec.x_weight = 1.0 + g * params.mu_hat_h;
      spec.u_weights[0] = g * g * eta * eta + 2.0 * g * eta * inverse_curvature_sum(inst.h[0].mu(), inst.h[0].L());
      break;
    }
    case LyapunovKind::kAcceleratedPEmpty0:
    case LyapunovKind::kAcceleratedMuH0: {
      adaptive_rule(params, to_string(kind));
      if (kind == LyapunovKind::kAcceleratedPEmpty0) {
        require(params.p_empty == 0.0, ErrorCode::kHypothesisViolation, "THM_AC_PEMPTY0 needs p_empty = 0");
        spec.mu_hat = params.mu_hat_h;
      } else {
        for (const auto& hi : inst.h)
          require(hi.mu() == 0.0, ErrorCode::kHypothesisViolation, "THM_AC_MUH0 needs mu_{h_i} = 0");
        require(params.p_hat == 1.0, ErrorCode::kHypothesisViolation, "THM_AC_MUH0 needs p_hat = 1");
        spec.mu_hat = 0.0;
      }
      spec.schedule = params.schedule;
      for (int i = 0; i < n; ++i) spec.u_weights[i] = params.eta[i] / (n * params.p[i]);
      break;
    }
    case LyapunovKind::kSimilarity: {
      const double g = constant_gamma(params, "THM_SIMILAR");
      require(params.track_z, ErrorCode::kHypothesisViolation, "THM_SIMILAR needs z tracking");
      require(inst.delta.has_value(), ErrorCode::kHypothesisViolation, "THM_SIMILAR needs a supplied delta");
      require(inst.g.is_zero(), ErrorCode::kHypothesisViolation, "THM_SIMILAR needs g = 0");
      require(params.p_empty == 0.0, ErrorCode::kHypothesisViolation, "THM_SIMILAR needs p_empty = 0");
      const double p_s = params.p[0];
      for (int i = 0; i < n; ++i) {
        require(std::abs(params.tilde_p[i] - 1.0 / n) <= kTol && std::abs(params.p[i] - p_s) <= kTol &&
                    std::abs(params.eta[i] - 1.0) <= kTol,
                ErrorCode::kHypothesisViolation, "THM_SIMILAR needs tilde_p = 1/n, equal p_i and eta = 1");
      }
      Smoothness L = Smoothness::finite(0.0);
      double mu = inst.h.front().mu();
      for (const auto& hi : inst.h) {
        if (!hi.L().is_finite()) L = Smoothness::infinite();
        else if (L.is_finite()) L = Smoothness::finite(std::max(L.value(), hi.L().value()));
        mu = std::min(mu, hi.mu());
      }
      SimilarityInputs si{g, inst.f.L(), inst.f.mu(), L, mu, *inst.delta, p_s};
      spec.rate = rho_similarity(si);
      const double mh = similarity_mu_hat_h(mu, L);
      const double mf = similarity_mu_hat_f(g, inst.f.L(), inst.f.mu());
      spec.x_weight = 1.0 - g * mf / 2.0 + g * mh / 2.0;
      spec.z_weight = g * (mf + mh) / (2.0 * n * p_s);
      spec.u_weights.setConstant((g * g + 2.0 * g * inverse_curvature_sum(mu, L)) / (n * p_s));
      break;
    }
    case LyapunovKind::kFedTheorem:
      fail(ErrorCode::kConfiguration, "use make_fed_lyapunov for the FedSMPM theorem");
  }
  return spec;
}

LyapunovSpec make_fed_lyapunov(const ProblemInstance& inst, const SolverParams& params, int k, int s) {
  const double g = constant_gamma(params, "THM_FED");
  require(inst.f.is_zero(), ErrorCode::kHypothesisViolation, "THM_FED needs f = 0");
  require(inst.g.is_zero(), ErrorCode::kHypothesisViolation, "THM_FED needs g = 0");
  const double L = inst.max_L_h();
  const double mu = inst.min_mu_h();
  for (const auto& hi : inst.h)
    require(hi.L().value() == L && hi.mu() == mu, ErrorCode::kHypothesisViolation,
            "THM_FED needs uniform constants L_h and mu_h");
  FedTheoremRate fr = rho_fed({inst.n, inst.d, k, s, L, mu, g});
  for (int i = 0; i < inst.n; ++i)
    require(std::abs(params.eta[i] - fr.eta) <= kTol * fr.eta, ErrorCode::kHypothesisViolation,
            "THM_FED needs eta_i = 1/(1 - p_check_empty)");
  LyapunovSpec spec;
  spec.kind = LyapunovKind::kFedTheorem;
  spec.rate = fr.rate;
  spec.x_weight = 1.0 + g * fr.mu_hat_h;
  spec.u_weights = Vector::Constant(
      inst.n, static_cast<double>(inst.d) / (static_cast<double>(k) * s) * (g * g * fr.eta + 2.0 * g / (L + mu)));
  return spec;
}

double lyapunov(const SolverState& st, const ProblemInstance& inst, const LyapunovSpec& spec) {
  double out = spec.x_weight_at(st.t) * (st.x - inst.x_star).squaredNorm();
  if (spec.z_weight != 0.0) {
    require(st.z.has_value(), ErrorCode::kHypothesisViolation, "this Lyapunov function needs z tracking");
    for (int i = 0; i < inst.n; ++i) out += spec.z_weight * (st.z->col(i) - inst.x_star).squaredNorm();
  }
  const double scale = spec.u_scale_at(st.t);
  for (int i = 0; i < inst.n; ++i)
    out += scale * spec.u_weights[i] * (st.u.col(i) - inst.u_star.col(i)).squaredNorm();
  return out;
}

double lyapunov_cached(const SolverState& st, const ProblemInstance& inst, const LyapunovSpec& spec) {
  double out = spec.x_weight_at(st.t) * (st.x - inst.x_star).squaredNorm();
  if (spec.z_weight != 0.0) {
    require(st.z_sq.size() == inst.n, ErrorCode::kHypothesisViolation, "this Lyapunov function needs z tracking");
    out += spec.z_weight * st.z_sq.sum();
  }
  out += spec.u_scale_at(st.t) * spec.u_weights.dot(st.dual_sq);
  return out;
}

double conditional_expected_lyapunov(const SolverState& st, const ProblemInstance& inst, const SolverParams& params,
                                     const SamplingDistribution& dist, const LyapunovSpec& spec) {
  StepWorkspace ws;
  double total = 0.0;
  dist.for_each_outcome([&](const SubsetSample& omega, double prob) {
    if (omega.empty()) {
      for (bool accept : {true, false}) {
        const double w = accept ? params.p_hat : 1.0 - params.p_hat;
        if (w == 0.0) continue;
        SolverState next = st;
        apply_step(next, inst, params, omega, accept, ws);
        total += prob * w * lyapunov(next, inst, spec);
      }
    } else {
      SolverState next = st;
      apply_step(next, inst, params, omega, true, ws);
      total += prob * lyapunov(next, inst, spec);
    }
  });
  return total;
}

}  // namespace smpm
