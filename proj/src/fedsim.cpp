#include "smpm/fedsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smpm/errors.hpp"
#include "smpm/lyapunov.hpp"

namespace smpm {

std::pair<CompressedMessage, RandKMask> compress(const Vector& v, int k, Rng& rng) {
  const int d = static_cast<int>(v.size());
  require(k >= 1 && k <= d, ErrorCode::kConfiguration, "rand-k needs 1 <= k <= d");
  RandKMask mask;
  if (k == d) {
    mask.kept.resize(d);
    std::iota(mask.kept.begin(), mask.kept.end(), 0);
  } else {
    // Floyd's algorithm over coordinates.
    std::vector<char> taken(d, 0);
    mask.kept.reserve(k);
    for (int j = d - k; j < d; ++j) {
      int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(j) + 1));
      if (taken[t]) t = j;
      taken[t] = 1;
      mask.kept.push_back(t);
    }
    std::sort(mask.kept.begin(), mask.kept.end());
  }
  CompressedMessage msg;
  msg.indices = mask.kept;
  msg.values.reserve(k);
  for (int j : mask.kept) msg.values.push_back(v[j]);
  return {std::move(msg), std::move(mask)};
}

Vector rescale(const std::vector<CompressedMessage>& messages, const Vector& x_hat, const Vector& x_prev,
               double p_hat, Rng& rng) {
  const Eigen::Index d = x_hat.size();
  require(x_prev.size() == d, ErrorCode::kConfiguration, "rescale: dimension mismatch");
  Vector sum = Vector::Zero(d);
  std::vector<int> count(d, 0);
  for (const auto& m : messages) {
    require(m.indices.size() == m.values.size(), ErrorCode::kConfiguration, "rescale: malformed message");
    for (std::size_t j = 0; j < m.indices.size(); ++j) {
      require(m.indices[j] >= 0 && m.indices[j] < d, ErrorCode::kConfiguration, "rescale: index out of range");
      sum[m.indices[j]] += m.values[j];
      ++count[m.indices[j]];
    }
  }
  Vector out(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    if (count[j] > 0) {
      out[j] = x_hat[j] + sum[j] / count[j];
    } else {
      out[j] = rng.bernoulli(p_hat) ? x_hat[j] : x_prev[j];
    }
  }
  return out;
}

FedParams derive_fed_params(const ProblemInstance& inst, const SamplingDistribution& dist, int k,
                            std::optional<double> gamma, bool theorem_exact) {
  require(k >= 1 && k <= inst.d, ErrorCode::kConfiguration, "FedSMPM needs 1 <= k <= d");
  FedParams out;
  out.k = k;
  if (theorem_exact) {
    require(inst.f.is_zero() && inst.g.is_zero(), ErrorCode::kHypothesisViolation,
            "the FedSMPM theorem needs f = 0 and g = 0");
    const auto* law = std::get_if<UniformMinibatch>(&dist.law());
    require(law != nullptr, ErrorCode::kHypothesisViolation, "the FedSMPM theorem needs uniform minibatch sampling");
    const double L = inst.max_L_h();
    const double mu = inst.min_mu_h();
    require(mu > 0.0, ErrorCode::kHypothesisViolation, "the FedSMPM theorem needs mu_h > 0");
    for (const auto& hi : inst.h)
      require(hi.L().value() == L && hi.mu() == mu, ErrorCode::kHypothesisViolation,
              "the FedSMPM theorem needs uniform L_h and mu_h");
    out.plan = fed_plan(inst.n, inst.d, k, law->s, L, mu);
    const double g = gamma.value_or(out.plan->gamma);
    out.theorem = rho_fed({inst.n, inst.d, k, law->s, L, mu, g});
    gamma = g;
  }
  require(gamma.has_value(), ErrorCode::kConfiguration, "FedSMPM needs a stepsize outside the theorem regime");
  const SamplingDistribution effective = compressed_view(dist, k, inst.d);
  out.solver = derive_params(inst, effective, StepsizeSchedule::constant(*gamma));
  out.p_check_empty = effective.p_empty();
  out.effective_p = effective.p();
  out.effective_tilde_p = effective.tilde_p();
  if (out.theorem) {
    require(std::abs(out.p_check_empty - out.theorem->p_check_empty) <= 1e-12 &&
                std::abs(out.solver.eta[0] - out.theorem->eta) <= 1e-9 * out.theorem->eta,
            ErrorCode::kHypothesisViolation, "effective-law parameters disagree with the theorem");
  }
  return out;
}

RoundRecord fed_step(SolverState& st, const ProblemInstance& inst, const FedParams& params,
                     const SamplingDistribution& dist, AlgorithmStreams& streams, CommLedger& ledger,
                     StepWorkspace& ws) {
  const SolverParams& prm = params.solver;
  const double gamma = prm.schedule.gamma(st.t);
  const double inv_n = 1.0 / inst.n;
  RoundRecord rec;
  rec.t = st.t;

  server_point(st, inst, gamma, ws);  // broadcast x_hat
  dist.sample(streams.omega, rec.omega);
  const Rng round_root = streams.mask_root.split(static_cast<std::uint64_t>(st.t));
  rec.messages.reserve(rec.omega.size());
  for (int i : rec.omega) {
    const double ge = gamma * prm.eta[i];
    ws.v = ws.x_hat + ge * st.u.col(i);
    inst.h[i].prox_into(ge, ws.v, ws.y);
    ws.du = ws.y - ws.x_hat;
    Rng mask_rng = round_root.split(static_cast<std::uint64_t>(i));
    auto [msg, mask] = compress(ws.du, params.k, mask_rng);
    msg.client = i;
    // Client side: only the transmitted coordinates of u_i move.
    for (std::size_t j = 0; j < msg.indices.size(); ++j) {
      const double step_u = msg.values[j] / ge;
      st.u(msg.indices[j], i) -= step_u;
      // Server side, from the message alone.
      st.u_bar[msg.indices[j]] -= inv_n * step_u;
    }
    st.dual_sq[i] = (st.u.col(i) - inst.u_star.col(i)).squaredNorm();
    if (!std::isfinite(st.dual_sq[i])) throw DivergenceError(st.t, "dual diverged at t = " + std::to_string(st.t));
    rec.messages.push_back(std::move(msg));
  }
  st.x = rescale(rec.messages, ws.x_hat, st.x, prm.p_hat, streams.coin);

  const std::int64_t active = static_cast<std::int64_t>(rec.omega.size());
  rec.uplink_parallel_reals = active > 0 ? params.k : 0;
  rec.uplink_total_reals = params.k * active;
  rec.downlink_reals = static_cast<std::int64_t>(inst.d) * active;
  ++ledger.rounds;
  ledger.uplink_parallel_reals += rec.uplink_parallel_reals;
  ledger.uplink_total_reals += rec.uplink_total_reals;
  ledger.downlink_reals += rec.downlink_reals;

  ++st.t;
  if (st.t % kResyncPeriod == 0) resync(st, inst);
  check_divergence(st);
  return rec;
}

FedRunResult fed_run(const ProblemInstance& inst, const FedParams& params, const SamplingDistribution& dist,
                     AlgorithmStreams& streams, std::int64_t T, SolverState state, const FedMetricSink& sink,
                     const RunOptions& options) {
  require(T >= 0, ErrorCode::kConfiguration, "round count must be nonnegative");
  require(state.x.size() == inst.d && state.u.cols() == inst.n, ErrorCode::kConfiguration,
          "state dimensions do not match the instance");
  require(!state.z, ErrorCode::kConfiguration, "FedSMPM does not track z");
  FedRunResult out{std::move(state), {}};
  auto emit = [&]() {
    if (sink && (!options.log_when || options.log_when(out.state.t)))
      sink(measure(out.state, inst, options.lyapunov), out.ledger);
  };
  StepWorkspace ws;
  emit();
  for (std::int64_t r = 0; r < T; ++r) {
    fed_step(out.state, inst, params, dist, streams, out.ledger, ws);
    emit();
  }
  return out;
}

}  // namespace smpm
