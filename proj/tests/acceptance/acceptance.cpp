// Acceptance checks. One line per criterion; exit status 1 when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "../fixtures.hpp"
#include "../oracles.hpp"
#include "smpm/config.hpp"
#include "smpm/experiment.hpp"
#include "smpm/fedsim.hpp"
#include "smpm/lyapunov.hpp"
#include "smpm/rates.hpp"
#include "smpm/solver.hpp"

using namespace smpm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;  // <= 0: no budget
  std::function<Outcome()> body;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Fit window: t where the mean stays above 1e-20 of its initial value.
double fitted_slope(const std::vector<double>& ts, const std::vector<double>& mean) {
  std::vector<double> t2, v2;
  for (std::size_t k = 0; k < ts.size(); ++k)
    if (mean[k] >= 1e-20 * mean[0]) {
      t2.push_back(ts[k]);
      v2.push_back(mean[k]);
    }
  return oracle::log_slope(t2, v2);
}

// --- 1 ---------------------------------------------------------------------

Outcome fixed_point() {
  Rng rng(101);
  const int n = 50;
  std::vector<std::pair<std::string, ProblemInstance>> families;
  Exp1Params e1;
  e1.n = e1.d = n;
  families.emplace_back("EXP1", generate_exp1(e1, rng));
  Exp2Params e2;
  e2.n = n;
  families.emplace_back("EXP2", generate_exp2(e2, rng));
  Exp3Params e3;
  e3.n = e3.d = n;
  families.emplace_back("EXP3", generate_exp3(e3, rng));

  std::vector<double> q(n), r(n);
  for (int i = 0; i < n; ++i) {
    q[i] = rng.uniform(0.5, 2.0);
    r[i] = rng.uniform(0.2, 0.9);
  }
  double qs = 0.0;
  for (double v : q) qs += v;
  for (double& v : q) v /= qs;
  const std::vector<std::pair<std::string, SamplingDistribution>> laws = {
      {"full", SamplingDistribution::full_batch(n)},
      {"uniform1", SamplingDistribution::uniform_minibatch(n, 1)},
      {"uniform5", SamplingDistribution::uniform_minibatch(n, 5)},
      {"singleton", SamplingDistribution::singleton_weighted(q)},
      {"independent", SamplingDistribution::independent(r)},
  };
  double worst = 0.0;
  std::string where;
  for (const auto& [fname, inst] : families) {
    for (const auto& [lname, dist] : laws) {
      const double gamma = inst.f.L() > 0.0 ? 1.0 / inst.f.L() : 0.1;
      const auto schedule = StepsizeSchedule::constant(gamma);
      // Independent participation at n = 50 has no exact tilde_p; eta comes from an estimate.
      const auto prm = dist.has_tilde_p() ? derive_params(inst, dist, schedule)
                                          : derive_params(inst, dist, estimate_tilde_probs_mc(dist, rng, 20000).mean,
                                                          schedule);
      AlgorithmStreams streams(7);
      StepWorkspace ws;
      SolverState st = reference_state(inst);
      for (int t = 0; t < 100; ++t) step(st, inst, prm, dist, streams, ws);
      const double dev = (st.x - inst.x_star).norm();
      if (dev >= worst) {
        worst = dev;
        where = fname + "/" + lname;
      }
    }
  }
  return {worst <= 1e-10, "max |x - x*| = " + fmt("%.2e", worst) + " (" + where + ")"};
}

// --- 2 ---------------------------------------------------------------------

Outcome conditional_contraction() {
  Rng rng(202);
  const auto inst = fixture::quadratic_instance(3, 5, rng, {0.5, 2.0, 0.3, 0.5, 4.0});
  const auto dist = SamplingDistribution::independent({0.3, 0.6, 0.8});
  const auto prm = derive_params(inst, dist, StepsizeSchedule::constant(0.4));
  const auto spec = make_lyapunov(LyapunovKind::kTheorem1, inst, prm);
  const double rho = spec.rate->rho;
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const SolverState st = fixture::perturbed_state(inst, rng, rng.uniform(0.1, 3.0));
    const double psi = lyapunov(st, inst, spec);
    const double next = conditional_expected_lyapunov(st, inst, prm, dist, spec);
    worst = std::max(worst, next / (rho * psi));
  }
  return {worst <= 1.0 + 1e-9, "max E[Psi+]/(rho Psi) = " + fmt("%.12f", worst) + ", rho = " + fmt("%.6f", rho)};
}

// --- 3 ---------------------------------------------------------------------

Outcome linear_rate() {
  Rng rng(303);
  const int n = 10, d = 20, s = 2;
  const auto inst = fixture::quadratic_instance(n, d, rng, {0.2, 1.0, 0.0, 0.5, 4.0});
  const auto dist = SamplingDistribution::uniform_minibatch(n, s);
  const auto plan =
      uniform_minibatch_plan(n, s, inst.f.L(), inst.f.mu(), inst.g.mu(), inst.max_L_h(), inst.min_mu_h());
  const auto prm = derive_params(inst, dist, StepsizeSchedule::constant(plan.gamma));
  const auto spec = make_lyapunov(LyapunovKind::kTheorem1, inst, prm);
  const int T = 2000, R = 200;
  const Vector x0 = fixture::random_vector(d, rng, 3.0);
  std::vector<double> mean(T + 1, 0.0), ts(T + 1);
  for (int t = 0; t <= T; ++t) ts[t] = t;
  RunOptions opts;
  opts.lyapunov = &spec;
  for (int r = 0; r < R; ++r) {
    AlgorithmStreams streams(1000 + r);
    run(inst, prm, dist, streams, T, initial_state(inst, x0),
        [&](const IterationMetrics& m) { mean[m.t] += *m.lyapunov / R; }, opts);
  }
  const double slope = fitted_slope(ts, mean);
  const double bound = std::log(spec.rate->rho) + 0.02;
  return {slope <= bound, "slope = " + fmt("%.5f", slope) + ", log rho + 0.02 = " + fmt("%.5f", bound)};
}

// --- 4 ---------------------------------------------------------------------

Outcome point_saga() {
  Rng rng(404);
  const int n = 10, d = 8;
  const auto inst = fixture::quadratic_instance(n, d, rng);
  const double gamma = 0.3;
  const auto dist = SamplingDistribution::uniform_minibatch(n, 1);
  const auto prm = derive_params(inst, dist, StepsizeSchedule::constant(gamma));
  std::vector<oracle::Mat> A(n);
  std::vector<oracle::Vec> b(n);
  for (int i = 0; i < n; ++i) {
    const auto& q = std::get<QuadraticForm>(inst.h[i].function());
    A[i] = oracle::assemble(q.Q, q.lam);
    b[i] = q.b;
  }
  const Vector x0 = fixture::random_vector(d, rng, 2.0);
  SolverState st = initial_state(inst, x0);
  oracle::Vec x = x0;
  oracle::Mat u = st.u;
  StepWorkspace ws;
  Rng index(405);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const SubsetSample omega = dist.sample(index);
    const int j = omega.front();
    apply_step(st, inst, prm, omega, true, ws);
    // Point-SAGA: z = x + gamma (u_j - mean u), x+ = prox(z), u_j = (z - x+)/gamma.
    const oracle::Vec z = x + gamma * (u.col(j) - u.rowwise().mean());
    x = oracle::quadratic_prox(A[j], b[j], gamma, z);
    u.col(j) = (z - x) / gamma;
    worst = std::max({worst, (st.x - x).cwiseAbs().maxCoeff(), (st.u - u).cwiseAbs().maxCoeff()});
  }
  return {worst <= 1e-10, "max deviation = " + fmt("%.2e", worst)};
}

// --- 5 ---------------------------------------------------------------------

Outcome accelerated_envelope() {
  RunConfig cfg = preset("exp2", Scale::kSmall);
  std::get<Exp2Params>(cfg.problem).n = 100;
  cfg.arms = {cfg.arms.back()};  // adaptive, a = 5.5
  cfg.T = 1000;
  cfg.replicates = 500;
  const auto res = run_experiment(cfg);
  const auto& mean = res.arms.front().mean;
  bool ok = true;
  std::string detail;
  for (const auto& m : mean) {
    if (m.t != 10 && m.t != 100 && m.t != 1000) continue;
    const double ratio = *m.lyapunov_mean / *m.envelope;
    ok = ok && ratio <= 1.05;
    detail += "t=" + std::to_string(m.t) + ": Psi/env = " + fmt("%.4f", ratio) + "  ";
  }
  return {ok, detail};
}

// --- 6 ---------------------------------------------------------------------

Outcome importance_sweep() {
  std::vector<double> speedup;
  std::string detail;
  bool ok = true;
  for (const char* name : {"exp1-alpha095", "exp1-alpha05", "exp1-alpha005"}) {
    RunConfig cfg = preset(name, Scale::kPaper);
    cfg.T = 4000;
    const auto res = run_experiment(cfg);
    std::map<std::string, std::optional<std::int64_t>> it;
    for (const auto& a : res.arms) it[a.name] = a.iterations_to_target;
    if (!it["uniform"] || !it["importance"]) {
      ok = false;
      detail += std::string(name) + ": target not reached  ";
      continue;
    }
    const double ratio = double(*it["uniform"]) / double(*it["importance"]);
    speedup.push_back(ratio);
    detail += std::string(name) + ": " + std::to_string(*it["uniform"]) + "/" + std::to_string(*it["importance"]) +
              " = " + fmt("%.3f", ratio) + "  ";
  }
  if (ok) {
    ok = speedup[2] > 1.0;  // importance strictly faster at alpha = 0.05
    for (std::size_t k = 1; k < speedup.size(); ++k) ok = ok && speedup[k] > speedup[k - 1];
  }
  return {ok, detail + "(uniform/importance iterations to 1e-6)"};
}

// --- 7 ---------------------------------------------------------------------

Outcome grid_vs_adaptive() {
  RunConfig cfg = preset("exp2", Scale::kSmall);  // n = d = 200, T = 1e5, 10 seeds
  const auto res = run_experiment(cfg);
  double adaptive = 0.0;
  for (const auto& a : res.arms)
    if (a.name == "adaptive") adaptive = a.final_sq_dist;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& a : res.arms)
    if (a.grid_index) best = std::min(best, a.final_sq_dist);
  return {adaptive <= best, "adaptive " + fmt("%.3e", adaptive) + " vs best grid " + fmt("%.3e", best) + " (" +
                                res.best_grid_arm.value_or("-") + ")"};
}

// --- 8 ---------------------------------------------------------------------

ProblemInstance fed_instance(int n, int d, Rng& rng, double mu, double L) {
  std::vector<ProxOracle> h;
  for (int i = 0; i < n; ++i)
    h.push_back(ProxOracle::quadratic(fixture::random_form(d, rng, mu, L), mu, Smoothness::finite(L)));
  return make_quadratic_instance(SmoothOracle::zero(), 0.0, std::move(h));
}

Outcome fed_full_k() {
  Rng rng(808);
  const int n = 8, d = 6;
  const auto inst = fed_instance(n, d, rng, 1.0, 20.0);
  const auto dist = SamplingDistribution::uniform_minibatch(n, 3);
  const auto fprm = derive_fed_params(inst, dist, d, 0.05, true);
  const auto sprm = derive_params(inst, dist, StepsizeSchedule::constant(0.05));
  AlgorithmStreams fs(9), ss(9);
  CommLedger ledger;
  StepWorkspace fw, sw;
  const Vector x0 = fixture::random_vector(d, rng, 3.0);
  SolverState a = initial_state(inst, x0), b = initial_state(inst, x0);
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    fed_step(a, inst, fprm, dist, fs, ledger, fw);
    step(b, inst, sprm, dist, ss, sw);
    worst = std::max({worst, (a.x - b.x).cwiseAbs().maxCoeff(), (a.u - b.u).cwiseAbs().maxCoeff()});
  }
  return {worst <= 1e-12, "max deviation = " + fmt("%.2e", worst)};
}

// --- 9 ---------------------------------------------------------------------

Outcome fed_rate() {
  Rng rng(909);
  Exp3Params p;
  p.n = p.d = 20;
  p.mu = 1.0;
  p.L_max = 50.0;
  const auto inst = generate_exp3(p, rng);
  const int k = 5, s = 5, T = 2000, R = 200;
  const auto dist = SamplingDistribution::uniform_minibatch(p.n, s);
  const auto prm = derive_fed_params(inst, dist, k, std::nullopt, true);
  const auto spec = make_fed_lyapunov(inst, prm.solver, k, s);
  RunOptions opts;
  opts.lyapunov = &spec;
  std::vector<double> mean(T + 1, 0.0), ts(T + 1);
  for (int t = 0; t <= T; ++t) ts[t] = t;
  bool ledger_ok = true;
  const Vector x0 = Vector::Constant(p.d, 10.0);
  for (int r = 0; r < R; ++r) {
    AlgorithmStreams streams(2000 + r);
    std::int64_t last = 0;
    fed_run(inst, prm, dist, streams, T, initial_state(inst, x0),
            [&](const IterationMetrics& m, const CommLedger& l) {
              mean[m.t] += *m.lyapunov / R;
              if (m.t > 0) ledger_ok = ledger_ok && l.uplink_total_reals - last == k * s;
              last = l.uplink_total_reals;
            },
            opts);
  }
  const double slope = fitted_slope(ts, mean);
  const double bound = std::log(spec.rate->rho) + 0.03;
  return {slope <= bound && ledger_ok, "slope = " + fmt("%.5f", slope) + ", log rho + 0.03 = " + fmt("%.5f", bound) +
                                           ", uplink per round " + (ledger_ok ? "= k s" : "!= k s")};
}

// --- 10 --------------------------------------------------------------------

Outcome per_coordinate() {
  Rng rng(1010);
  const int n = 4, d = 6, k = 2;
  std::vector<ProxOracle> h;
  for (int i = 0; i < n; ++i) {
    Vector lam(d), b(d);
    for (int j = 0; j < d; ++j) {
      lam[j] = rng.uniform(1.0, 5.0);
      b[j] = rng.normal();
    }
    h.push_back(ProxOracle::quadratic(QuadraticForm::diagonal(lam, b)));
  }
  const auto inst = make_quadratic_instance(SmoothOracle::zero(), 0.0, std::move(h));
  const auto dist = SamplingDistribution::uniform_minibatch(n, 2);
  const auto prm = derive_fed_params(inst, dist, k, 0.1, false);
  const auto support = enumerate_support(compressed_view(dist, k, d));
  std::vector<std::map<SubsetSample, long>> counts(d);
  AlgorithmStreams streams(11);
  CommLedger ledger;
  StepWorkspace ws;
  SolverState st = initial_state(inst, Vector::Ones(d));
  const long N = 100000;
  for (long r = 0; r < N; ++r) {
    const auto rec = fed_step(st, inst, prm, dist, streams, ledger, ws);
    std::vector<SubsetSample> touched(d);
    for (const auto& m : rec.messages)
      for (int c : m.indices) touched[c].push_back(m.client);
    for (int j = 0; j < d; ++j) {
      std::sort(touched[j].begin(), touched[j].end());
      ++counts[j][touched[j]];
    }
  }
  double worst_z = 0.0;
  for (int j = 0; j < d; ++j)
    for (const auto& e : support) {
      const double freq = counts[j][e.members] / double(N);
      const double se = std::sqrt(e.probability * (1.0 - e.probability) / N);
      worst_z = std::max(worst_z, std::abs(freq - e.probability) / se);
    }
  double empty_z = 0.0;
  const double pe = prm.p_check_empty;
  for (int j = 0; j < d; ++j)
    empty_z = std::max(empty_z, std::abs(counts[j][{}] / double(N) - pe) / std::sqrt(pe * (1.0 - pe) / N));
  return {worst_z <= 4.0 && empty_z <= 4.0, "max |z| over outcomes = " + fmt("%.2f", worst_z) +
                                                ", empty-set |z| = " + fmt("%.2f", empty_z) +
                                                ", p_check_empty = " + fmt("%.4f", pe)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "fixed-point invariance", 1.0, fixed_point},
      {2, "exact conditional contraction", 1.0, conditional_contraction},
      {3, "linear rate reproduction", 30.0, linear_rate},
      {4, "Point-SAGA equivalence", 1.0, point_saga},
      {5, "O(1/t^2) envelope", 60.0, accelerated_envelope},
      {6, "importance vs uniform sweep", 60.0, importance_sweep},
      {7, "adaptive vs best fixed stepsize", 300.0, grid_vs_adaptive},
      {8, "FedSMPM k = d equivalence", 1.0, fed_full_k},
      {9, "FedSMPM rate and uplink ledger", 60.0, fed_rate},
      {10, "per-coordinate reduction", 0.0, per_coordinate},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_s <= 0.0 || secs < c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::string budget = c.budget_s > 0.0 ? fmt(" / %.0f s", c.budget_s) : "";
    std::printf("criterion %2d %-4s %s: %s [%.2f s%s%s]\n", c.id, pass ? "PASS" : "FAIL", c.name.c_str(),
                o.detail.c_str(), secs, budget.c_str(), in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
