#include <doctest.h>

#include <cmath>

#include "../fixtures.hpp"
#include "../oracles.hpp"
#include "smpm/errors.hpp"
#include "smpm/lyapunov.hpp"
#include "smpm/solver.hpp"

using namespace smpm;

namespace {

std::vector<SamplingDistribution> laws_for(int n) {
  std::vector<SamplingDistribution> out;
  out.push_back(SamplingDistribution::full_batch(n));
  out.push_back(SamplingDistribution::uniform_minibatch(n, 1));
  if (n >= 2) out.push_back(SamplingDistribution::uniform_minibatch(n, 2));
  std::vector<double> q(n), r(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += (q[i] = 1.0 + i);
  for (int i = 0; i < n; ++i) q[i] /= total;
  for (int i = 0; i < n; ++i) r[i] = 0.3 + 0.5 * i / std::max(1, n - 1);
  out.push_back(SamplingDistribution::singleton_weighted(q));
  out.push_back(SamplingDistribution::independent(r));
  return out;
}

double mean_dev(const SolverState& st) { return (st.u_bar - st.u.rowwise().mean()).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("derive_params: uniform minibatch gives eta = 1") {
  Rng rng(1);
  const auto inst = fixture::quadratic_instance(6, 3, rng);
  const auto prm = derive_params(inst, SamplingDistribution::uniform_minibatch(6, 2), StepsizeSchedule::constant(0.1));
  for (int i = 0; i < 6; ++i) CHECK(prm.eta[i] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(prm.p_bar == 0.0);
  CHECK(prm.p_hat == doctest::Approx(1.0 / (1.0 + 0.1 * prm.mu_hat_h)));
}

TEST_CASE("derive_params: n = 1 with p_hat = 1 and mu_h = 0") {
  Rng rng(2);
  auto inst = fixture::quadratic_instance(1, 3, rng, {0.0, 0.0, 1.0, 0.0, 2.0});
  inst.h[0] = ProxOracle::quadratic(std::get<QuadraticForm>(inst.h[0].function()), 0.0,
                                    Smoothness::finite(std::get<QuadraticForm>(inst.h[0].function()).max_eigenvalue()));
  const auto dist = SamplingDistribution::explicit_law(1, {{{}, 0.3}, {{0}, 0.7}});
  const auto prm = derive_params(inst, dist, StepsizeSchedule::constant(0.5), 1.0);
  CHECK(prm.eta[0] == doctest::Approx(1.0 / 0.7).epsilon(1e-14));
  CHECK(prm.p_bar == doctest::Approx(0.3));
}

TEST_CASE("derive_params: default p_hat with p_empty > 0 follows the eta formula") {
  Rng rng(3);
  const auto inst = fixture::quadratic_instance(2, 3, rng);
  const auto dist = SamplingDistribution::independent({0.5, 0.5});
  const auto prm = derive_params(inst, dist, StepsizeSchedule::constant(0.2));
  CHECK(prm.p_bar == doctest::Approx(0.25));
  for (int i = 0; i < 2; ++i) {
    const double expected = (1.0 - prm.p_empty + prm.p_bar) / (2.0 * prm.tilde_p[i] * (1.0 - prm.p_empty));
    CHECK(prm.eta[i] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(prm.eta[i] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  }
  CHECK(prm.p_hat == doctest::Approx(1.0 / (1.0 + 0.2 * prm.mu_hat_h)));
  CHECK_NOTHROW(rho_theorem1(rate_inputs(inst, prm)));
}

TEST_CASE("derive_params: explicit p_hat is solved jointly and validated") {
  Rng rng(4);
  const auto inst = fixture::quadratic_instance(3, 3, rng);
  const auto dist = SamplingDistribution::independent({0.4, 0.5, 0.6});
  const auto ok = derive_params(inst, dist, StepsizeSchedule::constant(0.3), 0.2);
  CHECK(ok.p_bar == doctest::Approx(ok.p_empty * 0.2 * (1.0 + 0.3 * ok.mu_hat_h)).epsilon(1e-12));
  CHECK_NOTHROW(rho_theorem1(rate_inputs(inst, ok)));
  try {
    derive_params(inst, dist, StepsizeSchedule::constant(0.3), 1.0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kHypothesisViolation);
  }
}

TEST_CASE("derive_params: adaptive schedule restrictions") {
  Rng rng(5);
  const auto inst = fixture::quadratic_instance(2, 3, rng);
  try {
    derive_params(inst, SamplingDistribution::independent({0.5, 0.5}), StepsizeSchedule::adaptive(0.1, 5.5));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnsupported);
  }
  CHECK_THROWS_AS(StepsizeSchedule::adaptive(1.0, 5.0), Error);
  CHECK(StepsizeSchedule::adaptive(2.0, 6.0).gamma(-1) == doctest::Approx(2.0 / (2.0 * 5.0)));
  CHECK_THROWS_AS(StepsizeSchedule::constant(0.0), Error);
}

TEST_CASE("fixed point: every law leaves (x*, u*) unchanged") {
  Rng rng(6);
  const auto inst = fixture::quadratic_instance(4, 5, rng, {0.5, 2.0, 0.3, 0.5, 3.0});
  for (const auto& dist : laws_for(4)) {
    const auto prm = derive_params(inst, dist, StepsizeSchedule::constant(0.3));
    AlgorithmStreams streams(9);
    SolverState st = reference_state(inst);
    StepWorkspace ws;
    for (int t = 0; t < 100; ++t) step(st, inst, prm, dist, streams, ws);
    CHECK((st.x - inst.x_star).norm() <= 1e-10);
    CHECK((st.u - inst.u_star).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("one step equals one Point-SAGA step") {
  Rng rng(7);
  const auto inst = fixture::quadratic_instance(5, 4, rng);
  const auto dist = SamplingDistribution::uniform_minibatch(5, 1);
  const auto prm = derive_params(inst, dist, StepsizeSchedule::constant(0.4));
  for (int rep = 0; rep < 20; ++rep) {
    SolverState st = fixture::perturbed_state(inst, rng, 1.0);
    const int j = static_cast<int>(rng.below(5));
    auto [x_ref, u_ref] = point_saga_step(st.x, st.u, j, 0.4, inst.h);
    StepWorkspace ws;
    apply_step(st, inst, prm, {j}, true, ws);
    CHECK((st.x - x_ref).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((st.u - u_ref).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("Point-SAGA oracle is stationary at the solution") {
  Rng rng(8);
  const auto inst = fixture::quadratic_instance(3, 4, rng);
  auto [x, u] = point_saga_step(inst.x_star, inst.u_star, 1, 0.7, inst.h);
  CHECK((x - inst.x_star).norm() <= 1e-12);
  CHECK((u - inst.u_star).norm() <= 1e-12);
}

TEST_CASE("full batch equals the parallel Davis-Yin iteration") {
  Rng rng(9);
  for (int n = 1; n <= 4; ++n) {
    const auto inst = fixture::quadratic_instance(n, 4, rng, {0.2, 1.5, 0.4, 0.5, 3.0});
    const auto dist = SamplingDistribution::full_batch(n);
    const auto prm = derive_params(inst, dist, StepsizeSchedule::constant(0.5));
    SolverState st = fixture::perturbed_state(inst, rng, 1.0);
    oracle::Vec x = st.x;
    std::vector<oracle::Vec> u;
    for (int i = 0; i < n; ++i) u.push_back(st.u.col(i));
    const auto& fq = *inst.f.form();
    oracle::DenseQuadratic f{oracle::assemble(fq.Q, fq.lam), fq.b};
    std::vector<oracle::DenseQuadratic> h;
    for (const auto& hi : inst.h) {
      const auto& q = std::get<QuadraticForm>(hi.function());
      h.push_back({oracle::assemble(q.Q, q.lam), q.b});
    }
    AlgorithmStreams streams(1);
    StepWorkspace ws;
    for (int t = 0; t < 10; ++t) {
      step(st, inst, prm, dist, streams, ws);
      oracle::davis_yin_step(x, u, 0.5, f, 0.4, h);
      CHECK((st.x - x).cwiseAbs().maxCoeff() <= 1e-10);
      for (int i = 0; i < n; ++i) CHECK((st.u.col(i) - u[i]).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("dual update identity, u_bar cache and z tracking") {
  Rng rng(10);
  const auto inst = fixture::quadratic_instance(4, 5, rng, {0.5, 2.0, 0.0, 0.5, 3.0});
  const auto dist = SamplingDistribution::independent({0.3, 0.6, 0.8, 0.5});
  const auto prm = derive_params(inst, dist, StepsizeSchedule::constant(0.2), std::nullopt, true);
  SolverState st = initial_state(inst, fixture::random_vector(5, rng), true);
  AlgorithmStreams streams(3);
  StepWorkspace ws;
  for (int t = 0; t < 3000; ++t) {
    step(st, inst, prm, dist, streams, ws);
    CHECK(mean_dev(st) <= 1e-12);
    for (int i : ws.omega) {
      const auto& q = std::get<QuadraticForm>(inst.h[i].function());
      CHECK((st.u.col(i) - q.gradient(st.z->col(i))).norm() <= 1e-10);
    }
  }
  for (int i = 0; i < inst.n; ++i) {
    const auto& q = std::get<QuadraticForm>(inst.h[i].function());
    CHECK((st.u.col(i) - q.gradient(st.z->col(i))).norm() <= 1e-10);
  }
}

TEST_CASE("empty-set branch: accept moves to x_hat, reject keeps x, duals untouched") {
  Rng rng(11);
  const auto inst = fixture::quadratic_instance(1, 3, rng);
  const auto dist = SamplingDistribution::explicit_law(1, {{{}, 0.4}, {{0}, 0.6}});
  const auto prm = derive_params(inst, dist, StepsizeSchedule::constant(0.5));
  SolverState st = fixture::perturbed_state(inst, rng, 1.0);
  StepWorkspace ws;
  server_point(st, inst, 0.5, ws);
  const Vector x_hat = ws.x_hat;
  SolverState a = st, b = st;
  apply_step(a, inst, prm, {}, true, ws);
  apply_step(b, inst, prm, {}, false, ws);
  CHECK((a.x - x_hat).norm() == 0.0);
  CHECK((b.x - st.x).norm() == 0.0);
  CHECK((a.u - st.u).norm() == 0.0);
}

TEST_CASE("run: T = 0 and determinism") {
  Rng rng(12);
  const auto inst = fixture::quadratic_instance(5, 4, rng);
  const auto dist = SamplingDistribution::uniform_minibatch(5, 2);
  const auto prm = derive_params(inst, dist, StepsizeSchedule::constant(0.2));
  int calls = 0;
  AlgorithmStreams s0(4);
  run(inst, prm, dist, s0, 0, initial_state(inst, Vector::Zero(4)), [&](const IterationMetrics& m) {
    ++calls;
    CHECK(m.t == 0);
  });
  CHECK(calls == 1);
  std::vector<double> a, b;
  AlgorithmStreams s1(5), s2(5);
  const auto fa = run(inst, prm, dist, s1, 500, initial_state(inst, Vector::Ones(4)),
                      [&](const IterationMetrics& m) { a.push_back(m.sq_dist); });
  const auto fb = run(inst, prm, dist, s2, 500, initial_state(inst, Vector::Ones(4)),
                      [&](const IterationMetrics& m) { b.push_back(m.sq_dist); });
  CHECK(a == b);
  CHECK((fa.x - fb.x).norm() == 0.0);
  CHECK((fa.u - fb.u).norm() == 0.0);
}

TEST_CASE("divergence is reported with the iteration index") {
  Rng rng(13);
  const auto inst = fixture::quadratic_instance(2, 3, rng, {1.0, 1.0, 0.0, 0.5, 1.0});
  const auto dist = SamplingDistribution::full_batch(2);
  auto prm = derive_params(inst, dist, StepsizeSchedule::constant(0.5));
  prm.schedule = StepsizeSchedule::constant(40.0);
  SolverState st = initial_state(inst, Vector::Ones(3));
  AlgorithmStreams streams(1);
  StepWorkspace ws;
  bool thrown = false;
  try {
    for (int t = 0; t < 1000; ++t) step(st, inst, prm, dist, streams, ws);
  } catch (const DivergenceError& e) {
    thrown = true;
    CHECK(e.code() == ErrorCode::kNumericalDivergence);
    CHECK(e.iteration() > 0);
  }
  CHECK(thrown);
}

TEST_CASE("Lyapunov values") {
  Rng rng(14);
  const auto inst = fixture::quadratic_instance(3, 4, rng, {0.5, 2.0, 0.0, 0.5, 3.0});
  const auto dist = SamplingDistribution::independent({0.5, 0.7, 0.9});
  const auto prm = derive_params(inst, dist, StepsizeSchedule::constant(0.3));
  const auto spec = make_lyapunov(LyapunovKind::kTheorem1, inst, prm);
  CHECK(lyapunov(reference_state(inst), inst, spec) == 0.0);
  CHECK(conditional_expected_lyapunov(reference_state(inst), inst, prm, dist, spec) <= 1e-24);
  for (int rep = 0; rep < 10; ++rep) {
    const auto st = fixture::perturbed_state(inst, rng, 1.0);
    // Term-by-term recomputation.
    const double g = 0.3;
    double naive = (1.0 + g * prm.mu_hat_h) * (st.x - inst.x_star).squaredNorm();
    for (int i = 0; i < 3; ++i) {
      const double L = inst.h[i].L().value(), mu = inst.h[i].mu();
      const double w = (1.0 - prm.p_empty + prm.p_bar) / 3.0 / prm.p[i] * (g * g * prm.eta[i] + 2.0 * g / (L + mu));
      naive += w * (st.u.col(i) - inst.h[i].gradient(inst.x_star)).squaredNorm();
    }
    CHECK(lyapunov(st, inst, spec) == doctest::Approx(naive).epsilon(1e-13));
    CHECK(lyapunov_cached(st, inst, spec) == doctest::Approx(naive).epsilon(1e-13));
  }
}

TEST_CASE("accelerated Lyapunov with mu_h = 0: unit x weight") {
  Rng rng(15);
  std::vector<ProxOracle> h;
  for (int i = 0; i < 3; ++i) {
    Vector lam(4);
    lam << 0.0, 1.0, 2.0, 3.0;
    h.push_back(ProxOracle::quadratic(QuadraticForm::spectral(orthogonal_matrix(4, rng), lam,
                                                              fixture::random_vector(4, rng))));
  }
  const auto inst = make_quadratic_instance(SmoothOracle::zero(), 1.0, h);
  const auto dist = SamplingDistribution::uniform_minibatch(3, 1);
  const auto prm = derive_params(inst, dist, StepsizeSchedule::adaptive(0.5, 5.5));
  const auto spec = make_lyapunov(LyapunovKind::kAcceleratedMuH0, inst, prm);
  SolverState st = reference_state(inst);
  st.x[0] += 1.0;
  resync(st, inst);
  CHECK(lyapunov(st, inst, spec) == 1.0);
  CHECK(lyapunov_cached(st, inst, spec) == 1.0);
}

TEST_CASE("full batch conditional expectation is the deterministic next value") {
  Rng rng(16);
  const auto inst = fixture::quadratic_instance(3, 4, rng, {0.5, 2.0, 0.0, 0.5, 3.0});
  const auto dist = SamplingDistribution::full_batch(3);
  const auto prm = derive_params(inst, dist, StepsizeSchedule::constant(0.3));
  const auto spec = make_lyapunov(LyapunovKind::kTheorem1, inst, prm);
  const auto st = fixture::perturbed_state(inst, rng, 1.0);
  SolverState next = st;
  StepWorkspace ws;
  apply_step(next, inst, prm, {0, 1, 2}, true, ws);
  CHECK(conditional_expected_lyapunov(st, inst, prm, dist, spec) == doctest::Approx(lyapunov(next, inst, spec)).epsilon(1e-14));
}

TEST_CASE("conditional contraction for n <= 4 across laws") {
  Rng rng(17);
  for (int n = 1; n <= 4; ++n) {
    const auto inst = fixture::quadratic_instance(n, 3, rng, {0.3, 1.5, 0.0, 0.2, 5.0});
    for (const auto& dist : laws_for(n)) {
      for (double gamma : {0.1, 0.5, 1.2}) {
        const auto prm = derive_params(inst, dist, StepsizeSchedule::constant(gamma));
        const auto spec = make_lyapunov(LyapunovKind::kTheorem1, inst, prm);
        for (int rep = 0; rep < 50; ++rep) {
          const auto st = fixture::perturbed_state(inst, rng, 1.0);
          const double now = lyapunov(st, inst, spec);
          const double next = conditional_expected_lyapunov(st, inst, prm, dist, spec);
          CHECK(next <= spec.rate->rho * now * (1.0 + 1e-9));
        }
      }
    }
  }
}

TEST_CASE("n = 1 simple-g Lyapunov contracts, including the prox-skipping reduction") {
  Rng rng(18);
  std::vector<ProxOracle> h;
  const auto q = fixture::random_form(3, rng, 0.0, 4.0);
  h.push_back(ProxOracle::quadratic(q, 0.0, Smoothness::finite(q.max_eigenvalue())));
  const auto inst = make_quadratic_instance(SmoothOracle::quadratic(fixture::random_form(3, rng, 0.5, 2.0)), 0.0, h);
  const auto dist = SamplingDistribution::explicit_law(1, {{{}, 0.6}, {{0}, 0.4}});
  const auto prm = derive_params(inst, dist, StepsizeSchedule::constant(0.4), 1.0);
  CHECK(prm.eta[0] == doctest::Approx(1.0 / 0.4));
  const auto spec = make_lyapunov(LyapunovKind::kN1SimpleG, inst, prm);
  const double cor = oracle::rho_n1_muh0(0.4, inst.f.L(), inst.f.mu(), 0.0, h[0].L().value(), 0.6);
  CHECK(spec.rate->rho == doctest::Approx(cor).epsilon(1e-12));
  for (int rep = 0; rep < 50; ++rep) {
    const auto st = fixture::perturbed_state(inst, rng, 1.0);
    CHECK(conditional_expected_lyapunov(st, inst, prm, dist, spec) <= spec.rate->rho * lyapunov(st, inst, spec) * (1.0 + 1e-9));
  }
}

TEST_CASE("importance sampling plan") {
  Vector flat(3);
  flat << 0.5, 1.0, 2.0;
  const auto a = importance_plan(flat, 1.0, 0.0, 0.0, 2.0);
  CHECK((a.b - Vector::Ones(3)).norm() == 0.0);
  CHECK(a.p[0] == doctest::Approx(1.0 / 3));
  Vector two(2);
  two << 2.0, 8.0;
  const auto b = importance_plan(two, 0.5, 0.5, 0.0, 8.0);
  CHECK(b.b[0] == doctest::Approx(1.0));
  CHECK(b.b[1] == doctest::Approx(2.0));
  CHECK(b.p[0] == doctest::Approx(1.0 / 3));
  CHECK(b.p[1] == doctest::Approx(2.0 / 3));
  CHECK(b.gamma == doctest::Approx(std::max(std::sqrt(2.0 / 8.0), 1.0) / 3.0));
  CHECK_THROWS_AS(importance_plan(two, 0.0, 0.0, 0.0, 8.0), Error);
  Vector split(100);
  for (int i = 0; i < 100; ++i) split[i] = i < 20 ? 100.0 : 5.0;
  const auto c = importance_plan(split, 0.1, 0.0, 10.0, 100.0);
  CHECK(c.L_bar < 100.0);
  CHECK(c.gamma <= 0.1);
}

}  // TEST_SUITE
