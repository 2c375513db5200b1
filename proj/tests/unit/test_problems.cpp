#include <doctest.h>

#include "../oracles.hpp"
#include "smpm/errors.hpp"
#include "smpm/instance_io.hpp"
#include "smpm/problems.hpp"

using namespace smpm;

namespace {

QuadraticForm random_form(int d, Rng& rng) {
  Vector lam(d), b(d);
  for (int k = 0; k < d; ++k) lam[k] = rng.uniform(0.0, 5.0);
  for (int k = 0; k < d; ++k) b[k] = rng.normal();
  return QuadraticForm::spectral(orthogonal_matrix(d, rng), lam, b);
}

Vector random_vec(int d, Rng& rng) {
  Vector v(d);
  for (int k = 0; k < d; ++k) v[k] = rng.normal();
  return v;
}

}  // namespace

TEST_SUITE("problems") {

TEST_CASE("quadratic prox of the zero form is the identity") {
  Vector v(3);
  v << 1.0, -2.0, 0.5;
  const auto q = QuadraticForm::diagonal(Vector::Zero(3), Vector::Zero(3));
  CHECK((quadratic_prox(q, 0.7, v) - v).norm() == 0.0);
}

TEST_CASE("quadratic prox with A = I halves the input") {
  Vector v(2);
  v << 4.0, -6.0;
  const auto q = QuadraticForm::diagonal(Vector::Ones(2), Vector::Zero(2));
  const Vector y = quadratic_prox(q, 1.0, v);
  CHECK(y[0] == doctest::Approx(2.0));
  CHECK(y[1] == doctest::Approx(-3.0));
}

TEST_CASE("quadratic prox matches a dense solve") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const auto q = random_form(5, rng);
    const Vector v = random_vec(5, rng);
    const Vector y = quadratic_prox(q, 0.3, v);
    const Vector ref = oracle::quadratic_prox(oracle::assemble(q.Q, q.lam), q.b, 0.3, v);
    CHECK((y - ref).cwiseAbs().maxCoeff() <= 1e-12);
    // Stationarity y + gamma (A y - b) = v.
    CHECK((y + 0.3 * q.gradient(y) - v).norm() <= 1e-10);
  }
}

TEST_CASE("quadratic prox rejects mismatched dimensions") {
  const auto q = QuadraticForm::diagonal(Vector::Ones(3), Vector::Zero(3));
  CHECK_THROWS_AS(quadratic_prox(q, 1.0, Vector::Zero(2)), Error);
}

TEST_CASE("hyperplane ridge prox: feasibility and identity on the hyperplane") {
  Rng rng(12);
  const Vector w = random_vec(6, rng);
  const Vector x = random_vec(6, rng);
  const double b = w.dot(x);
  CHECK((hyperplane_ridge_prox(w, b, 0.0, 2.0, x) - x).norm() <= 1e-12);
  const Vector z = random_vec(6, rng);
  const Vector y = hyperplane_ridge_prox(w, 0.7, 0.0, 0.5, z);
  CHECK(w.dot(y) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("hyperplane ridge prox matches the constrained 1-D reduction") {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector w = random_vec(8, rng);
    const Vector x = random_vec(8, rng);
    const double b = rng.normal();
    const double gamma = rng.uniform(0.01, 100.0);
    const Vector y = hyperplane_ridge_prox(w, b, 1e-5, gamma, x);
    const Vector ref = oracle::hyperplane_ridge_prox(w, b, 1e-5, gamma, x);
    CHECK((y - ref).norm() <= 1e-8);
  }
}

TEST_CASE("hyperplane ridge prox rejects w = 0") {
  CHECK_THROWS_AS(hyperplane_ridge_prox(Vector::Zero(3), 1.0, 0.0, 1.0, Vector::Ones(3)), Error);
}

TEST_CASE("scaled squared norm prox") {
  Vector x(2);
  x << 2.0, 4.0;
  CHECK((scaled_sqnorm_prox(0.0, 3.0, x) - x).norm() == 0.0);
  const Vector y = scaled_sqnorm_prox(1.0, 1.0, x);
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 2.0);
  Rng rng(14);
  for (int rep = 0; rep < 10; ++rep) {
    const double mu = rng.uniform(0.0, 4.0), g = rng.uniform(0.1, 3.0);
    const Vector v = random_vec(4, rng);
    const auto q = QuadraticForm::diagonal(Vector::Constant(4, mu), Vector::Zero(4));
    CHECK((scaled_sqnorm_prox(mu, g, v) - quadratic_prox(q, g, v)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("every prox oracle is firmly nonexpansive") {
  Rng rng(15);
  const int d = 6;
  std::vector<ProxOracle> oracles = {
      ProxOracle::zero(), ProxOracle::quadratic(random_form(d, rng)), ProxOracle::scaled_sqnorm(0.8),
      ProxOracle::hyperplane_ridge(random_vec(d, rng), 0.3, 1e-5), ProxOracle::box(-0.5, 0.5)};
  for (const auto& o : oracles) {
    for (int rep = 0; rep < 100; ++rep) {
      const double g = rng.uniform(0.01, 10.0);
      const Vector a = random_vec(d, rng), b = random_vec(d, rng);
      const Vector pa = o.prox(g, a), pb = o.prox(g, b);
      CHECK((pa - pb).squaredNorm() <= (pa - pb).dot(a - b) + 1e-12);
    }
  }
}

TEST_CASE("quadratic prox dual equals the gradient at the prox point") {
  Rng rng(16);
  const auto q = random_form(5, rng);
  const auto o = ProxOracle::quadratic(q);
  for (int rep = 0; rep < 10; ++rep) {
    const double g = rng.uniform(0.05, 2.0);
    const Vector v = random_vec(5, rng);
    const Vector y = o.prox(g, v);
    CHECK(((v - y) / g - q.gradient(y)).norm() <= 1e-10);
  }
}

TEST_CASE("smooth oracle constants hold on random pairs") {
  Rng rng(17);
  const auto q = random_form(5, rng);
  const auto f = SmoothOracle::quadratic(q);
  for (int rep = 0; rep < 50; ++rep) {
    const Vector x = random_vec(5, rng), y = random_vec(5, rng);
    const Vector dg = f.grad(x) - f.grad(y);
    CHECK(f.mu() * (x - y).squaredNorm() <= dg.dot(x - y) + 1e-10);
    CHECK(dg.norm() <= f.L() * (x - y).norm() + 1e-10);
  }
}

TEST_CASE("orthogonal matrix") {
  Rng rng(18);
  const Matrix q1 = orthogonal_matrix(1, rng);
  CHECK(std::abs(q1(0, 0)) == doctest::Approx(1.0));
  for (int rep = 0; rep < 5; ++rep) {
    const Matrix q = orthogonal_matrix(10, rng);
    CHECK((q.transpose() * q - Matrix::Identity(10, 10)).cwiseAbs().maxCoeff() <= 1e-10);
    for (int c = 0; c < 10; ++c) CHECK(std::abs(q.col(c).norm() - 1.0) <= 1e-10);
  }
}

TEST_CASE("EXP1 generator: smoothness split and reference solution") {
  Rng rng(19);
  Exp1Params p;
  p.n = 100;
  p.d = 100;
  p.alpha = 0.05;
  const auto inst = generate_exp1(p, rng);
  int at_max = 0, at_alpha = 0;
  for (const auto& h : inst.h) {
    if (h.L().value() == p.L_max) ++at_max;
    if (h.L().value() == doctest::Approx(p.alpha * p.L_max)) ++at_alpha;
  }
  CHECK(at_max == 20);
  CHECK(at_alpha == 80);
  CHECK(optimality_residual(inst) <= 1e-8);
  for (int i = 0; i < inst.n; ++i) {
    const auto& q = std::get<QuadraticForm>(inst.h[i].function());
    CHECK(q.max_eigenvalue() <= inst.h[i].L().value() + 1e-12);
    CHECK((inst.h[i].gradient(inst.x_star) - inst.u_star.col(i)).norm() <= 1e-10);
  }
}

TEST_CASE("EXP1 generator rejects infeasible parameters") {
  Rng rng(1);
  Exp1Params p;
  p.alpha = 0.0;
  CHECK_THROWS_AS(generate_exp1(p, rng), Error);
  p.alpha = 1.5;
  CHECK_THROWS_AS(generate_exp1(p, rng), Error);
  p.alpha = 0.5;
  p.L_max = -1.0;
  CHECK_THROWS_AS(generate_exp1(p, rng), Error);
}

TEST_CASE("EXP2 generator: residual and prox consistency of the duals") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Rng rng(seed);
    const auto inst = generate_exp2({40, 1e-5}, rng);
    CHECK(optimality_residual(inst) <= 1e-8);
    for (int i = 0; i < inst.n; ++i) {
      const Vector y = inst.h[i].prox(3.0, inst.x_star + 3.0 * inst.u_star.col(i));
      CHECK((y - inst.x_star).norm() <= 1e-8);
    }
  }
}

TEST_CASE("EXP3 generator: eigenvalues within [mu, L_max]") {
  Rng rng(20);
  const auto inst = generate_exp3({30, 20, 1.0, 50.0}, rng);
  for (const auto& h : inst.h) {
    const auto& q = std::get<QuadraticForm>(h.function());
    CHECK(q.min_eigenvalue() >= 1.0);
    CHECK(q.max_eigenvalue() <= 50.0);
    CHECK(h.mu() == 1.0);
    CHECK(h.L().value() == 50.0);
  }
  CHECK(optimality_residual(inst) <= 1e-8);
}

TEST_CASE("generators are deterministic") {
  Rng a(77), b(77);
  const auto i1 = generate_exp3({10, 8, 1.0, 50.0}, a);
  const auto i2 = generate_exp3({10, 8, 1.0, 50.0}, b);
  CHECK(instance_to_json(i1) == instance_to_json(i2));
  CHECK((i1.x_star - i2.x_star).norm() == 0.0);
}

TEST_CASE("instance JSON round trip") {
  Rng rng(21);
  const auto inst = generate_exp2({6, 1e-5}, rng);
  const auto back = instance_from_json(instance_to_json(inst));
  CHECK(back.n == inst.n);
  CHECK((back.x_star - inst.x_star).norm() == 0.0);
  CHECK((back.u_star - inst.u_star).norm() == 0.0);
  CHECK(!back.h[0].L().is_finite());
  CHECK(instance_to_json(back) == instance_to_json(inst));
}

TEST_CASE("infinite smoothness has symbolic limits") {
  CHECK(inverse_curvature_sum(2.0, Smoothness::infinite()) == 0.0);
  CHECK(cocoercive_modulus(2.0, Smoothness::infinite()) == 2.0);
  CHECK(cocoercive_modulus(1.0, Smoothness::finite(1.0)) == 0.5);
  CHECK_THROWS_AS(Smoothness::infinite().value(), Error);
}

}  // TEST_SUITE
