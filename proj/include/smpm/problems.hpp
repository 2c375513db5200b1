#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "smpm/rng.hpp"

namespace smpm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Smoothness constant of a function: a positive real or +infinity (nonsmooth).
// Infinity is a symbolic state, never a floating-point inf, so that limits such
// as 1/(L + mu) -> 0 are taken by branch instead of by arithmetic.
class Smoothness {
 public:
  static Smoothness finite(double value);
  static Smoothness infinite() { return Smoothness(0.0, true); }

  bool is_finite() const { return !infinite_; }
  double value() const;  // throws when infinite

  friend bool operator==(const Smoothness&, const Smoothness&) = default;

 private:
  Smoothness(double value, bool infinite) : value_(value), infinite_(infinite) {}
  double value_;
  bool infinite_;
};

// mu*L/(L+mu), the modulus in the co-coercivity inequality; equals mu when L = inf.
double cocoercive_modulus(double mu, Smoothness L);
// 1/(L+mu); zero when L = inf.
double inverse_curvature_sum(double mu, Smoothness L);

// 1/2 x^T A x - b^T x with A = Q diag(lam) Q^T. An empty Q means Q = I.
struct QuadraticForm {
  Matrix Q;
  Vector lam;
  Vector b;

  static QuadraticForm diagonal(Vector lam, Vector b);
  static QuadraticForm spectral(Matrix Q, Vector lam, Vector b);

  int dim() const { return static_cast<int>(lam.size()); }
  bool is_diagonal() const { return Q.size() == 0; }
  Vector apply(const Vector& x) const;  // A x
  Vector gradient(const Vector& x) const { return apply(x) - b; }
  double value(const Vector& x) const;
  Matrix dense() const;
  double max_eigenvalue() const { return lam.size() ? lam.maxCoeff() : 0.0; }
  double min_eigenvalue() const { return lam.size() ? lam.minCoeff() : 0.0; }
};

Vector quadratic_prox(const QuadraticForm& q, double gamma, const Vector& v);
Vector hyperplane_ridge_prox(const Vector& w, double b, double mu, double gamma, const Vector& x);
Vector scaled_sqnorm_prox(double mu_g, double gamma, const Vector& x);

struct ZeroFunction {};
struct ScaledSqNorm {
  double mu;  // (mu/2)||x||^2
};
// Indicator of {w^T x = b} plus (mu/2)||x||^2.
struct HyperplaneRidge {
  Vector w;
  double b;
  double mu;
};
// Indicator of the box [lo, hi]^d; used as a nonsmooth g in tests.
struct BoxIndicator {
  double lo;
  double hi;
};

class ProxOracle {
 public:
  using Function = std::variant<ZeroFunction, QuadraticForm, ScaledSqNorm, HyperplaneRidge, BoxIndicator>;

  static ProxOracle zero();
  // Constants default to the extreme eigenvalues of the form.
  static ProxOracle quadratic(QuadraticForm form);
  static ProxOracle quadratic(QuadraticForm form, double mu, Smoothness L);
  static ProxOracle scaled_sqnorm(double mu);
  static ProxOracle hyperplane_ridge(Vector w, double b, double mu);
  static ProxOracle box(double lo, double hi);

  Vector prox(double gamma, const Vector& v) const;
  void prox_into(double gamma, const Vector& v, Vector& out) const;

  double mu() const { return mu_; }
  Smoothness L() const { return L_; }
  bool has_gradient() const { return L_.is_finite(); }
  Vector gradient(const Vector& x) const;  // requires has_gradient()

  const Function& function() const { return fn_; }
  bool is_zero() const { return std::holds_alternative<ZeroFunction>(fn_); }

 private:
  ProxOracle(Function fn, double mu, Smoothness L) : fn_(std::move(fn)), mu_(mu), L_(L) {}

  Function fn_;
  double mu_;
  Smoothness L_;
};

// Smooth part f: either zero or a quadratic form.
class SmoothOracle {
 public:
  static SmoothOracle zero() { return SmoothOracle(std::nullopt, 0.0, 0.0); }
  static SmoothOracle quadratic(QuadraticForm form);
  static SmoothOracle quadratic(QuadraticForm form, double L, double mu);

  Vector grad(const Vector& x) const;
  void grad_into(const Vector& x, Vector& out) const;
  double L() const { return L_; }
  double mu() const { return mu_; }
  bool is_zero() const { return !form_.has_value(); }
  const std::optional<QuadraticForm>& form() const { return form_; }

 private:
  SmoothOracle(std::optional<QuadraticForm> form, double L, double mu)
      : form_(std::move(form)), L_(L), mu_(mu) {}

  std::optional<QuadraticForm> form_;
  double L_;
  double mu_;
};

enum class ProblemKind { kExp1, kExp2, kExp3, kCustom };

const char* to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& name);

struct ProblemInstance {
  SmoothOracle f = SmoothOracle::zero();
  ProxOracle g = ProxOracle::zero();
  std::vector<ProxOracle> h;
  int n = 0;
  int d = 0;
  Vector x_star;
  Matrix u_star;  // d x n, column i is u_i*
  std::optional<double> delta;
  ProblemKind kind = ProblemKind::kCustom;

  double max_L_h() const;  // +inf-free: throws when any h_i is nonsmooth
  double min_mu_h() const;
};

// Norm of grad f(x*) + q* + mean(u_i*), with q* the subgradient of g at x*
// that the instance's g admits (zero for g = 0, mu_g x* for a scaled norm).
double optimality_residual(const ProblemInstance& instance);

// Builds an instance with quadratic h_i (and quadratic f, scaled-norm g) and
// solves the optimality system for x*, setting u_i* = grad h_i(x*).
ProblemInstance make_quadratic_instance(SmoothOracle f, double mu_g, std::vector<ProxOracle> h);

Matrix orthogonal_matrix(int d, Rng& rng);

struct Exp1Params {
  int n = 100;
  int d = 100;
  double alpha = 0.05;
  double L_max = 100.0;
  double max_fraction = 0.2;   // share of h_i with L_{h_i} = L_max
  double zero_fraction = 0.2;  // share of zero eigenvalues in each A_i
  double f_diag_lo = 0.1;
  double f_diag_hi = 10.0;
  double b_lo = 0.0;
  double b_hi = 1.0;
};

struct Exp2Params {
  int n = 1000;  // d = n
  double mu = 1e-5;
};

struct Exp3Params {
  int n = 100;
  int d = 100;
  double mu = 1.0;
  double L_max = 50.0;
};

using GeneratorParams = std::variant<Exp1Params, Exp2Params, Exp3Params>;

ProblemInstance generate_instance(const GeneratorParams& params, Rng& rng);
ProblemInstance generate_exp1(const Exp1Params& params, Rng& rng);
ProblemInstance generate_exp2(const Exp2Params& params, Rng& rng);
ProblemInstance generate_exp3(const Exp3Params& params, Rng& rng);

}  // namespace smpm
