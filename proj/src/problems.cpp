#include "smpm/problems.hpp"

#include <algorithm>
#include <cmath>

#include "smpm/errors.hpp"

namespace smpm {

Smoothness Smoothness::finite(double value) {
  require(std::isfinite(value) && value >= 0.0, ErrorCode::kConfiguration,
          "smoothness constant must be a finite nonnegative real");
  return Smoothness(value, false);
}

double Smoothness::value() const {
  require(!infinite_, ErrorCode::kHypothesisViolation, "smoothness constant is infinite");
  return value_;
}

double cocoercive_modulus(double mu, Smoothness L) {
  if (!L.is_finite()) return mu;
  const double sum = L.value() + mu;
  return sum > 0.0 ? mu * L.value() / sum : 0.0;
}

double inverse_curvature_sum(double mu, Smoothness L) {
  if (!L.is_finite()) return 0.0;
  const double sum = L.value() + mu;
  require(sum > 0.0, ErrorCode::kInvalidProblem, "1/(L+mu) undefined for L = mu = 0");
  return 1.0 / sum;
}

QuadraticForm QuadraticForm::diagonal(Vector lam, Vector b) {
  require(lam.size() == b.size(), ErrorCode::kConfiguration, "quadratic form: lam/b size mismatch");
  require((lam.array() >= 0.0).all(), ErrorCode::kInvalidProblem,
          "quadratic form: negative eigenvalue");
  return QuadraticForm{Matrix(), std::move(lam), std::move(b)};
}

QuadraticForm QuadraticForm::spectral(Matrix Q, Vector lam, Vector b) {
  require(lam.size() == b.size() && Q.rows() == lam.size() && Q.cols() == lam.size(),
          ErrorCode::kConfiguration, "quadratic form: dimension mismatch");
  require((lam.array() >= 0.0).all(), ErrorCode::kInvalidProblem,
          "quadratic form: negative eigenvalue");
  return QuadraticForm{std::move(Q), std::move(lam), std::move(b)};
}

Vector QuadraticForm::apply(const Vector& x) const {
  require(x.size() == lam.size(), ErrorCode::kConfiguration, "quadratic form: dimension mismatch");
  if (is_diagonal()) return lam.cwiseProduct(x);
  Vector t = Q.transpose() * x;
  t.array() *= lam.array();
  return Q * t;
}

double QuadraticForm::value(const Vector& x) const { return 0.5 * x.dot(apply(x)) - b.dot(x); }

Matrix QuadraticForm::dense() const {
  if (is_diagonal()) return lam.asDiagonal();
  return Q * lam.asDiagonal() * Q.transpose();
}

Vector quadratic_prox(const QuadraticForm& q, double gamma, const Vector& v) {
  require(gamma > 0.0, ErrorCode::kConfiguration, "prox: gamma must be positive");
  require(v.size() == q.lam.size(), ErrorCode::kConfiguration, "quadratic_prox: dimension mismatch");
  // (I + gamma A) y = v + gamma b, diagonalized by Q.
  Vector rhs = v + gamma * q.b;
  if (q.is_diagonal()) return rhs.array() / (1.0 + gamma * q.lam.array());
  Vector t = q.Q.transpose() * rhs;
  t.array() /= (1.0 + gamma * q.lam.array());
  return q.Q * t;
}

Vector hyperplane_ridge_prox(const Vector& w, double b, double mu, double gamma, const Vector& x) {
  require(gamma > 0.0, ErrorCode::kConfiguration, "prox: gamma must be positive");
  require(w.size() == x.size(), ErrorCode::kConfiguration, "hyperplane prox: dimension mismatch");
  const double w2 = w.squaredNorm();
  require(w2 > 0.0, ErrorCode::kInvalidProblem, "hyperplane prox: w must be nonzero");
  const double c = gamma * mu + 1.0;
  return x / c - ((w.dot(x) - b * c) / (c * w2)) * w;
}

Vector scaled_sqnorm_prox(double mu_g, double gamma, const Vector& x) {
  require(gamma > 0.0, ErrorCode::kConfiguration, "prox: gamma must be positive");
  return x / (1.0 + gamma * mu_g);
}

ProxOracle ProxOracle::zero() { return ProxOracle(ZeroFunction{}, 0.0, Smoothness::finite(0.0)); }

ProxOracle ProxOracle::quadratic(QuadraticForm form) {
  const double mu = form.min_eigenvalue();
  const double L = form.max_eigenvalue();
  return ProxOracle(std::move(form), mu, Smoothness::finite(L));
}

ProxOracle ProxOracle::quadratic(QuadraticForm form, double mu, Smoothness L) {
  require(mu >= 0.0 && mu <= form.min_eigenvalue() * (1.0 + 1e-12) + 1e-300,
          ErrorCode::kInvalidProblem, "quadratic oracle: mu exceeds the smallest eigenvalue");
  require(!L.is_finite() || L.value() >= form.max_eigenvalue() * (1.0 - 1e-12),
          ErrorCode::kInvalidProblem, "quadratic oracle: L below the largest eigenvalue");
  return ProxOracle(std::move(form), mu, L);
}

ProxOracle ProxOracle::scaled_sqnorm(double mu) {
  require(mu >= 0.0, ErrorCode::kInvalidProblem, "scaled norm: mu must be nonnegative");
  return ProxOracle(ScaledSqNorm{mu}, mu, Smoothness::finite(mu));
}

ProxOracle ProxOracle::hyperplane_ridge(Vector w, double b, double mu) {
  require(w.squaredNorm() > 0.0, ErrorCode::kInvalidProblem, "hyperplane: w must be nonzero");
  require(mu >= 0.0, ErrorCode::kInvalidProblem, "hyperplane: mu must be nonnegative");
  return ProxOracle(HyperplaneRidge{std::move(w), b, mu}, mu, Smoothness::infinite());
}

ProxOracle ProxOracle::box(double lo, double hi) {
  require(lo <= hi, ErrorCode::kInvalidProblem, "box: lo must not exceed hi");
  return ProxOracle(BoxIndicator{lo, hi}, 0.0, Smoothness::infinite());
}

Vector ProxOracle::prox(double gamma, const Vector& v) const {
  Vector out;
  prox_into(gamma, v, out);
  return out;
}

void ProxOracle::prox_into(double gamma, const Vector& v, Vector& out) const {
  require(gamma > 0.0, ErrorCode::kConfiguration, "prox: gamma must be positive");
  std::visit(
      [&](const auto& fn) {
        using T = std::decay_t<decltype(fn)>;
        if constexpr (std::is_same_v<T, ZeroFunction>) {
          out = v;
        } else if constexpr (std::is_same_v<T, QuadraticForm>) {
          out = quadratic_prox(fn, gamma, v);
        } else if constexpr (std::is_same_v<T, ScaledSqNorm>) {
          out = v / (1.0 + gamma * fn.mu);
        } else if constexpr (std::is_same_v<T, HyperplaneRidge>) {
          out = hyperplane_ridge_prox(fn.w, fn.b, fn.mu, gamma, v);
        } else {
          out = v.cwiseMax(fn.lo).cwiseMin(fn.hi);
        }
      },
      fn_);
}

Vector ProxOracle::gradient(const Vector& x) const {
  require(has_gradient(), ErrorCode::kHypothesisViolation, "gradient requested for a nonsmooth oracle");
  if (const auto* q = std::get_if<QuadraticForm>(&fn_)) return q->gradient(x);
  if (const auto* s = std::get_if<ScaledSqNorm>(&fn_)) return s->mu * x;
  return Vector::Zero(x.size());
}

SmoothOracle SmoothOracle::quadratic(QuadraticForm form) {
  const double L = form.max_eigenvalue();
  const double mu = form.min_eigenvalue();
  return SmoothOracle(std::move(form), L, mu);
}

SmoothOracle SmoothOracle::quadratic(QuadraticForm form, double L, double mu) {
  require(mu >= 0.0 && mu <= L, ErrorCode::kInvalidProblem, "smooth oracle: need 0 <= mu <= L");
  return SmoothOracle(std::move(form), L, mu);
}

Vector SmoothOracle::grad(const Vector& x) const {
  Vector out;
  grad_into(x, out);
  return out;
}

void SmoothOracle::grad_into(const Vector& x, Vector& out) const {
  if (form_) {
    out = form_->gradient(x);
  } else {
    out.setZero(x.size());
  }
}

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::kExp1: return "EXP1";
    case ProblemKind::kExp2: return "EXP2";
    case ProblemKind::kExp3: return "EXP3";
    case ProblemKind::kCustom: return "CUSTOM";
  }
  return "CUSTOM";
}

ProblemKind problem_kind_from_string(const std::string& name) {
  std::string upper = name;
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "EXP1") return ProblemKind::kExp1;
  if (upper == "EXP2") return ProblemKind::kExp2;
  if (upper == "EXP3") return ProblemKind::kExp3;
  if (upper == "CUSTOM") return ProblemKind::kCustom;
  fail(ErrorCode::kConfiguration, "unknown experiment kind: " + name);
}

double ProblemInstance::max_L_h() const {
  double out = 0.0;
  for (const auto& hi : h) {
    require(hi.L().is_finite(), ErrorCode::kHypothesisViolation, "some h_i is nonsmooth (L = inf)");
    out = std::max(out, hi.L().value());
  }
  return out;
}

double ProblemInstance::min_mu_h() const {
  require(!h.empty(), ErrorCode::kInvalidProblem, "instance has no h_i");
  double out = h.front().mu();
  for (const auto& hi : h) out = std::min(out, hi.mu());
  return out;
}

double optimality_residual(const ProblemInstance& inst) {
  Vector r = inst.f.grad(inst.x_star) + inst.u_star.rowwise().mean();
  const Vector& x = inst.x_star;
  std::visit(
      [&](const auto& fn) {
        using T = std::decay_t<decltype(fn)>;
        if constexpr (std::is_same_v<T, QuadraticForm>) {
          r += fn.gradient(x);
        } else if constexpr (std::is_same_v<T, ScaledSqNorm>) {
          r += fn.mu * x;
        } else if constexpr (std::is_same_v<T, HyperplaneRidge>) {
          // Best multiplier on w: remove the w-component.
          r += fn.mu * x;
          r -= (fn.w.dot(r) / fn.w.squaredNorm()) * fn.w;
        } else if constexpr (std::is_same_v<T, BoxIndicator>) {
          // Pick the element of the normal cone closest to -r.
          for (Eigen::Index j = 0; j < r.size(); ++j) {
            const bool at_lo = std::abs(x[j] - fn.lo) <= 1e-12 * (1.0 + std::abs(fn.lo));
            const bool at_hi = std::abs(x[j] - fn.hi) <= 1e-12 * (1.0 + std::abs(fn.hi));
            if (at_lo && r[j] > 0.0) r[j] = 0.0;
            if (at_hi && r[j] < 0.0) r[j] = 0.0;
          }
        }
      },
      inst.g.function());
  return r.norm();
}

namespace {

struct DenseQuadratic {
  Matrix A;
  Vector b;
};

DenseQuadratic dense_quadratic(const ProxOracle& oracle, int d) {
  if (const auto* q = std::get_if<QuadraticForm>(&oracle.function())) return {q->dense(), q->b};
  if (const auto* s = std::get_if<ScaledSqNorm>(&oracle.function()))
    return {s->mu * Matrix::Identity(d, d), Vector::Zero(d)};
  if (oracle.is_zero()) return {Matrix::Zero(d, d), Vector::Zero(d)};
  fail(ErrorCode::kInvalidProblem, "make_quadratic_instance requires quadratic h_i");
}

}  // namespace

ProblemInstance make_quadratic_instance(SmoothOracle f, double mu_g, std::vector<ProxOracle> h) {
  require(!h.empty(), ErrorCode::kInvalidProblem, "instance needs at least one h_i");
  require(mu_g >= 0.0, ErrorCode::kInvalidProblem, "mu_g must be nonnegative");
  int d = -1;
  if (const auto* q = std::get_if<QuadraticForm>(&h.front().function())) d = q->dim();
  if (f.form()) d = f.form()->dim();
  require(d > 0, ErrorCode::kInvalidProblem, "cannot infer the dimension of the instance");

  const int n = static_cast<int>(h.size());
  std::vector<DenseQuadratic> parts;
  parts.reserve(n);
  Matrix A = Matrix::Zero(d, d);
  Vector rhs = Vector::Zero(d);
  for (const auto& hi : h) {
    parts.push_back(dense_quadratic(hi, d));
    require(parts.back().A.rows() == d, ErrorCode::kInvalidProblem, "h_i dimension mismatch");
    A += parts.back().A;
    rhs += parts.back().b;
  }
  A /= n;
  rhs /= n;
  A.diagonal().array() += mu_g;
  if (f.form()) {
    A += f.form()->dense();
    rhs += f.form()->b;
  }

  Eigen::LDLT<Matrix> ldlt(A);
  require(ldlt.info() == Eigen::Success && ldlt.isPositive(), ErrorCode::kInvalidProblem,
          "aggregate system is not positive definite");
  Vector x = ldlt.solve(rhs);
  for (int pass = 0; pass < 3; ++pass) x += ldlt.solve(rhs - A * x);

  ProblemInstance inst;
  inst.n = n;
  inst.d = d;
  inst.x_star = x;
  inst.u_star.resize(d, n);
  for (int i = 0; i < n; ++i) inst.u_star.col(i) = parts[i].A * x - parts[i].b;
  inst.f = std::move(f);
  inst.g = mu_g > 0.0 ? ProxOracle::scaled_sqnorm(mu_g) : ProxOracle::zero();
  inst.h = std::move(h);
  return inst;
}

Matrix orthogonal_matrix(int d, Rng& rng) {
  require(d >= 1, ErrorCode::kConfiguration, "orthogonal_matrix: d must be positive");
  Matrix G(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ();
  const Matrix& R = qr.matrixQR();
  for (int j = 0; j < d; ++j)
    if (R(j, j) < 0.0) Q.col(j) *= -1.0;
  return Q;
}

ProblemInstance generate_exp1(const Exp1Params& p, Rng& rng) {
  require(p.n >= 1 && p.d >= 1, ErrorCode::kConfiguration, "EXP1: n and d must be positive");
  require(p.alpha > 0.0 && p.alpha <= 1.0, ErrorCode::kConfiguration, "EXP1: alpha must lie in (0,1]");
  require(p.L_max > 0.0, ErrorCode::kConfiguration, "EXP1: L_max must be positive");
  require(p.max_fraction >= 0.0 && p.max_fraction <= 1.0 && p.zero_fraction >= 0.0 &&
              p.zero_fraction < 1.0,
          ErrorCode::kConfiguration, "EXP1: fractions must lie in [0,1)");
  require(p.f_diag_lo > 0.0 && p.f_diag_lo <= p.f_diag_hi && p.b_lo <= p.b_hi,
          ErrorCode::kConfiguration, "EXP1: invalid ranges");

  const int n_max = static_cast<int>(std::lround(p.max_fraction * p.n));
  const int n_zero = static_cast<int>(std::lround(p.zero_fraction * p.d));
  Vector Bdiag(p.d);
  for (int j = 0; j < p.d; ++j) Bdiag[j] = rng.uniform(p.f_diag_lo, p.f_diag_hi);
  SmoothOracle f = SmoothOracle::quadratic(QuadraticForm::diagonal(Bdiag, Vector::Zero(p.d)));

  std::vector<ProxOracle> h;
  h.reserve(p.n);
  for (int i = 0; i < p.n; ++i) {
    const double Li = i < n_max ? p.L_max : p.alpha * p.L_max;
    Matrix Q = orthogonal_matrix(p.d, rng);
    Vector lam = Vector::Zero(p.d);
    for (int j = n_zero; j < p.d; ++j) lam[j] = rng.uniform(0.0, Li);
    // Pin the top eigenvalue so that L_{h_i} is attained exactly.
    if (n_zero < p.d) lam[p.d - 1] = Li;
    Vector b(p.d);
    for (int j = 0; j < p.d; ++j) b[j] = rng.uniform(p.b_lo, p.b_hi);
    h.push_back(ProxOracle::quadratic(QuadraticForm::spectral(std::move(Q), std::move(lam), std::move(b)),
                                      0.0, Smoothness::finite(Li)));
  }
  ProblemInstance inst = make_quadratic_instance(std::move(f), 0.0, std::move(h));
  inst.kind = ProblemKind::kExp1;
  return inst;
}

ProblemInstance generate_exp2(const Exp2Params& p, Rng& rng) {
  require(p.n >= 1, ErrorCode::kConfiguration, "EXP2: n must be positive");
  require(p.mu > 0.0, ErrorCode::kConfiguration, "EXP2: mu must be positive");
  const int n = p.n;
  const int d = p.n;
  Matrix W = orthogonal_matrix(d, rng);
  Vector x_star(d);
  for (int j = 0; j < d; ++j) x_star[j] = rng.normal();
  const Vector b = W * x_star;
  // With f = g = 0 the mean of u_i* = lambda_i w_i + mu x* must vanish, so
  // W^T lambda = -n mu x*, i.e. lambda = -n mu W x*.
  const Vector lambda = -static_cast<double>(n) * p.mu * b;

  ProblemInstance inst;
  inst.n = n;
  inst.d = d;
  inst.x_star = x_star;
  inst.u_star.resize(d, n);
  inst.h.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vector w = W.row(i).transpose();
    inst.u_star.col(i) = lambda[i] * w + p.mu * x_star;
    inst.h.push_back(ProxOracle::hyperplane_ridge(std::move(w), b[i], p.mu));
  }
  inst.kind = ProblemKind::kExp2;
  return inst;
}

ProblemInstance generate_exp3(const Exp3Params& p, Rng& rng) {
  require(p.n >= 1 && p.d >= 1, ErrorCode::kConfiguration, "EXP3: n and d must be positive");
  require(p.mu > 0.0 && p.L_max >= p.mu, ErrorCode::kConfiguration, "EXP3: need 0 < mu <= L_max");
  std::vector<ProxOracle> h;
  h.reserve(p.n);
  for (int i = 0; i < p.n; ++i) {
    Vector lam(p.d);
    for (int j = 0; j < p.d; ++j) lam[j] = rng.uniform(p.mu, p.L_max);
    Matrix Q = orthogonal_matrix(p.d, rng);
    Vector b(p.d);
    for (int j = 0; j < p.d; ++j) b[j] = rng.uniform(0.0, p.L_max);
    // Declared constants are the sampling interval ends, shared by all clients.
    h.push_back(ProxOracle::quadratic(QuadraticForm::spectral(std::move(Q), std::move(lam), std::move(b)),
                                      p.mu, Smoothness::finite(p.L_max)));
  }
  ProblemInstance inst = make_quadratic_instance(SmoothOracle::zero(), 0.0, std::move(h));
  inst.kind = ProblemKind::kExp3;
  return inst;
}

ProblemInstance generate_instance(const GeneratorParams& params, Rng& rng) {
  return std::visit(
      [&](const auto& p) -> ProblemInstance {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Exp1Params>) return generate_exp1(p, rng);
        else if constexpr (std::is_same_v<T, Exp2Params>) return generate_exp2(p, rng);
        else return generate_exp3(p, rng);
      },
      params);
}

}  // namespace smpm
