#include "smpm/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smpm/errors.hpp"

namespace smpm {
namespace {

constexpr double kRelTol = 1e-9;

void check_gamma(double gamma, double L_f) {
  require(std::isfinite(gamma) && gamma > 0.0, ErrorCode::kHypothesisViolation, "gamma must be positive");
  require(L_f >= 0.0, ErrorCode::kHypothesisViolation, "L_f must be nonnegative");
  require(L_f == 0.0 || gamma < 2.0 / L_f, ErrorCode::kHypothesisViolation, "gamma must be below 2/L_f");
}

void check_probability(double p, const char* what) {
  require(p >= 0.0 && p <= 1.0, ErrorCode::kHypothesisViolation, std::string(what) + " must lie in [0,1]");
}

RateReport make_report(std::vector<RateTerm> terms) {
  RateReport out;
  out.terms = std::move(terms);
  out.binding = 0;
  for (std::size_t j = 1; j < out.terms.size(); ++j)
    if (out.terms[j].value > out.terms[out.binding].value) out.binding = j;
  out.rho = out.terms[out.binding].value;
  require(out.rho < 1.0, ErrorCode::kHypothesisViolation, "contraction factor is not below 1");
  return out;
}

// Shared hypotheses of the two theorems with p_hat, p_bar and mu_hat_h.
void check_common(const RateInputs& in) {
  check_gamma(in.gamma, in.L_f);
  require(!in.clients.empty(), ErrorCode::kHypothesisViolation, "no clients given");
  require(in.mu_f >= 0.0 && in.mu_g >= 0.0 && in.mu_hat_h >= 0.0, ErrorCode::kHypothesisViolation,
          "strong convexity constants must be nonnegative");
  require(in.mu_f > 0.0 || in.mu_g > 0.0 || in.mu_hat_h > 0.0, ErrorCode::kHypothesisViolation,
          "no source of strong convexity (mu_f, mu_g and mu_hat_h all zero)");
  check_probability(in.p_empty, "p_empty");
  require(in.p_empty < 1.0, ErrorCode::kHypothesisViolation, "p_empty must be below 1");
  check_probability(in.p_hat, "p_hat");
  require(in.p_hat <= (1.0 + kRelTol) / (1.0 + in.gamma * in.mu_hat_h), ErrorCode::kHypothesisViolation,
          "p_hat exceeds 1/(1 + gamma mu_hat_h)");
  const double p_bar = in.p_empty * in.p_hat * (1.0 + in.gamma * in.mu_hat_h);
  require(std::abs(in.p_bar - p_bar) <= kRelTol * (1.0 + p_bar), ErrorCode::kHypothesisViolation,
          "p_bar must equal p_empty p_hat (1 + gamma mu_hat_h)");
  for (const auto& c : in.clients) {
    require(c.p > 0.0 && c.p <= 1.0, ErrorCode::kHypothesisViolation, "p_i must lie in (0,1]");
    require(c.eta > 0.0 && c.mu >= 0.0, ErrorCode::kHypothesisViolation, "eta_i and mu_i must be valid");
  }
}

double first_term(const RateInputs& in) {
  return in.p_empty * (1.0 - in.p_hat) +
         (1.0 - in.p_empty + in.p_bar) * smooth_contraction(in.gamma, in.L_f, in.mu_f) /
             ((1.0 + in.gamma * in.mu_g) * (1.0 + in.gamma * in.mu_hat_h));
}

}  // namespace

double smooth_contraction(double gamma, double L_f, double mu_f) {
  const double c = std::max(1.0 - gamma * mu_f, gamma * L_f - 1.0);
  return c * c;
}

RateReport rho_theorem1(const RateInputs& in) {
  check_common(in);
  double min_ratio = std::numeric_limits<double>::infinity();
  double mu_hat_bound = std::numeric_limits<double>::infinity();
  for (const auto& c : in.clients) {
    require(c.L.is_finite(), ErrorCode::kHypothesisViolation, "this rate needs every L_{h_i} finite");
    const double curv = c.L.value() + c.mu;
    min_ratio = std::min(min_ratio, 2.0 * c.p / (in.gamma * c.eta * curv + 2.0));
    mu_hat_bound = std::min(mu_hat_bound, 2.0 * c.eta * cocoercive_modulus(c.mu, c.L));
  }
  require(in.mu_hat_h <= mu_hat_bound * (1.0 + kRelTol), ErrorCode::kHypothesisViolation,
          "mu_hat_h exceeds min_i 2 eta_i mu_i L_i/(L_i + mu_i)");
  RateReport out = make_report({{"primal", first_term(in)}, {"dual", 1.0 - min_ratio}});
  if (in.mu_hat_h == 0.0 && in.p_hat == 1.0 && in.mu_f + in.mu_g > 0.0) {
    double worst = 0.0;
    for (const auto& c : in.clients) worst = std::max(worst, (1.0 + in.gamma * c.eta * c.L.value()) / c.p);
    out.complexity = 1.0 / (in.gamma * (in.mu_f + in.mu_g)) + worst;
  }
  return out;
}

RateReport rho_n1_simple_g(const RateInputs& in) {
  check_common(in);
  require(in.clients.size() == 1, ErrorCode::kHypothesisViolation, "this rate needs n = 1");
  const auto& c = in.clients.front();
  const double q = 1.0 - in.p_empty;
  const double eta = (q + in.p_bar) / q;
  require(std::abs(c.eta - eta) <= kRelTol * eta, ErrorCode::kHypothesisViolation,
          "eta_1 must equal (1 - p_empty + p_bar)/(1 - p_empty)");
  require(in.mu_hat_h <= 2.0 * eta * cocoercive_modulus(c.mu, c.L) * (1.0 + kRelTol),
          ErrorCode::kHypothesisViolation, "mu_hat_h exceeds 2 eta_1 mu L/(L + mu)");
  const double g = 1.0 + in.gamma * in.mu_g;
  double second;
  if (c.L.is_finite()) {
    const double curv = c.L.value() + c.mu;
    second = 1.0 - q * q * (2.0 * g + in.gamma * curv) / (((q + in.p_bar) * in.gamma * curv + 2.0 * q) * g);
  } else {
    second = 1.0 - q * q / ((q + in.p_bar) * g);
  }
  return make_report({{"primal", first_term(in)}, {"dual", second}});
}

double similarity_mu_hat_h(double mu_h, Smoothness L_h) { return 2.0 * cocoercive_modulus(mu_h, L_h); }

double similarity_mu_hat_f(double gamma, double L_f, double mu_f) {
  return (1.0 - smooth_contraction(gamma, L_f, mu_f)) / gamma;
}

RateReport rho_similarity(const SimilarityInputs& in) {
  check_gamma(in.gamma, in.L_f);
  require(in.p_s > 0.0 && in.p_s <= 1.0, ErrorCode::kHypothesisViolation, "p_s must lie in (0,1]");
  require(in.delta >= 0.0, ErrorCode::kHypothesisViolation, "delta must be nonnegative");
  require(!in.L_h.is_finite() || in.delta <= in.L_h.value() * (1.0 + kRelTol), ErrorCode::kHypothesisViolation,
          "delta must not exceed L_h");
  require(in.mu_f >= 0.0 && in.mu_h >= 0.0, ErrorCode::kHypothesisViolation, "mu must be nonnegative");
  require(in.mu_f > 0.0 || in.mu_h > 0.0, ErrorCode::kHypothesisViolation, "need mu_f > 0 or mu_h > 0");

  const double mh = similarity_mu_hat_h(in.mu_h, in.L_h);
  const double mf = similarity_mu_hat_f(in.gamma, in.L_f, in.mu_f);
  require(mf >= -kRelTol, ErrorCode::kHypothesisViolation, "gamma too large for mu_hat_f >= 0");
  const double g = in.gamma;
  const double first = (2.0 - 2.0 * g * mf) / (2.0 - g * mf + g * mh);
  const double S = mf + mh;
  const double d2 = in.delta * in.delta;
  double second;
  if (in.L_h.is_finite()) {
    const double curv = in.L_h.value() + in.mu_h;
    const double num = S * curv + 4.0 * d2;
    second = 1.0 - in.p_s * num / (num + 2.0 * d2 * g * curv);
  } else {
    second = 1.0 - in.p_s * S / (S + 2.0 * d2 * g);
  }
  RateReport out = make_report({{"primal", first}, {"dual", second}});
  const double mu_sum = in.mu_f + in.mu_h;
  const double damp = in.L_h.is_finite() ? d2 / in.L_h.value() : 0.0;
  out.complexity = 1.0 / (g * mu_sum) + 1.0 / in.p_s + (d2 > 0.0 ? d2 * g / (in.p_s * (mu_sum + damp)) : 0.0);
  return out;
}

FedTheoremRate rho_fed(const FedTheoremInputs& in) {
  require(in.n >= 1 && in.d >= 1 && in.k >= 1 && in.k <= in.d && in.s >= 1 && in.s <= in.n,
          ErrorCode::kHypothesisViolation, "need 1 <= k <= d and 1 <= s <= n");
  require(in.mu_h > 0.0 && in.L_h >= in.mu_h, ErrorCode::kHypothesisViolation, "need 0 < mu_h <= L_h < inf");
  require(std::isfinite(in.gamma) && in.gamma > 0.0, ErrorCode::kHypothesisViolation, "gamma must be positive");
  const double n = in.n, d = in.d, k = in.k, s = in.s, L = in.L_h, mu = in.mu_h, g = in.gamma;

  FedTheoremRate out;
  out.p_check_empty = std::pow(1.0 - k / d, s);
  const double q = 1.0 - out.p_check_empty;
  out.p_i = k * s / (d * n);
  out.mu_hat_h = 2.0 * mu * L / (q * (L + mu));
  out.p_hat = 1.0 / (1.0 + g * out.mu_hat_h);
  out.eta = 1.0 / q;
  out.rate = make_report({{"primal", (1.0 + out.p_check_empty * g * out.mu_hat_h) / (1.0 + g * out.mu_hat_h)},
                          {"dual", 1.0 - 2.0 * k * s * q / (d * n * (g * (L + mu) + 2.0 * q))}});
  out.iteration_complexity = 1.0 / (g * mu) + 1.0 / q + d * n / (k * s) + d * n * g * L / (k * s * q);
  out.rate.complexity = out.iteration_complexity;
  return out;
}

StepsizePlan uniform_minibatch_plan(int n, int s, double L_f, double mu_f, double mu_g, double max_L_h,
                                    double min_mu_h) {
  require(n >= 1 && s >= 1 && s <= n, ErrorCode::kHypothesisViolation, "need 1 <= s <= n");
  require(L_f >= 0.0 && max_L_h > 0.0, ErrorCode::kHypothesisViolation, "need L_f >= 0 and max L_h > 0");
  const double mu_sum = mu_f + mu_g + min_mu_h;
  require(mu_sum > 0.0, ErrorCode::kHypothesisViolation, "need mu_f + mu_g + min mu_h > 0");
  StepsizePlan out;
  out.name = "uniform_minibatch";
  out.gamma = std::sqrt(static_cast<double>(s) / (n * max_L_h * mu_sum));
  if (L_f > 0.0) out.gamma = std::min(out.gamma, 1.0 / L_f);
  out.complexity = L_f / mu_sum + std::sqrt(n * max_L_h / (s * mu_sum)) + static_cast<double>(n) / s;
  return out;
}

StepsizePlan similarity_plan(double L_f, double mu_f, Smoothness L_h, double mu_h, double delta, double p_s) {
  require(p_s > 0.0 && p_s <= 1.0, ErrorCode::kHypothesisViolation, "p_s must lie in (0,1]");
  require(delta >= 0.0 && L_f >= 0.0, ErrorCode::kHypothesisViolation, "need delta >= 0 and L_f >= 0");
  const double mu_sum = mu_f + mu_h;
  require(mu_sum > 0.0, ErrorCode::kHypothesisViolation, "need mu_f + mu_h > 0");
  StepsizePlan out;
  out.name = "similarity";
  const double denom = L_h.is_finite() ? std::min(delta, std::sqrt(L_h.value() * mu_sum)) : delta;
  if (denom == 0.0) {
    if (L_f == 0.0) {
      out.unbounded = true;
      out.gamma = kUnboundedGamma;
    } else {
      out.gamma = 1.0 / L_f;
    }
  } else {
    out.gamma = std::sqrt(p_s) / denom;
    if (L_f > 0.0) out.gamma = std::min(out.gamma, 1.0 / L_f);
  }
  const double middle = L_h.is_finite() ? std::min(delta / mu_sum, std::sqrt(L_h.value() / mu_sum)) : delta / mu_sum;
  out.complexity = L_f / mu_sum + middle / std::sqrt(p_s) + 1.0 / p_s;
  return out;
}

StepsizePlan fed_plan(int n, int d, int k, int s, double L_h, double mu_h) {
  require(n >= 1 && d >= 1 && k >= 1 && k <= d && s >= 1 && s <= n, ErrorCode::kHypothesisViolation,
          "need 1 <= k <= d and 1 <= s <= n");
  require(mu_h > 0.0 && L_h >= mu_h, ErrorCode::kHypothesisViolation, "need 0 < mu_h <= L_h");
  const double nn = n, dd = d, kk = k, ss = s;
  const double q = 1.0 - std::pow(1.0 - kk / dd, ss);
  StepsizePlan out;
  out.name = "fed";
  out.gamma = std::sqrt(kk * ss * q / (dd * nn * L_h * mu_h));
  out.complexity = std::sqrt(dd * nn * L_h / (kk * ss * mu_h)) * (std::sqrt(dd / (kk * ss)) + 1.0) + dd * nn / (kk * ss);
  out.communication_complexity = dd / ss * std::sqrt(nn * L_h / mu_h) + std::sqrt(kk * dd * nn * L_h / (ss * mu_h)) +
                                 dd * nn / ss;
  return out;
}

}  // namespace smpm
