#pragma once

#include <optional>
#include <string>
#include <vector>

#include "smpm/problems.hpp"

namespace smpm {

struct ClientRateInputs {
  double p = 1.0;    // inclusion probability p_i
  double eta = 1.0;  // eta_i
  Smoothness L = Smoothness::infinite();
  double mu = 0.0;
};

struct RateInputs {
  double gamma = 0.0;
  double L_f = 0.0;
  double mu_f = 0.0;
  double mu_g = 0.0;
  double mu_hat_h = 0.0;
  double p_empty = 0.0;
  double p_hat = 1.0;
  double p_bar = 0.0;
  std::vector<ClientRateInputs> clients;
};

struct RateTerm {
  std::string name;
  double value;
};

// A contraction factor together with the terms of its max(); complexity is
// the bracketed factor of the matching O~(.) statement, up to constants.
struct RateReport {
  double rho = 1.0;
  std::vector<RateTerm> terms;
  std::size_t binding = 0;
  std::optional<double> complexity;

  const std::string& binding_name() const { return terms.at(binding).name; }
};

// max(1 - gamma mu_f, gamma L_f - 1)^2
double smooth_contraction(double gamma, double L_f, double mu_f);

RateReport rho_theorem1(const RateInputs& in);
RateReport rho_n1_simple_g(const RateInputs& in);

struct SimilarityInputs {
  double gamma = 0.0;
  double L_f = 0.0;
  double mu_f = 0.0;
  Smoothness L_h = Smoothness::infinite();
  double mu_h = 0.0;
  double delta = 0.0;
  double p_s = 1.0;
};

double similarity_mu_hat_h(double mu_h, Smoothness L_h);
double similarity_mu_hat_f(double gamma, double L_f, double mu_f);
RateReport rho_similarity(const SimilarityInputs& in);

struct FedTheoremInputs {
  int n = 1;
  int d = 1;
  int k = 1;
  int s = 1;
  double L_h = 1.0;
  double mu_h = 1.0;
  double gamma = 0.0;
};

struct FedTheoremRate {
  double p_check_empty = 0.0;
  double p_i = 0.0;
  double mu_hat_h = 0.0;
  double p_hat = 1.0;
  double eta = 1.0;
  RateReport rate;
  double iteration_complexity = 0.0;
};

FedTheoremRate rho_fed(const FedTheoremInputs& in);

struct StepsizePlan {
  std::string name;
  double gamma = 0.0;
  // Set when the prescription is "take gamma as large as you like"; gamma then
  // holds kUnboundedGamma.
  bool unbounded = false;
  double complexity = 0.0;
  std::optional<double> communication_complexity;
};

inline constexpr double kUnboundedGamma = 1e12;

StepsizePlan uniform_minibatch_plan(int n, int s, double L_f, double mu_f, double mu_g, double max_L_h,
                                    double min_mu_h);
StepsizePlan similarity_plan(double L_f, double mu_f, Smoothness L_h, double mu_h, double delta, double p_s);
StepsizePlan fed_plan(int n, int d, int k, int s, double L_h, double mu_h);

}  // namespace smpm
