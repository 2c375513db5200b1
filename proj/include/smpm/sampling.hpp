#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "smpm/rng.hpp"

namespace smpm {

// Sorted, duplicate-free 0-based client indices; possibly empty.
using SubsetSample = std::vector<int>;

struct SupportEntry {
  SubsetSample members;
  double probability;
};

class SamplingDistribution;

struct UniformMinibatch {
  int s;
};
struct SingletonWeighted {
  std::vector<double> q;
};
struct IndependentParticipation {
  std::vector<double> r;
};
struct FullBatch {};
struct ExplicitLaw {
  std::vector<SupportEntry> support;
};
// Every member of a base draw survives independently with probability keep.
struct ThinnedLaw {
  std::shared_ptr<const SamplingDistribution> base;
  double keep;
};

class SamplingDistribution {
 public:
  using Law = std::variant<UniformMinibatch, SingletonWeighted, IndependentParticipation, FullBatch,
                           ExplicitLaw, ThinnedLaw>;

  // Largest n for which tilde_p is computed by walking all 2^n subsets.
  static constexpr int kMaxEnumerationN = 25;

  static SamplingDistribution uniform_minibatch(int n, int s);
  static SamplingDistribution singleton_weighted(std::vector<double> q);
  static SamplingDistribution independent(std::vector<double> r);
  static SamplingDistribution full_batch(int n);
  static SamplingDistribution explicit_law(int n, std::vector<SupportEntry> support);

  int n() const { return n_; }
  const Law& law() const { return law_; }
  std::string law_name() const;

  const Eigen::VectorXd& p() const { return p_; }
  double p_empty() const { return p_empty_; }
  bool has_tilde_p() const { return tilde_p_.has_value(); }
  // Throws UNSUPPORTED_EXACT when no exact value is available.
  const Eigen::VectorXd& tilde_p() const;

  void sample(Rng& rng, SubsetSample& out) const;
  SubsetSample sample(Rng& rng) const;

  // Calls visit(members, probability) for every outcome with positive mass.
  // Throws UNSUPPORTED_EXACT when the support is too large to walk.
  void for_each_outcome(const std::function<void(const SubsetSample&, double)>& visit) const;

  // Number of (possibly repeated) outcomes for_each_outcome would visit.
  double outcome_count() const;
  bool enumerable() const;

 private:
  SamplingDistribution(int n, Law law) : n_(n), law_(std::move(law)) {}
  void finalize();

  friend SamplingDistribution compressed_view(const SamplingDistribution& dist, int k, int d);

  int n_ = 0;
  Law law_;
  Eigen::VectorXd p_;
  double p_empty_ = 0.0;
  std::optional<Eigen::VectorXd> tilde_p_;
  std::vector<double> cdf_;  // singleton and explicit laws
};

Eigen::VectorXd tilde_probs(const SamplingDistribution& dist);

std::vector<SupportEntry> enumerate_support(const SamplingDistribution& dist);

struct TildeEstimate {
  Eigen::VectorXd mean;
  Eigen::VectorXd std_error;
  long long nonempty_draws = 0;
};
TildeEstimate estimate_tilde_probs_mc(const SamplingDistribution& dist, Rng& rng, long long draws);

// Law of the clients whose message carries a given coordinate when each active
// client keeps k of d coordinates: every i in Omega survives with prob. k/d.
SamplingDistribution compressed_view(const SamplingDistribution& dist, int k, int d);

// CSV with header "members,probability"; members are space separated 0-based ids.
std::string support_csv(const std::vector<SupportEntry>& support);
void write_support_csv(const std::vector<SupportEntry>& support, const std::string& path);

}  // namespace smpm
