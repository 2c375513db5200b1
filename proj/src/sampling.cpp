#include "smpm/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

#include "smpm/errors.hpp"

namespace smpm {
namespace {

constexpr double kMaxOutcomes = 33554432.0;  // 2^25
constexpr std::size_t kMaxMaterialized = std::size_t{1} << 22;
constexpr double kProbTol = 1e-9;

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double out = 1.0;
  for (int j = 1; j <= k; ++j) out = out * (n - k + j) / j;
  return out;
}

// Visits every k-subset of [0, n) in lexicographic order.
void for_each_combination(int n, int k, const std::function<void(const SubsetSample&)>& visit) {
  SubsetSample idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    visit(idx);
    int j = k - 1;
    while (j >= 0 && idx[j] == n - k + j) --j;
    if (j < 0) return;
    ++idx[j];
    for (int m = j + 1; m < k; ++m) idx[m] = idx[m - 1] + 1;
  }
}

std::vector<double> cumulative(const std::vector<double>& w) {
  std::vector<double> cdf(w.size());
  std::partial_sum(w.begin(), w.end(), cdf.begin());
  return cdf;
}

std::size_t pick(const std::vector<double>& cdf, double u) {
  const double target = u * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  std::size_t j = static_cast<std::size_t>(it - cdf.begin());
  if (j >= cdf.size()) j = cdf.size() - 1;
  return j;
}

}  // namespace

SamplingDistribution SamplingDistribution::uniform_minibatch(int n, int s) {
  require(n >= 1 && s >= 1 && s <= n, ErrorCode::kConfiguration,
          "uniform minibatch requires 1 <= s <= n");
  SamplingDistribution out(n, UniformMinibatch{s});
  out.finalize();
  return out;
}

SamplingDistribution SamplingDistribution::singleton_weighted(std::vector<double> q) {
  require(!q.empty(), ErrorCode::kConfiguration, "singleton law needs at least one weight");
  const int n = static_cast<int>(q.size());
  SamplingDistribution out(n, SingletonWeighted{std::move(q)});
  out.finalize();
  return out;
}

SamplingDistribution SamplingDistribution::independent(std::vector<double> r) {
  require(!r.empty(), ErrorCode::kConfiguration, "independent law needs at least one rate");
  const int n = static_cast<int>(r.size());
  SamplingDistribution out(n, IndependentParticipation{std::move(r)});
  out.finalize();
  return out;
}

SamplingDistribution SamplingDistribution::full_batch(int n) {
  require(n >= 1, ErrorCode::kConfiguration, "full batch requires n >= 1");
  SamplingDistribution out(n, FullBatch{});
  out.finalize();
  return out;
}

SamplingDistribution SamplingDistribution::explicit_law(int n, std::vector<SupportEntry> support) {
  require(n >= 1, ErrorCode::kConfiguration, "explicit law requires n >= 1");
  require(!support.empty(), ErrorCode::kConfiguration, "explicit law needs a nonempty support");
  SamplingDistribution out(n, ExplicitLaw{std::move(support)});
  out.finalize();
  return out;
}

std::string SamplingDistribution::law_name() const {
  return std::visit(
      [](const auto& law) -> std::string {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, UniformMinibatch>) return "uniform_minibatch";
        else if constexpr (std::is_same_v<T, SingletonWeighted>) return "singleton_weighted";
        else if constexpr (std::is_same_v<T, IndependentParticipation>) return "independent";
        else if constexpr (std::is_same_v<T, FullBatch>) return "full_batch";
        else if constexpr (std::is_same_v<T, ExplicitLaw>) return "explicit";
        else return "thinned";
      },
      law_);
}

void SamplingDistribution::finalize() {
  p_ = Eigen::VectorXd::Zero(n_);
  p_empty_ = 0.0;
  tilde_p_.reset();
  cdf_.clear();
  const double inv_n = 1.0 / n_;

  if (const auto* law = std::get_if<UniformMinibatch>(&law_)) {
    p_.setConstant(static_cast<double>(law->s) / n_);
    tilde_p_ = Eigen::VectorXd::Constant(n_, inv_n);
  } else if (const auto* law = std::get_if<SingletonWeighted>(&law_)) {
    double total = 0.0;
    for (double q : law->q) {
      require(std::isfinite(q) && q > 0.0, ErrorCode::kConfiguration,
              "singleton weights must be positive (proper sampling)");
      total += q;
    }
    require(std::abs(total - 1.0) <= kProbTol, ErrorCode::kConfiguration,
            "singleton weights must sum to 1");
    for (int i = 0; i < n_; ++i) p_[i] = law->q[i];
    tilde_p_ = p_;
    cdf_ = cumulative(law->q);
  } else if (const auto* law = std::get_if<IndependentParticipation>(&law_)) {
    double empty = 1.0;
    for (int i = 0; i < n_; ++i) {
      const double r = law->r[i];
      require(std::isfinite(r) && r > 0.0 && r <= 1.0, ErrorCode::kConfiguration,
              "participation rates must lie in (0, 1]");
      p_[i] = r;
      empty *= 1.0 - r;
    }
    p_empty_ = empty;
  } else if (std::holds_alternative<FullBatch>(law_)) {
    p_.setOnes();
    tilde_p_ = Eigen::VectorXd::Constant(n_, inv_n);
  } else if (const auto* law = std::get_if<ExplicitLaw>(&law_)) {
    std::vector<double> weights;
    double total = 0.0;
    for (const auto& entry : law->support) {
      require(entry.probability >= 0.0 && std::isfinite(entry.probability), ErrorCode::kConfiguration,
              "explicit law: probabilities must be nonnegative");
      for (std::size_t j = 0; j < entry.members.size(); ++j) {
        require(entry.members[j] >= 0 && entry.members[j] < n_, ErrorCode::kConfiguration,
                "explicit law: member index out of range");
        require(j == 0 || entry.members[j - 1] < entry.members[j], ErrorCode::kConfiguration,
                "explicit law: members must be sorted and distinct");
      }
      total += entry.probability;
      weights.push_back(entry.probability);
      if (entry.members.empty()) p_empty_ += entry.probability;
      for (int i : entry.members) p_[i] += entry.probability;
    }
    require(std::abs(total - 1.0) <= kProbTol, ErrorCode::kConfiguration,
            "explicit law: probabilities must sum to 1");
    cdf_ = cumulative(weights);
  } else if (const auto* law = std::get_if<ThinnedLaw>(&law_)) {
    const SamplingDistribution& base = *law->base;
    const double q = law->keep;
    p_ = q * base.p();
    if (const auto* b = std::get_if<UniformMinibatch>(&base.law())) {
      p_empty_ = std::pow(1.0 - q, b->s);
      tilde_p_ = Eigen::VectorXd::Constant(n_, inv_n);
    } else if (std::holds_alternative<FullBatch>(base.law())) {
      p_empty_ = std::pow(1.0 - q, n_);
      tilde_p_ = Eigen::VectorXd::Constant(n_, inv_n);
    } else if (std::holds_alternative<SingletonWeighted>(base.law())) {
      p_empty_ = 1.0 - q;
      tilde_p_ = base.p();
    } else {
      // Given |Omega| = m with i in Omega, E[1{i kept}/|kept|] = (1-(1-q)^m)/m.
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(n_);
      double empty = 0.0;
      base.for_each_outcome([&](const SubsetSample& omega, double prob) {
        const double survive_none = std::pow(1.0 - q, static_cast<double>(omega.size()));
        empty += prob * survive_none;
        if (omega.empty()) return;
        const double w = prob * (1.0 - survive_none) / static_cast<double>(omega.size());
        for (int i : omega) acc[i] += w;
      });
      p_empty_ = empty;
      tilde_p_ = acc / (1.0 - empty);
    }
  }

  require((p_.array() > 0.0).all(), ErrorCode::kConfiguration,
          "sampling is not proper: some p_i = 0");
  require(p_empty_ < 1.0, ErrorCode::kConfiguration, "sampling is empty almost surely");

  if (!tilde_p_ && enumerable()) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n_);
    for_each_outcome([&](const SubsetSample& omega, double prob) {
      if (omega.empty()) return;
      const double w = prob / static_cast<double>(omega.size());
      for (int i : omega) acc[i] += w;
    });
    tilde_p_ = acc / (1.0 - p_empty_);
  }
}

const Eigen::VectorXd& SamplingDistribution::tilde_p() const {
  if (!tilde_p_) {
    fail(ErrorCode::kUnsupportedExact,
         "no exact tilde_p for law '" + law_name() + "' with n = " + std::to_string(n_) +
             "; use estimate_tilde_probs_mc");
  }
  return *tilde_p_;
}

SubsetSample SamplingDistribution::sample(Rng& rng) const {
  SubsetSample out;
  sample(rng, out);
  return out;
}

void SamplingDistribution::sample(Rng& rng, SubsetSample& out) const {
  out.clear();
  std::visit(
      [&](const auto& law) {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, UniformMinibatch>) {
          if (law.s == n_) {
            out.resize(n_);
            std::iota(out.begin(), out.end(), 0);
          } else if (law.s == 1) {
            out.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(n_))));
          } else {
            // Floyd's algorithm.
            std::vector<char> taken(n_, 0);
            for (int j = n_ - law.s; j < n_; ++j) {
              int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(j) + 1));
              if (taken[t]) t = j;
              taken[t] = 1;
              out.push_back(t);
            }
            std::sort(out.begin(), out.end());
          }
        } else if constexpr (std::is_same_v<T, SingletonWeighted>) {
          out.push_back(static_cast<int>(pick(cdf_, rng.uniform())));
        } else if constexpr (std::is_same_v<T, IndependentParticipation>) {
          for (int i = 0; i < n_; ++i)
            if (rng.bernoulli(law.r[i])) out.push_back(i);
        } else if constexpr (std::is_same_v<T, FullBatch>) {
          out.resize(n_);
          std::iota(out.begin(), out.end(), 0);
        } else if constexpr (std::is_same_v<T, ExplicitLaw>) {
          out = law.support[pick(cdf_, rng.uniform())].members;
        } else {
          SubsetSample base;
          law.base->sample(rng, base);
          for (int i : base)
            if (rng.bernoulli(law.keep)) out.push_back(i);
        }
      },
      law_);
}

double SamplingDistribution::outcome_count() const {
  return std::visit(
      [&](const auto& law) -> double {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, UniformMinibatch>) return binomial(n_, law.s);
        else if constexpr (std::is_same_v<T, SingletonWeighted>) return n_;
        else if constexpr (std::is_same_v<T, IndependentParticipation>) return std::ldexp(1.0, n_);
        else if constexpr (std::is_same_v<T, FullBatch>) return 1.0;
        else if constexpr (std::is_same_v<T, ExplicitLaw>) return static_cast<double>(law.support.size());
        else {
          const SamplingDistribution& base = *law.base;
          if (const auto* b = std::get_if<UniformMinibatch>(&base.law()))
            return binomial(n_, b->s) * std::ldexp(1.0, b->s);
          if (std::holds_alternative<FullBatch>(base.law())) return std::ldexp(1.0, n_);
          if (std::holds_alternative<SingletonWeighted>(base.law())) return 2.0 * n_;
          if (const auto* b = std::get_if<ExplicitLaw>(&base.law())) {
            double total = 0.0;
            for (const auto& e : b->support) total += std::ldexp(1.0, static_cast<int>(e.members.size()));
            return total;
          }
          return std::ldexp(1.0, n_) * base.outcome_count();
        }
      },
      law_);
}

bool SamplingDistribution::enumerable() const {
  if (std::holds_alternative<IndependentParticipation>(law_) && n_ > kMaxEnumerationN) return false;
  return outcome_count() <= kMaxOutcomes;
}

void SamplingDistribution::for_each_outcome(
    const std::function<void(const SubsetSample&, double)>& visit) const {
  if (!enumerable()) {
    fail(ErrorCode::kUnsupportedExact,
         "support of law '" + law_name() + "' with n = " + std::to_string(n_) + " is too large to enumerate");
  }
  std::visit(
      [&](const auto& law) {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, UniformMinibatch>) {
          const double prob = 1.0 / binomial(n_, law.s);
          for_each_combination(n_, law.s, [&](const SubsetSample& c) { visit(c, prob); });
        } else if constexpr (std::is_same_v<T, SingletonWeighted>) {
          SubsetSample one(1);
          for (int i = 0; i < n_; ++i) {
            one[0] = i;
            visit(one, law.q[i]);
          }
        } else if constexpr (std::is_same_v<T, IndependentParticipation>) {
          SubsetSample members;
          const std::uint64_t total = std::uint64_t{1} << n_;
          for (std::uint64_t mask = 0; mask < total; ++mask) {
            members.clear();
            double prob = 1.0;
            for (int i = 0; i < n_; ++i) {
              if (mask >> i & 1u) {
                members.push_back(i);
                prob *= law.r[i];
              } else {
                prob *= 1.0 - law.r[i];
              }
            }
            if (prob > 0.0) visit(members, prob);
          }
        } else if constexpr (std::is_same_v<T, FullBatch>) {
          SubsetSample all(n_);
          std::iota(all.begin(), all.end(), 0);
          visit(all, 1.0);
        } else if constexpr (std::is_same_v<T, ExplicitLaw>) {
          for (const auto& e : law.support)
            if (e.probability > 0.0) visit(e.members, e.probability);
        } else {
          const double q = law.keep;
          SubsetSample kept;
          law.base->for_each_outcome([&](const SubsetSample& omega, double prob) {
            const std::size_t m = omega.size();
            for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
              kept.clear();
              double w = prob;
              for (std::size_t j = 0; j < m; ++j) {
                if (mask >> j & 1u) {
                  kept.push_back(omega[j]);
                  w *= q;
                } else {
                  w *= 1.0 - q;
                }
              }
              if (w > 0.0) visit(kept, w);
            }
          });
        }
      },
      law_);
}

Eigen::VectorXd tilde_probs(const SamplingDistribution& dist) { return dist.tilde_p(); }

std::vector<SupportEntry> enumerate_support(const SamplingDistribution& dist) {
  if (dist.outcome_count() > static_cast<double>(kMaxMaterialized) || !dist.enumerable()) {
    fail(ErrorCode::kUnsupportedExact, "support of law '" + dist.law_name() + "' with n = " +
                                           std::to_string(dist.n()) + " is too large to enumerate");
  }
  std::vector<SupportEntry> out;
  if (std::holds_alternative<ThinnedLaw>(dist.law())) {
    // Different base outcomes can thin to the same subset; merge them.
    std::map<SubsetSample, double> merged;
    dist.for_each_outcome([&](const SubsetSample& s, double p) { merged[s] += p; });
    out.reserve(merged.size());
    for (auto& [members, prob] : merged) out.push_back({members, prob});
  } else {
    dist.for_each_outcome([&](const SubsetSample& s, double p) { out.push_back({s, p}); });
  }
  return out;
}

TildeEstimate estimate_tilde_probs_mc(const SamplingDistribution& dist, Rng& rng, long long draws) {
  require(draws >= 1, ErrorCode::kConfiguration, "estimate_tilde_probs_mc: need at least one draw");
  const int n = dist.n();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(n);
  long long nonempty = 0;
  SubsetSample omega;
  for (long long t = 0; t < draws; ++t) {
    dist.sample(rng, omega);
    if (omega.empty()) continue;
    ++nonempty;
    const double w = 1.0 / static_cast<double>(omega.size());
    for (int i : omega) {
      sum[i] += w;
      sum_sq[i] += w * w;
    }
  }
  if (nonempty == 0) fail(ErrorCode::kDegenerateSample, "every Monte-Carlo draw was empty");
  TildeEstimate est;
  est.nonempty_draws = nonempty;
  const double m = static_cast<double>(nonempty);
  est.mean = sum / m;
  est.std_error = Eigen::VectorXd::Zero(n);
  if (nonempty > 1) {
    for (int i = 0; i < n; ++i) {
      const double var = std::max(0.0, (sum_sq[i] - m * est.mean[i] * est.mean[i]) / (m - 1.0));
      est.std_error[i] = std::sqrt(var / m);
    }
  }
  return est;
}

SamplingDistribution compressed_view(const SamplingDistribution& dist, int k, int d) {
  require(d >= 1 && k >= 1 && k <= d, ErrorCode::kConfiguration, "compressed view requires 1 <= k <= d");
  if (k == d) return dist;
  const double q = static_cast<double>(k) / d;
  if (const auto* law = std::get_if<IndependentParticipation>(&dist.law())) {
    std::vector<double> r = law->r;
    for (double& v : r) v *= q;
    return SamplingDistribution::independent(std::move(r));
  }
  if (const auto* law = std::get_if<ThinnedLaw>(&dist.law())) {
    SamplingDistribution out(dist.n(), ThinnedLaw{law->base, law->keep * q});
    out.finalize();
    return out;
  }
  SamplingDistribution out(dist.n(), ThinnedLaw{std::make_shared<const SamplingDistribution>(dist), q});
  out.finalize();
  return out;
}

std::string support_csv(const std::vector<SupportEntry>& support) {
  std::string out = "members,probability\n";
  char buf[64];
  for (const auto& e : support) {
    for (std::size_t j = 0; j < e.members.size(); ++j) {
      if (j) out += ' ';
      out += std::to_string(e.members[j]);
    }
    std::snprintf(buf, sizeof buf, ",%.17g\n", e.probability);
    out += buf;
  }
  return out;
}

void write_support_csv(const std::vector<SupportEntry>& support, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot open for writing: " + path);
  out << support_csv(support);
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed: " + path);
}

}  // namespace smpm
