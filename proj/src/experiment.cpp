#include "smpm/experiment.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "smpm/errors.hpp"
#include "smpm/instance_io.hpp"

namespace smpm {
namespace {

using nlohmann::json;

constexpr double kOverlaySlack = 1.05;
// Rows whose envelope has fallen below this multiple of Psi^0 sit at the
// rounding floor and are not compared.
constexpr double kOverlayFloor = 1e-20;

bool valid_arm_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  return true;
}

ImportancePlan importance_for(const ProblemInstance& inst) {
  Vector L(inst.n);
  for (int i = 0; i < inst.n; ++i) {
    require(inst.h[i].L().is_finite(), ErrorCode::kHypothesisViolation, "importance sampling needs smooth h_i");
    L[i] = inst.h[i].L().value();
  }
  return importance_plan(L, inst.f.mu(), inst.g.mu(), inst.f.L(), L.maxCoeff());
}

int uniform_batch(const SamplingSpec& s, const char* what) {
  require(s.law == "uniform_minibatch", ErrorCode::kHypothesisViolation,
          std::string(what) + " needs uniform minibatch sampling");
  return s.s;
}

SamplingDistribution make_dist(const ProblemInstance& inst, const SamplingSpec& s,
                               std::optional<ImportancePlan>& importance) {
  if (s.law != "importance") return distribution_for(s, inst.n);
  importance = importance_for(inst);
  const Vector& p = importance->p;
  return SamplingDistribution::singleton_weighted(std::vector<double>(p.data(), p.data() + p.size()));
}

double min_mu_h(const ProblemInstance& inst) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& h : inst.h) m = std::min(m, h.mu());
  return m;
}

Smoothness max_smoothness_h(const ProblemInstance& inst) {
  double L = 0.0;
  for (const auto& h : inst.h) {
    if (!h.L().is_finite()) return Smoothness::infinite();
    L = std::max(L, h.L().value());
  }
  return Smoothness::finite(L);
}

PreparedArm prepare_arm(const ProblemInstance& inst, const ArmConfig& a) {
  PreparedArm out{a, SamplingDistribution::full_batch(inst.n), {}, {}, {}, {}, {}};
  out.dist = make_dist(inst, a.sampling, out.importance);
  const auto& rule = a.schedule.rule;
  const bool fed_theorem = a.theorem && lyapunov_kind_from_string(*a.theorem) == LyapunovKind::kFedTheorem;
  const bool similarity = a.theorem && lyapunov_kind_from_string(*a.theorem) == LyapunovKind::kSimilarity;
  const bool track_z = a.track_z || similarity;

  if (a.fed_k) {
    require(!a.p_hat, ErrorCode::kConfiguration, "FedSMPM arms take p_hat from the theorem");
    std::optional<double> gamma;
    if (rule == "constant") gamma = a.schedule.gamma;
    else require(rule == "fed_plan", ErrorCode::kUnsupported, "FedSMPM arms support the constant and fed_plan rules");
    out.fed = derive_fed_params(inst, out.dist, *a.fed_k, gamma, fed_theorem || rule == "fed_plan");
    out.params = out.fed->solver;
    out.params.track_z = track_z;
    out.plan = out.fed->plan;
    if (fed_theorem)
      out.lyapunov = make_fed_lyapunov(inst, out.params, *a.fed_k, uniform_batch(a.sampling, "THM_FED"));
    return out;
  }

  require(!fed_theorem, ErrorCode::kHypothesisViolation, "THM_FED needs a FedSMPM arm (fed_k)");
  std::optional<StepsizeSchedule> schedule;
  if (rule == "constant") {
    schedule = StepsizeSchedule::constant(a.schedule.gamma);
  } else if (rule == "adaptive") {
    const double mu = a.schedule.mu.value_or(adaptive_mu_limit(inst, out.dist));
    schedule = StepsizeSchedule::adaptive(mu, a.schedule.a);
  } else if (rule == "uniform_plan") {
    out.plan = uniform_minibatch_plan(inst.n, uniform_batch(a.sampling, "uniform_plan"), inst.f.L(), inst.f.mu(),
                                      inst.g.mu(), inst.max_L_h(), min_mu_h(inst));
  } else if (rule == "importance_plan") {
    if (!out.importance) out.importance = importance_for(inst);
    StepsizePlan p;
    p.name = "importance";
    p.gamma = out.importance->gamma;
    p.complexity = out.importance->complexity;
    out.plan = p;
  } else if (rule == "similarity_plan") {
    require(inst.delta.has_value(), ErrorCode::kHypothesisViolation, "similarity_plan needs a supplied delta");
    out.plan = similarity_plan(inst.f.L(), inst.f.mu(), max_smoothness_h(inst), min_mu_h(inst), *inst.delta,
                               out.dist.p()[0]);
  } else if (rule == "fed_plan") {
    fail(ErrorCode::kConfiguration, "fed_plan needs fed_k");
  } else {
    fail(ErrorCode::kConfiguration, "unknown stepsize rule: " + rule);
  }
  if (!schedule) schedule = StepsizeSchedule::constant(out.plan->gamma);
  out.params = derive_params(inst, out.dist, *schedule, a.p_hat, track_z);
  if (a.theorem) out.lyapunov = make_lyapunov(lyapunov_kind_from_string(*a.theorem), inst, out.params);
  return out;
}

struct ReplicateOutcome {
  std::vector<TraceRow> rows;
  std::optional<std::int64_t> diverged_at;
};

ReplicateOutcome run_replicate(const PreparedExperiment& pe, const PreparedArm& arm, int r) {
  const auto& inst = pe.instance;
  const std::int64_t T = pe.config.T;
  const LyapunovSpec* spec = arm.lyapunov ? &*arm.lyapunov : nullptr;
  AlgorithmStreams streams(pe.config.seed + static_cast<std::uint64_t>(r));
  SolverState st = initial_state(inst, pe.x0, arm.params.track_z);
  StepWorkspace ws;
  CommLedger ledger;
  ReplicateOutcome out;
  std::optional<double> psi0;
  auto log = [&]() {
    TraceRow row;
    row.t = st.t;
    row.sq_dist = (st.x - inst.x_star).squaredNorm();
    if (spec) {
      row.lyapunov = lyapunov_cached(st, inst, *spec);
      if (!psi0) psi0 = row.lyapunov;
      row.envelope = spec->envelope(st.t, *psi0);
    }
    row.comm_parallel = ledger.uplink_parallel_reals;
    row.comm_total = ledger.uplink_total_reals;
    row.replicate = r;
    out.rows.push_back(row);
  };
  log();
  try {
    while (st.t < T) {
      if (arm.fed) {
        fed_step(st, inst, *arm.fed, arm.dist, streams, ledger, ws);
      } else {
        step(st, inst, arm.params, arm.dist, streams, ws);
        const auto m = static_cast<std::int64_t>(ws.omega.size());
        ++ledger.rounds;
        if (m > 0) ledger.uplink_parallel_reals += inst.d;
        ledger.uplink_total_reals += inst.d * m;
        ledger.downlink_reals += inst.d * m;
      }
      if (default_log_when(st.t, T)) log();
    }
  } catch (const DivergenceError& e) {
    out.diverged_at = e.iteration();
  }
  return out;
}

void summarize(const RunConfig& cfg, const PreparedArm& arm, ArmResult& res) {
  res.name = arm.config.name;
  res.gamma0 = arm.params.schedule.gamma(0);
  if (arm.lyapunov) res.rho = arm.lyapunov->rho();
  res.grid_index = arm.config.grid_index;
  if (res.diverged_at) {
    res.final_sq_dist = std::numeric_limits<double>::infinity();
    return;
  }
  res.mean = aggregate_replicates(res.replicates);
  res.final_sq_dist = res.mean.back().sq_dist_mean;
  if (cfg.target) {
    for (const auto& m : res.mean)
      if (m.sq_dist_mean <= *cfg.target) {
        res.iterations_to_target = m.t;
        res.comm_to_target = m.comm_parallel_mean;
        break;
      }
  }
  if (arm.lyapunov) {
    bool ok = true;
    const double floor = kOverlayFloor * *res.mean.front().envelope;
    for (const auto& m : res.mean)
      if (*m.envelope >= floor) ok = ok && *m.lyapunov_mean <= kOverlaySlack * *m.envelope;
    res.overlay_ok = ok;
  }
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json rate_json(const RateReport& r) {
  json terms = json::array();
  for (const auto& t : r.terms) terms.push_back({{"name", t.name}, {"value", t.value}});
  return {{"rho", r.rho}, {"terms", terms}, {"binding", r.binding_name()}, {"complexity", optional_json(r.complexity)}};
}

std::string output_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

}  // namespace

bool default_log_when(std::int64_t t, std::int64_t T) { return t <= 1000 || t % 10 == 0 || t == T; }

int worker_count() {
  if (const char* env = std::getenv("SMPM_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

PreparedExperiment prepare(const RunConfig& cfg) {
  require(cfg.replicates >= 1 && cfg.T >= 0, ErrorCode::kConfiguration, "need replicates >= 1 and T >= 0");
  require(!cfg.arms.empty(), ErrorCode::kConfiguration, "configuration has no arms");
  PreparedExperiment pe;
  pe.config = cfg;
  if (cfg.experiment == ProblemKind::kCustom) {
    pe.instance = load_instance(cfg.instance_path);
  } else {
    Rng rng(cfg.problem_seed);
    pe.instance = generate_instance(cfg.problem, rng);
  }
  if (cfg.delta) pe.instance.delta = cfg.delta;
  pe.x0 = Vector::Constant(pe.instance.d, cfg.x0_fill);
  for (std::size_t k = 0; k < cfg.arms.size(); ++k) {
    const auto& a = cfg.arms[k];
    require(valid_arm_name(a.name), ErrorCode::kConfiguration, "arm name must be nonempty [A-Za-z0-9_.-]: " + a.name);
    for (std::size_t j = 0; j < k; ++j)
      require(cfg.arms[j].name != a.name, ErrorCode::kConfiguration, "duplicate arm name: " + a.name);
    try {
      pe.arms.push_back(prepare_arm(pe.instance, a));
    } catch (const Error& e) {
      throw Error(e.code(), "arm " + a.name + ": " + e.what());
    }
  }
  return pe;
}

ExperimentResult run_experiment(const PreparedExperiment& pe) {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig& cfg = pe.config;
  const std::size_t A = pe.arms.size();
  const auto R = static_cast<std::size_t>(cfg.replicates);
  std::vector<ReplicateOutcome> outcomes(A * R);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (std::size_t job; (job = next++) < outcomes.size();) {
      try {
        outcomes[job] = run_replicate(pe, pe.arms[job / R], static_cast<int>(job % R));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int W = static_cast<int>(std::min<std::size_t>(worker_count(), outcomes.size()));
  if (W <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < W; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult out;
  out.config = cfg;
  for (std::size_t a = 0; a < A; ++a) {
    ArmResult res;
    for (std::size_t r = 0; r < R; ++r) {
      auto& o = outcomes[a * R + r];
      if (o.diverged_at) res.diverged_at = std::min(res.diverged_at.value_or(*o.diverged_at), *o.diverged_at);
      res.replicates.push_back(std::move(o.rows));
    }
    summarize(cfg, pe.arms[a], res);
    out.arms.push_back(std::move(res));
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& res : out.arms) {
    if (!res.grid_index || res.diverged_at || !(res.final_sq_dist < best)) continue;
    best = res.final_sq_dist;
    out.best_grid_arm = res.name;
    out.best_grid_index = res.grid_index;
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

ExperimentResult run_experiment(const RunConfig& cfg) { return run_experiment(prepare(cfg)); }

std::string summary_json(const ExperimentResult& r) {
  json arms = json::array();
  for (const auto& a : r.arms) {
    json j{{"name", a.name},
           {"gamma0", a.gamma0},
           {"rho", optional_json(a.rho)},
           {"final_sq_dist", a.diverged_at ? json(nullptr) : json(a.final_sq_dist)},
           {"diverged", a.diverged_at.has_value()}};
    if (a.diverged_at) j["diverged_at"] = *a.diverged_at;
    if (a.grid_index) j["grid_index"] = *a.grid_index;
    if (r.config.target) {
      j["iterations_to_target"] = a.iterations_to_target ? json(*a.iterations_to_target) : json(nullptr);
      j["comm_to_target"] = optional_json(a.comm_to_target);
    }
    if (a.overlay_ok) j["overlay_ok"] = *a.overlay_ok;
    arms.push_back(j);
  }
  json j{{"preset", r.config.preset},
         {"experiment", to_string(r.config.experiment)},
         {"T", r.config.T},
         {"replicates", r.config.replicates},
         {"seed", r.config.seed},
         {"seconds", r.seconds},
         {"arms", arms}};
  if (r.config.target) j["target"] = *r.config.target;
  if (r.best_grid_arm) {
    j["best_grid_arm"] = *r.best_grid_arm;
    j["best_grid_index"] = *r.best_grid_index;
  }
  return j.dump(2) + "\n";
}

void write_outputs(const ExperimentResult& r, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::kIo, "cannot create output directory " + dir + ": " + ec.message());
  save_config(r.config, output_path(dir, "config.json"));
  for (const auto& a : r.arms) {
    std::vector<TraceRow> all;
    for (const auto& rep : a.replicates) all.insert(all.end(), rep.begin(), rep.end());
    write_trace_csv(all, output_path(dir, "trace_" + a.name + ".csv"));
    if (!a.mean.empty()) write_mean_csv(a.mean, output_path(dir, "mean_" + a.name + ".csv"));
  }
  write_text_file(summary_json(r), output_path(dir, "summary.json"));
}

std::string rates_json(const PreparedExperiment& pe) {
  json arms = json::array();
  for (const auto& a : pe.arms) {
    const auto& p = a.params;
    json j{{"name", a.config.name},
           {"law", a.dist.law_name()},
           {"gamma0", p.schedule.gamma(0)},
           {"p_empty", p.p_empty},
           {"p_hat", p.p_hat},
           {"p_bar", p.p_bar},
           {"mu_hat_h", p.mu_hat_h},
           {"eta_min", p.eta.minCoeff()},
           {"eta_max", p.eta.maxCoeff()}};
    if (a.plan) {
      j["plan"] = {{"name", a.plan->name},
                   {"gamma", a.plan->gamma},
                   {"unbounded", a.plan->unbounded},
                   {"complexity", a.plan->complexity},
                   {"communication_complexity", optional_json(a.plan->communication_complexity)}};
    }
    if (a.lyapunov) {
      j["theorem"] = to_string(a.lyapunov->kind);
      if (a.lyapunov->rate) j["rate"] = rate_json(*a.lyapunov->rate);
    }
    if (a.fed) {
      j["fed"] = {{"k", a.fed->k}, {"p_check_empty", a.fed->p_check_empty}};
      if (a.fed->theorem) {
        j["fed"]["rate"] = rate_json(a.fed->theorem->rate);
        j["fed"]["iteration_complexity"] = a.fed->theorem->iteration_complexity;
      }
    }
    arms.push_back(j);
  }
  return json{{"n", pe.instance.n}, {"d", pe.instance.d}, {"arms", arms}}.dump(2) + "\n";
}

}  // namespace smpm
