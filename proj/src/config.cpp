#include "smpm/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "smpm/errors.hpp"

namespace smpm {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "smpm-run";
constexpr int kVersion = 1;

json sampling_to_json(const SamplingSpec& s) {
  json j{{"law", s.law}};
  if (s.law == "uniform_minibatch") j["s"] = s.s;
  if (s.law == "singleton_weighted" || s.law == "independent") j["weights"] = s.weights;
  if (s.law == "explicit") {
    json sup = json::array();
    for (const auto& e : s.support) sup.push_back({{"members", e.members}, {"probability", e.probability}});
    j["support"] = sup;
  }
  return j;
}

SamplingSpec sampling_from_json(const json& j) {
  SamplingSpec s;
  s.law = j.at("law").get<std::string>();
  if (s.law == "uniform_minibatch") {
    s.s = j.at("s").get<int>();
  } else if (s.law == "singleton_weighted" || s.law == "independent") {
    s.weights = j.at("weights").get<std::vector<double>>();
  } else if (s.law == "explicit") {
    for (const auto& e : j.at("support"))
      s.support.push_back({e.at("members").get<std::vector<int>>(), e.at("probability").get<double>()});
  } else if (s.law != "full_batch" && s.law != "importance") {
    fail(ErrorCode::kConfiguration, "unknown sampling law: " + s.law);
  }
  return s;
}

json schedule_to_json(const ScheduleSpec& s) {
  json j{{"rule", s.rule}};
  if (s.rule == "constant") j["gamma"] = s.gamma;
  if (s.rule == "adaptive") {
    j["a"] = s.a;
    if (s.mu) j["mu"] = *s.mu;
  }
  return j;
}

ScheduleSpec schedule_from_json(const json& j) {
  ScheduleSpec s;
  s.rule = j.at("rule").get<std::string>();
  if (s.rule == "constant") {
    s.gamma = j.at("gamma").get<double>();
  } else if (s.rule == "adaptive") {
    s.a = j.value("a", 5.5);
    if (j.contains("mu")) s.mu = j.at("mu").get<double>();
  } else if (s.rule != "uniform_plan" && s.rule != "importance_plan" && s.rule != "fed_plan" &&
             s.rule != "similarity_plan") {
    fail(ErrorCode::kConfiguration, "unknown stepsize rule: " + s.rule);
  }
  return s;
}

json arm_to_json(const ArmConfig& a) {
  json j{{"name", a.name}, {"sampling", sampling_to_json(a.sampling)}, {"schedule", schedule_to_json(a.schedule)}};
  if (a.p_hat) j["p_hat"] = *a.p_hat;
  if (a.theorem) j["theorem"] = *a.theorem;
  if (a.fed_k) j["fed_k"] = *a.fed_k;
  if (a.grid_index) j["grid_index"] = *a.grid_index;
  if (a.track_z) j["track_z"] = true;
  return j;
}

ArmConfig arm_from_json(const json& j) {
  ArmConfig a;
  a.name = j.at("name").get<std::string>();
  a.sampling = sampling_from_json(j.at("sampling"));
  a.schedule = schedule_from_json(j.at("schedule"));
  if (j.contains("p_hat")) a.p_hat = j.at("p_hat").get<double>();
  if (j.contains("theorem")) a.theorem = j.at("theorem").get<std::string>();
  if (j.contains("fed_k")) a.fed_k = j.at("fed_k").get<int>();
  if (j.contains("grid_index")) a.grid_index = j.at("grid_index").get<int>();
  a.track_z = j.value("track_z", false);
  return a;
}

json problem_to_json(const RunConfig& c) {
  if (c.experiment == ProblemKind::kCustom) return json{{"instance_path", c.instance_path}};
  if (const auto* p = std::get_if<Exp1Params>(&c.problem))
    return json{{"n", p->n},           {"d", p->d},
                {"alpha", p->alpha},   {"L_max", p->L_max},
                {"max_fraction", p->max_fraction}, {"zero_fraction", p->zero_fraction},
                {"f_diag_lo", p->f_diag_lo}, {"f_diag_hi", p->f_diag_hi},
                {"b_lo", p->b_lo},     {"b_hi", p->b_hi}};
  if (const auto* p = std::get_if<Exp2Params>(&c.problem)) return json{{"n", p->n}, {"mu", p->mu}};
  const auto& p = std::get<Exp3Params>(c.problem);
  return json{{"n", p.n}, {"d", p.d}, {"mu", p.mu}, {"L_max", p.L_max}};
}

void problem_from_json(const json& j, RunConfig& c) {
  switch (c.experiment) {
    case ProblemKind::kExp1: {
      Exp1Params p;
      p.n = j.value("n", p.n);
      p.d = j.value("d", p.d);
      p.alpha = j.value("alpha", p.alpha);
      p.L_max = j.value("L_max", p.L_max);
      p.max_fraction = j.value("max_fraction", p.max_fraction);
      p.zero_fraction = j.value("zero_fraction", p.zero_fraction);
      p.f_diag_lo = j.value("f_diag_lo", p.f_diag_lo);
      p.f_diag_hi = j.value("f_diag_hi", p.f_diag_hi);
      p.b_lo = j.value("b_lo", p.b_lo);
      p.b_hi = j.value("b_hi", p.b_hi);
      c.problem = p;
      break;
    }
    case ProblemKind::kExp2: {
      Exp2Params p;
      p.n = j.value("n", p.n);
      p.mu = j.value("mu", p.mu);
      c.problem = p;
      break;
    }
    case ProblemKind::kExp3: {
      Exp3Params p;
      p.n = j.value("n", p.n);
      p.d = j.value("d", p.d);
      p.mu = j.value("mu", p.mu);
      p.L_max = j.value("L_max", p.L_max);
      c.problem = p;
      break;
    }
    case ProblemKind::kCustom:
      c.instance_path = j.at("instance_path").get<std::string>();
      break;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ArmConfig arm(std::string name, SamplingSpec sampling, ScheduleSpec schedule) {
  ArmConfig a;
  a.name = std::move(name);
  a.sampling = std::move(sampling);
  a.schedule = std::move(schedule);
  return a;
}

SamplingSpec uniform(int s) {
  SamplingSpec out;
  out.s = s;
  return out;
}

ScheduleSpec rule(const std::string& name) {
  ScheduleSpec s;
  s.rule = name;
  return s;
}

RunConfig exp1_preset(double alpha, Scale scale) {
  RunConfig c;
  c.experiment = ProblemKind::kExp1;
  Exp1Params p;
  p.alpha = alpha;
  if (scale == Scale::kSmall) {
    p.n = 50;
    p.d = 50;
  }
  c.problem = p;
  c.replicates = scale == Scale::kSmall ? 5 : 20;
  c.T = scale == Scale::kSmall ? 20000 : 60000;
  c.target = 1e-6;
  SamplingSpec imp;
  imp.law = "importance";
  ArmConfig u = arm("uniform", uniform(1), rule("uniform_plan"));
  ArmConfig i = arm("importance", imp, rule("importance_plan"));
  u.theorem = i.theorem = "THM1";
  c.arms = {u, i};
  return c;
}

RunConfig exp2_preset(Scale scale) {
  RunConfig c;
  c.experiment = ProblemKind::kExp2;
  Exp2Params p;
  p.n = scale == Scale::kSmall ? 200 : 1000;
  c.problem = p;
  c.replicates = scale == Scale::kSmall ? 10 : 3;
  c.T = scale == Scale::kSmall ? 100000 : 300000;
  for (int i = 0; i <= 11; ++i) {
    ScheduleSpec s;
    s.gamma = 10.0 * std::pow(0.5, i);
    ArmConfig a = arm("grid_" + std::to_string(i), uniform(1), s);
    a.grid_index = i;
    c.arms.push_back(a);
  }
  ScheduleSpec ad = rule("adaptive");
  ad.a = 5.5;
  ArmConfig a = arm("adaptive", uniform(1), ad);
  a.theorem = "THM_AC_PEMPTY0";
  c.arms.push_back(a);
  return c;
}

RunConfig exp3_preset(double L_max, Scale scale) {
  RunConfig c;
  c.experiment = ProblemKind::kExp3;
  Exp3Params p;
  p.L_max = L_max;
  int s = 10;
  std::vector<int> ks = {1, 10, 25, 50};
  if (scale == Scale::kSmall) {
    p.n = 20;
    p.d = 20;
    s = 5;
    ks = {1, 2, 5, 10};
  }
  c.problem = p;
  c.replicates = scale == Scale::kSmall ? 20 : 5;
  c.T = scale == Scale::kSmall ? 5000 : 50000;
  c.x0_fill = 10.0;
  c.target = 1e-6;
  for (int k : ks) {
    ArmConfig a = arm("fed_k" + std::to_string(k), uniform(s), rule("fed_plan"));
    a.fed_k = k;
    a.theorem = "THM_FED";
    c.arms.push_back(a);
  }
  return c;
}

}  // namespace

SamplingSpec sampling_spec_from_json(const std::string& text) {
  try {
    return sampling_from_json(json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfiguration, std::string("malformed sampling law: ") + e.what());
  }
}

SamplingDistribution distribution_for(const SamplingSpec& s, int n) {
  if (s.law == "uniform_minibatch") return SamplingDistribution::uniform_minibatch(n, s.s);
  if (s.law == "singleton_weighted") return SamplingDistribution::singleton_weighted(s.weights);
  if (s.law == "independent") return SamplingDistribution::independent(s.weights);
  if (s.law == "full_batch") return SamplingDistribution::full_batch(n);
  if (s.law == "explicit") return SamplingDistribution::explicit_law(n, s.support);
  if (s.law == "importance") fail(ErrorCode::kConfiguration, "the importance law is built from an instance");
  fail(ErrorCode::kConfiguration, "unknown sampling law: " + s.law);
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  if (!c.preset.empty()) j["preset"] = c.preset;
  j["experiment"] = to_string(c.experiment);
  j["problem"] = problem_to_json(c);
  if (c.delta) j["delta"] = *c.delta;
  j["problem_seed"] = c.problem_seed;
  j["seed"] = c.seed;
  j["replicates"] = c.replicates;
  j["T"] = c.T;
  j["x0_fill"] = c.x0_fill;
  if (c.target) j["target"] = *c.target;
  j["output"] = c.output;
  j["arms"] = json::array();
  for (const auto& a : c.arms) j["arms"].push_back(arm_to_json(a));
  return j.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    require(j.value("format", std::string(kFormat)) == kFormat, ErrorCode::kConfiguration,
            "not a run configuration document");
    require(j.value("version", kVersion) == kVersion, ErrorCode::kConfiguration, "unsupported configuration version");
    RunConfig c;
    c.preset = j.value("preset", std::string());
    c.experiment = problem_kind_from_string(j.at("experiment").get<std::string>());
    problem_from_json(j.value("problem", json::object()), c);
    if (j.contains("delta")) c.delta = j.at("delta").get<double>();
    c.problem_seed = j.value("problem_seed", c.problem_seed);
    c.seed = j.value("seed", c.seed);
    c.replicates = j.value("replicates", c.replicates);
    c.T = j.value("T", c.T);
    c.x0_fill = j.value("x0_fill", c.x0_fill);
    if (j.contains("target")) c.target = j.at("target").get<double>();
    c.output = j.value("output", c.output);
    for (const auto& a : j.at("arms")) c.arms.push_back(arm_from_json(a));
    require(c.replicates >= 1, ErrorCode::kConfiguration, "replicates must be at least 1");
    require(c.T >= 0, ErrorCode::kConfiguration, "T must be nonnegative");
    require(!c.arms.empty(), ErrorCode::kConfiguration, "configuration has no arms");
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfiguration, std::string("malformed configuration: ") + e.what());
  }
}

RunConfig load_config(const std::string& path) { return config_from_json(read_file(path)); }

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot open for writing: " + path);
  out << config_to_json(cfg);
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed: " + path);
}

Scale scale_from_string(const std::string& name) {
  if (name == "small") return Scale::kSmall;
  if (name == "paper") return Scale::kPaper;
  fail(ErrorCode::kConfiguration, "unknown scale: " + name);
}

std::vector<std::string> preset_names() {
  return {"exp1-alpha095", "exp1-alpha05", "exp1-alpha005", "exp2", "exp3-L50", "exp3-L500", "exp3-L5000"};
}

RunConfig preset(const std::string& name, Scale scale) {
  RunConfig c;
  if (name == "exp1-alpha095") c = exp1_preset(0.95, scale);
  else if (name == "exp1-alpha05") c = exp1_preset(0.5, scale);
  else if (name == "exp1-alpha005") c = exp1_preset(0.05, scale);
  else if (name == "exp2") c = exp2_preset(scale);
  else if (name == "exp3-L50") c = exp3_preset(50.0, scale);
  else if (name == "exp3-L500") c = exp3_preset(500.0, scale);
  else if (name == "exp3-L5000") c = exp3_preset(5000.0, scale);
  else fail(ErrorCode::kConfiguration, "unknown preset: " + name);
  c.preset = name;
  c.output = "smpm_out/" + name;
  return c;
}

}  // namespace smpm
