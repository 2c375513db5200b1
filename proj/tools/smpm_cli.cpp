#include <cstdint>
#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "smpm/smpm.h"

namespace {

using nlohmann::json;

struct ConfigDeleter {
  void operator()(smpm_config* c) const { smpm_config_free(c); }
};
using ConfigPtr = std::unique_ptr<smpm_config, ConfigDeleter>;

struct CliError {
  smpm_status status;
};

void check(smpm_status s) {
  if (s != SMPM_OK) {
    std::cerr << "smpm: " << smpm_status_name(s) << ": " << smpm_last_error() << "\n";
    throw CliError{s};
  }
}

std::string take(char* s) {
  std::string out = s ? s : "";
  smpm_string_free(s);
  return out;
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::optional<std::int64_t> T;
  std::optional<std::string> out;
};

void apply(smpm_config* c, const Overrides& o) {
  if (o.seed) check(smpm_config_set_seed(c, *o.seed));
  if (o.replicates) check(smpm_config_set_replicates(c, *o.replicates));
  if (o.T) check(smpm_config_set_iterations(c, *o.T));
  if (o.out) check(smpm_config_set_output(c, o.out->c_str()));
}

ConfigPtr load(const std::string& path) {
  smpm_config* c = nullptr;
  check(smpm_config_from_file(path.c_str(), &c));
  return ConfigPtr(c);
}

json run(smpm_config* c) {
  char* summary = nullptr;
  check(smpm_run(c, &summary));
  return json::parse(take(summary));
}

std::string fmt(const json& v) {
  if (v.is_null()) return "-";
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v.get<double>());
  return buf;
}

void print_summary(const json& s) {
  std::cout << s.value("preset", std::string("run")) << "  (" << fmt(s["seconds"]) << " s)\n";
  for (const auto& a : s["arms"]) {
    std::cout << "  " << a["name"].get<std::string>() << "  gamma0=" << fmt(a["gamma0"])
              << "  final_sq_dist=" << fmt(a["final_sq_dist"]);
    if (a.contains("iterations_to_target"))
      std::cout << "  iters_to_target=" << fmt(a["iterations_to_target"]) << "  comm_to_target="
                << fmt(a["comm_to_target"]);
    if (a.contains("overlay_ok")) std::cout << "  overlay_ok=" << (a["overlay_ok"].get<bool>() ? "yes" : "no");
    if (a["diverged"].get<bool>()) std::cout << "  diverged_at=" << fmt(a["diverged_at"]);
    std::cout << "\n";
  }
  if (s.contains("best_grid_arm")) std::cout << "  best grid arm: " << s["best_grid_arm"].get<std::string>() << "\n";
}

const std::map<std::string, std::vector<std::string>> kFamilies = {
    {"exp1", {"exp1-alpha095", "exp1-alpha05", "exp1-alpha005"}},
    {"exp2", {"exp2"}},
    {"exp3", {"exp3-L50", "exp3-L500", "exp3-L5000"}},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic minibatch proximal method: runs, rates and benchmarks"};
  app.require_subcommand(1);

  Overrides run_over;
  std::string run_config;
  auto* run_cmd = app.add_subcommand("run", "Run a configuration and write traces");
  run_cmd->add_option("--config", run_config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run_over.seed, "Base seed");
  run_cmd->add_option("--replicates", run_over.replicates, "Replicate count");
  run_cmd->add_option("--T", run_over.T, "Iterations per replicate");
  run_cmd->add_option("--out", run_over.out, "Output directory");

  std::string rates_config;
  auto* rates_cmd = app.add_subcommand("rates", "Print theoretical rates and stepsize plans");
  rates_cmd->add_option("--config", rates_config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);

  Overrides bench_over;
  std::string family, scale = "small", bench_out = "smpm_out";
  auto* bench_cmd = app.add_subcommand("bench", "Run the preset experiments of one family");
  bench_cmd->add_option("family", family, "exp1, exp2 or exp3")
      ->required()
      ->check(CLI::IsMember({"exp1", "exp2", "exp3"}));
  bench_cmd->add_option("--scale", scale, "small or paper")->check(CLI::IsMember({"small", "paper"}));
  bench_cmd->add_option("--out", bench_out, "Output root; one directory per preset");
  bench_cmd->add_option("--seed", bench_over.seed, "Base seed");
  bench_cmd->add_option("--replicates", bench_over.replicates, "Replicate count");
  bench_cmd->add_option("--T", bench_over.T, "Iterations per replicate");

  auto* presets_cmd = app.add_subcommand("presets", "List preset names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      auto c = load(run_config);
      apply(c.get(), run_over);
      print_summary(run(c.get()));
    } else if (*rates_cmd) {
      auto c = load(rates_config);
      char* out = nullptr;
      check(smpm_rates_json(c.get(), &out));
      std::cout << take(out);
    } else if (*bench_cmd) {
      for (const auto& name : kFamilies.at(family)) {
        smpm_config* raw = nullptr;
        check(smpm_config_from_preset(name.c_str(), scale.c_str(), &raw));
        ConfigPtr c(raw);
        Overrides o = bench_over;
        o.out = bench_out + "/" + name;
        apply(c.get(), o);
        print_summary(run(c.get()));
      }
    } else if (*presets_cmd) {
      char* out = nullptr;
      check(smpm_preset_names(&out));
      std::cout << take(out);
    }
  } catch (const CliError& e) {
    return e.status == SMPM_ERR_HYPOTHESIS_VIOLATION ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "smpm: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
