#pragma once

// The `halo` command: resolves configuration, runs experiments, writes one
// CSV per experiment and a meta.txt that reproduces the run.

#include "halo/bench/experiments.hpp"
#include "halo/cli/config.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace halo::cli {

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"logistic", "drift",         "gradient", "needle",  "scale",
                                                 "ringcost", "associativity", "dmr",      "pipeline"};
  return names;
}

/// The key `--steps` overrides for each experiment.
inline const std::map<std::string, std::string>& steps_key() {
  static const std::map<std::string, std::string> m = {
      {"logistic", "logistic.steps"},     {"drift", "drift.steps"},
      {"gradient", "gradient.depth"},     {"needle", "needle.lengths"},
      {"scale", "scale.widths"},          {"ringcost", "ringcost.steps"},
      {"associativity", "associativity.trials"}, {"dmr", "dmr.bursts"},
      {"pipeline", "pipeline.steps"},
  };
  return m;
}

inline bench::Table run_experiment(const std::string& name, const Config& c) {
  const std::uint64_t seed = c.get_uint("seed");
  const std::vector<Regime> regimes = c.get_regimes("regimes");
  if (name == "logistic") return bench::run_logistic(logistic_config(c), regimes, seed).table;
  if (name == "drift") return bench::run_drift(drift_config(c), regimes, seed).table;
  if (name == "gradient") return bench::run_gradient(gradient_config(c), regimes, seed).table;
  if (name == "needle") return bench::run_needle(needle_config(c), regimes, seed).table;
  if (name == "scale") return bench::run_scale(scale_config(c), regimes, seed).table;
  if (name == "ringcost") return bench::run_ring_cost(ringcost_config(c), seed).table;
  if (name == "associativity") return bench::run_associativity(associativity_config(c), regimes, seed).table;
  if (name == "dmr") return bench::run_dmr(dmr_config(c), seed).table;
  if (name == "pipeline") return bench::run_pipeline(pipeline_config(c), seed).table;
  throw std::invalid_argument("unknown experiment: " + name);
}

inline void write_meta(const std::filesystem::path& dir, const std::string& command, const Config& c) {
  std::ofstream out(dir / "meta.txt", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / "meta.txt").string());
  out << "# halo run configuration; pass back with --config to reproduce\n"
      << "# command: " << command << "\n"
      << "# float emulation: round-half-even per operation, no fused multiply-add\n"
      << "# exact reference: rational trajectory (certified enclosure past logistic.exact_bits_cap)\n";
  c.write(out);
}

/// Full command-line entry point. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"halo: exact rational inference experiments"};
  app.set_help_flag("-h,--help", "print this help and exit");

  std::string command;
  std::vector<std::string> commands = experiment_names();
  commands.push_back("all");
  app.add_option("command", command, "experiment to run: " + CLI::detail::join(commands, ", "))
      ->required()
      ->check(CLI::IsMember(commands));

  std::optional<std::uint64_t> steps, seed, ring_k, ring_dmax, taylor_n, budget_bits, gcd_rate;
  std::optional<std::string> out_dir, config_path, regimes;
  std::vector<std::string> sets;
  app.add_option("--steps", steps, "primary size knob of the experiment (see README)");
  app.add_option("--seed", seed, "RNG seed (default 42)");
  app.add_option("--out", out_dir, "output directory (default $HALO_OUT, else ./results)");
  app.add_option("--config", config_path, "flat key = value config file");
  app.add_option("--regimes", regimes, "comma list of bf16, fp32, fp64, exact");
  app.add_option("--ring.k", ring_k, "Ring interval K");
  app.add_option("--ring.dmax", ring_dmax, "grid denominator bound");
  app.add_option("--taylor.n", taylor_n, "Taylor order of the rational exponential");
  app.add_option("--budget-bits", budget_bits, "register budget of the reduction model");
  app.add_option("--gcd-rate", gcd_rate, "GCD engine throughput in bits per cycle");
  app.add_option("--set", sets, "override any config key: --set key=value (repeatable)");
  app.footer("Config keys (defaults):\n" + [] {
    std::string s;
    for (const auto& k : key_specs()) s += "  " + k.key + " = " + k.default_value + "    " + k.help + "\n";
    return s;
  }());

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  Config cfg;
  try {
    if (config_path) cfg.load_file(*config_path);
    const auto flag = [&](const std::string& key, const std::optional<std::uint64_t>& v) {
      if (v) cfg.set(key, std::to_string(*v), "--" + key);
    };
    flag("seed", seed);
    flag("ring.k", ring_k);
    flag("ring.dmax", ring_dmax);
    flag("taylor.n", taylor_n);
    flag("eiu.budget_bits", budget_bits);
    flag("eiu.gcd_rate", gcd_rate);
    if (regimes) cfg.set("regimes", *regimes, "--regimes");
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(trim(kv.substr(0, eq)), kv.substr(eq + 1), "--set");
    }
    if (steps) {
      for (const auto& [name, key] : steps_key())
        if (command == "all" || command == name) cfg.set(key, std::to_string(*steps), "--steps");
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  std::filesystem::path dir = "results";
  if (out_dir) dir = *out_dir;
  else if (const char* env = std::getenv("HALO_OUT"); env && *env) dir = env;

  try {
    std::filesystem::create_directories(dir);
    const std::vector<std::string> todo = command == "all" ? experiment_names() : std::vector<std::string>{command};
    for (const auto& name : todo) {
      bench::write_csv(dir / (name + ".csv"), run_experiment(name, cfg));
      out << "wrote " << (dir / (name + ".csv")).string() << "\n";
    }
    write_meta(dir, command, cfg);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace halo::cli
