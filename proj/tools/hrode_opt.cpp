// Experiment front-end: bound-curve comparison, noisy logistic-regression
// benchmark, rate-matching vs limit-system comparison, and the verification
// suite. Exit codes: 0 success, 1 verification failure, 2 config error.

#include <CLI11.hpp>

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "hrode/experiments.hpp"
#include "hrode/verification.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw hrode::ConfigError("cannot open config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hrode-opt: accelerated-method experiments and verification"};
  app.set_version_flag("--version", hrode::version_string());

  std::string experiment;
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int replicas = 0;
  int threads = 0;

  app.add_option("experiment", experiment, "bounds | classify | odecmp | verify")->required();
  app.add_option("--config", config_path, "JSON experiment configuration");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "base seed (overrides config)");
  auto* replicas_opt = app.add_option("--replicas", replicas, "Monte-Carlo replicas (overrides config)");
  app.add_option("--threads", threads, "worker threads, 0 = hardware");

  CLI11_PARSE(app, argc, argv);

  try {
    hrode::ExperimentConfig config;
    if (config_path.empty()) {
      config = hrode::parse_config("{\"experiment\":\"" + experiment + "\"}");
    } else {
      config = hrode::parse_config(read_file(config_path));
      if (config.experiment != experiment)
        throw hrode::ConfigError("config experiment \"" + config.experiment +
                                 "\" does not match the command line \"" + experiment + "\"");
    }
    if (seed_opt->count() > 0) config.seed = seed;
    if (replicas_opt->count() > 0) {
      if (replicas < 1) throw hrode::ConfigError("must be >= 1", "replicas");
      config.monte_carlo = replicas;
    }
    if (threads > 0) config.threads = threads;
    if (!config.out.empty() && out_dir == "out") out_dir = config.out;

    const hrode::ExperimentResult result =
        config.experiment == "verify"
            ? hrode::run_verify_experiment(config, out_dir, std::cout)
            : hrode::run_experiment(config, out_dir);
    for (const std::string& name : result.files_written)
      std::cout << "wrote " << (std::filesystem::path(out_dir) / name).string() << "\n";
    return result.exit_code;
  } catch (const hrode::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
