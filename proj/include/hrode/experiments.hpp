#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hrode/analysis.hpp"
#include "hrode/csv.hpp"
#include "hrode/errors.hpp"
#include "hrode/objectives.hpp"
#include "hrode/optimizers.hpp"
#include "hrode/schedules.hpp"

namespace hrode {

using json = nlohmann::json;

#ifndef HRODE_VERSION
#define HRODE_VERSION "0.1.0+unknown"
#endif

inline const char* version_string() { return HRODE_VERSION; }

// ---------------------------------------------------------------------------
// Configuration

struct MethodConfig {
  std::string name;
  json params;  // validated keys: c, alpha, beta, s, sigma2, batch
};

struct ExperimentConfig {
  std::string experiment;  // bounds | classify | odecmp | verify
  std::uint64_t seed = 0;
  int monte_carlo = 1;
  int threads = 0;  // 0 -> hardware concurrency
  std::string out;

  // classify
  int samples = 1000;
  int dimension = 10;
  int epochs = 100;
  double noise_sigma2 = 1.0;
  std::vector<MethodConfig> methods;

  // bounds
  std::vector<double> lipschitz_values{100.0, 1000.0};
  double sigma2 = 25.0;
  double R2 = 1.0;
  json c_expr = "auto";
  json beta_expr = "L/10";
  json eps_k0 = "estimate";
  std::optional<double> eps0;
  int k_max = 200000;
  int points = 160;
  int estimate_replicas = 100;
  std::string overlay;

  // odecmp
  std::vector<double> s_values{1e-2, 1e-3, 1e-4};
  double t_start = 0.1;
  double t_end = 5.0;
  double dt = 1e-3;

  json raw;  // config echo for the manifest
};

inline const std::set<std::string>& known_method_names() {
  static const std::set<std::string> names{"nag",    "nag_sie",      "rate_match",
                                           "rate_match_nag", "nnag", "mnnag",
                                           "perturbed_gd",   "gd",   "sgd",
                                           "svrg",   "nnag_sgd",     "nnag_svrg"};
  return names;
}

// Scalar or one of the strings "auto", "L", "L/<number>", resolved once the
// smoothness constant is known.
inline double resolve_param(const json& value, double lipschitz, double auto_value,
                            const std::string& key) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    const std::string text = value.get<std::string>();
    if (text == "auto") return auto_value;
    if (text == "L") return lipschitz;
    if (text.rfind("L/", 0) == 0) {
      try {
        std::size_t used = 0;
        const double div = std::stod(text.substr(2), &used);
        if (used == text.size() - 2 && div != 0.0) return lipschitz / div;
      } catch (const std::exception&) {
      }
    }
  }
  throw ConfigError("expected a number, \"auto\", \"L\" or \"L/<number>\"", key);
}

inline void validate_param_expr(const json& value, const std::string& key) {
  resolve_param(value, 1.0, 1.0, key);  // grammar check only
}

inline void reject_unknown_keys(const json& object, const std::set<std::string>& allowed,
                                const std::string& where) {
  for (const auto& item : object.items())
    if (!allowed.contains(item.key()))
      throw ConfigError("unknown key in " + where, item.key());
}

inline ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  if (!root.contains("experiment")) throw ConfigError("missing required field", "experiment");

  ExperimentConfig config;
  config.raw = root;
  config.experiment = root.at("experiment").get<std::string>();

  static const std::set<std::string> common{"experiment", "seed", "monte_carlo", "threads", "out"};
  std::set<std::string> allowed = common;
  if (config.experiment == "classify") {
    allowed.insert({"samples", "dimension", "epochs", "noise_sigma2", "methods"});
  } else if (config.experiment == "bounds") {
    allowed.insert({"lipschitz_values", "sigma2", "R2", "c", "beta", "eps_k0", "eps0", "k_max",
                    "points", "estimate_replicas", "overlay"});
  } else if (config.experiment == "odecmp") {
    allowed.insert({"s_values", "t_start", "t_end", "dt"});
  } else if (config.experiment != "verify") {
    throw ConfigError("unknown experiment \"" + config.experiment + "\"", "experiment");
  }
  reject_unknown_keys(root, allowed, "config");

  auto read = [&root](const char* key, auto& into) {
    if (root.contains(key)) into = root.at(key).get<std::decay_t<decltype(into)>>();
  };
  read("seed", config.seed);
  read("monte_carlo", config.monte_carlo);
  read("threads", config.threads);
  read("out", config.out);
  if (config.monte_carlo < 1) throw ConfigError("must be >= 1", "monte_carlo");

  if (config.experiment == "classify") {
    read("samples", config.samples);
    read("dimension", config.dimension);
    read("epochs", config.epochs);
    read("noise_sigma2", config.noise_sigma2);
    if (config.samples < 1) throw ConfigError("must be >= 1", "samples");
    if (config.dimension < 1) throw ConfigError("must be >= 1", "dimension");
    if (config.epochs < 1) throw ConfigError("must be >= 1", "epochs");
    if (root.contains("methods")) {
      for (const auto& entry : root.at("methods")) {
        if (!entry.is_object() || !entry.contains("name"))
          throw ConfigError("method entries need a \"name\"", "methods");
        MethodConfig method;
        method.name = entry.at("name").get<std::string>();
        if (!known_method_names().contains(method.name))
          throw ConfigError("unknown method \"" + method.name + "\"", "methods");
        static const std::set<std::string> keys{"name", "c", "alpha", "beta", "s", "sigma2",
                                                "batch"};
        reject_unknown_keys(entry, keys, "method \"" + method.name + "\"");
        for (const char* key : {"c", "beta", "s"})
          if (entry.contains(key)) validate_param_expr(entry.at(key), key);
        method.params = entry;
        config.methods.push_back(std::move(method));
      }
    } else {
      for (const char* name : {"nnag", "perturbed_gd", "sgd", "svrg", "nnag_sgd", "nnag_svrg"})
        config.methods.push_back({name, json::object()});
    }
  } else if (config.experiment == "bounds") {
    read("lipschitz_values", config.lipschitz_values);
    read("sigma2", config.sigma2);
    read("R2", config.R2);
    read("k_max", config.k_max);
    read("points", config.points);
    read("estimate_replicas", config.estimate_replicas);
    read("overlay", config.overlay);
    if (root.contains("c")) {
      validate_param_expr(root.at("c"), "c");
      config.c_expr = root.at("c");
    }
    if (root.contains("beta")) {
      validate_param_expr(root.at("beta"), "beta");
      config.beta_expr = root.at("beta");
    }
    if (root.contains("eps_k0")) {
      config.eps_k0 = root.at("eps_k0");
      if (!config.eps_k0.is_number() &&
          !(config.eps_k0.is_string() && config.eps_k0.get<std::string>() == "estimate"))
        throw ConfigError("expected a number or \"estimate\"", "eps_k0");
    }
    if (root.contains("eps0")) config.eps0 = root.at("eps0").get<double>();
    if (config.k_max < 4) throw ConfigError("must be >= 4", "k_max");
    if (config.points < 2) throw ConfigError("must be >= 2", "points");
  } else if (config.experiment == "odecmp") {
    read("s_values", config.s_values);
    read("t_start", config.t_start);
    read("t_end", config.t_end);
    read("dt", config.dt);
    if (config.s_values.empty()) throw ConfigError("must be nonempty", "s_values");
    if (!(config.t_start > 0.0) || !(config.t_end > config.t_start))
      throw ConfigError("need 0 < t_start < t_end", "t_start");
    if (!(config.dt > 0.0)) throw ConfigError("must be positive", "dt");
  }
  return config;
}

// ---------------------------------------------------------------------------
// Monte-Carlo aggregation

struct SummaryRow {
  int index = 0;
  double mean = 0.0;
  double lo68 = 0.0;
  double hi68 = 0.0;
};

// Mean across replicas with a one-sample-standard-deviation band
// ((N-1)-denominator; N = 1 gives a zero-width band).
inline std::vector<SummaryRow> summarize(const std::vector<std::vector<double>>& replicas,
                                         const std::vector<int>& indices) {
  if (replicas.empty()) throw std::invalid_argument("summarize: no replicas");
  const std::size_t rows = replicas.front().size();
  for (const auto& series : replicas)
    if (series.size() != rows) throw std::invalid_argument("summarize: misaligned replica lengths");
  if (indices.size() != rows) throw std::invalid_argument("summarize: misaligned indices");

  const double n = static_cast<double>(replicas.size());
  std::vector<SummaryRow> table(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    double mean = 0.0;
    for (const auto& series : replicas) mean += series[i];
    mean /= n;
    double ss = 0.0;
    for (const auto& series : replicas) ss += (series[i] - mean) * (series[i] - mean);
    const double sd = n > 1.0 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    table[i] = SummaryRow{indices[i], mean, mean - sd, mean + sd};
  }
  return table;
}

inline void write_summary_csv(const std::vector<SummaryRow>& table, const std::string& index_name,
                              std::ostream& out) {
  out << index_name << ",mean,lo68,hi68\n";
  for (const SummaryRow& row : table)
    out << row.index << "," << format_g17(row.mean) << "," << format_g17(row.lo68) << ","
        << format_g17(row.hi68) << "\n";
}

// Deterministic parallel map over replica indices: every worker writes only
// its own slots, so thread count never changes results.
template <class Fn>
inline void parallel_replicas(int count, int threads, Fn&& fn) {
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& thread : pool) thread.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Method resolution

inline MethodSpec make_method_spec(const MethodConfig& method, double lipschitz,
                                   double noise_sigma2) {
  const double inv_l = 1.0 / lipschitz;
  const double inv_rl = 1.0 / std::sqrt(lipschitz);
  MethodSpec spec;
  spec.name = method.name;
  spec.lipschitz = lipschitz;

  if (method.name == "nag" || method.name == "nag_sie" || method.name == "rate_match" ||
      method.name == "rate_match_nag") {
    spec.method = method.name == "nag"          ? Method::Nag
                  : method.name == "nag_sie"    ? Method::NagSie
                  : method.name == "rate_match" ? Method::RateMatch
                                                : Method::RateMatchNag;
    spec.s = inv_l;
    spec.oracle = OracleMode::Exact;
  } else if (method.name == "nnag") {
    spec.method = Method::Nnag;
    spec.c = inv_rl;
    spec.beta = lipschitz / 10.0;
    spec.oracle = OracleMode::GaussianNoise;
    spec.sigma2 = noise_sigma2;
  } else if (method.name == "mnnag") {
    spec.method = Method::Mnnag;
    spec.c = inv_rl;
    spec.oracle = OracleMode::GaussianNoise;
    spec.sigma2 = noise_sigma2;
  } else if (method.name == "perturbed_gd") {
    spec.method = Method::PerturbedGd;
    spec.oracle = OracleMode::GaussianNoise;
    spec.sigma2 = noise_sigma2;
  } else if (method.name == "gd") {
    spec.method = Method::Gd;
    spec.s = inv_l;
    spec.oracle = noise_sigma2 > 0.0 ? OracleMode::GaussianNoise : OracleMode::Exact;
    spec.sigma2 = noise_sigma2;
  } else if (method.name == "sgd") {
    spec.method = Method::Gd;
    spec.s = inv_l;
    spec.oracle = OracleMode::Minibatch;
    spec.batch = 1;
  } else if (method.name == "svrg") {
    spec.method = Method::Gd;
    spec.s = inv_l / 10.0;
    spec.oracle = OracleMode::SvrgSnapshot;
  } else if (method.name == "nnag_sgd") {
    spec.method = Method::Nnag;
    spec.c = inv_rl;
    spec.beta = lipschitz;
    spec.oracle = OracleMode::Minibatch;
    spec.batch = 1;
  } else if (method.name == "nnag_svrg") {
    spec.method = Method::Nnag;
    spec.c = inv_rl;
    spec.beta = lipschitz / 10.0;
    spec.oracle = OracleMode::SvrgSnapshot;
    spec.reset_schedule_on_snapshot = true;
  } else {
    throw ConfigError("unknown method \"" + method.name + "\"", "methods");
  }

  const json& p = method.params;
  if (p.contains("c")) spec.c = resolve_param(p.at("c"), lipschitz, inv_rl, "c");
  if (p.contains("beta")) spec.beta = resolve_param(p.at("beta"), lipschitz, lipschitz / 10.0, "beta");
  if (p.contains("s")) spec.s = resolve_param(p.at("s"), lipschitz, inv_l, "s");
  if (p.contains("alpha")) spec.alpha = p.at("alpha").get<double>();
  if (p.contains("sigma2")) spec.sigma2 = p.at("sigma2").get<double>();
  if (p.contains("batch")) spec.batch = p.at("batch").get<int>();
  return spec;
}

// Oracle invocations consumed by one iteration of the method.
inline int invocations_per_iteration(const MethodSpec& spec) {
  return spec.method == Method::Nnag || spec.method == Method::Mnnag ? 2 : 1;
}

// ---------------------------------------------------------------------------
// Experiment results

struct ExperimentResult {
  int exit_code = 0;
  json manifest;
  std::vector<std::string> files_written;
};

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& dir, const std::string& name,
                                 ExperimentResult& result) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + (dir / name).string());
  result.files_written.push_back(name);
  return out;
}

inline void write_manifest(const ExperimentConfig& config, const std::filesystem::path& dir,
                           ExperimentResult& result, json diagnostics) {
  std::sort(result.files_written.begin(), result.files_written.end());
  json manifest;
  manifest["version"] = version_string();
  manifest["experiment"] = config.experiment;
  manifest["config"] = config.raw;
  manifest["outputs"] = result.files_written;
  manifest["diagnostics"] = std::move(diagnostics);
  result.manifest = manifest;
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "run_manifest.json", std::ios::binary);
  out << manifest.dump(2) << "\n";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// classify: noisy logistic-regression benchmark

struct ClassifyMethodResult {
  std::string name;
  std::vector<SummaryRow> loss;
  std::vector<SummaryRow> gradnorm2;
  double final_mean_loss = 0.0;
  std::vector<int> diverged_replicas;
  int lemma_window_violations = 0;
};

struct ClassifyResult {
  std::vector<ClassifyMethodResult> methods;
  Dataset data;
};

inline ClassifyResult run_classify(const ExperimentConfig& config) {
  ClassifyResult result;
  result.data = generate_classification_data(config.samples, config.dimension, config.seed);
  const Objective obj = make_logistic(result.data);
  const Vector x0 = Vector::Zero(config.dimension);

  for (const MethodConfig& method : config.methods) {
    const MethodSpec spec = make_method_spec(method, obj.lipschitz, config.noise_sigma2);
    const bool stochastic =
        spec.oracle == OracleMode::Minibatch || spec.oracle == OracleMode::SvrgSnapshot;
    const int per_epoch =
        stochastic ? std::max(1, obj.components / invocations_per_iteration(spec)) : 1;
    RunOptions options;
    options.iterations = config.epochs * per_epoch;
    options.log_every = per_epoch;

    std::vector<std::optional<TrajectoryRecord>> records(config.monte_carlo);
    parallel_replicas(config.monte_carlo, config.threads, [&](int r) {
      RunOptions opt = options;
      opt.seed = config.seed + static_cast<std::uint64_t>(r);
      try {
        records[r] = run_optimizer(spec, obj, x0, opt);
      } catch (const RunDivergenceError&) {
        records[r] = std::nullopt;
      }
    });

    ClassifyMethodResult method_result;
    method_result.name = method.name;
    std::vector<std::vector<double>> losses, grads;
    std::vector<int> epochs_index;
    for (int r = 0; r < config.monte_carlo; ++r) {
      if (!records[r]) {
        method_result.diverged_replicas.push_back(r);
        continue;
      }
      losses.push_back(records[r]->fgap);
      grads.push_back(records[r]->gradnorm2);
      method_result.lemma_window_violations += records[r]->lemma_window_violations;
    }
    if (losses.empty()) {
      result.methods.push_back(std::move(method_result));
      continue;
    }
    epochs_index.resize(losses.front().size());
    for (std::size_t i = 0; i < epochs_index.size(); ++i) epochs_index[i] = static_cast<int>(i);
    method_result.loss = summarize(losses, epochs_index);
    method_result.gradnorm2 = summarize(grads, epochs_index);
    method_result.final_mean_loss = method_result.loss.back().mean;
    result.methods.push_back(std::move(method_result));
  }
  return result;
}

// ---------------------------------------------------------------------------
// bounds: theoretical curve comparison

struct BoundsCurveSet {
  double lipschitz = 0.0;
  int k0 = 1;
  double eps_k0 = 0.0;
  double eps0 = 0.0;
  std::vector<std::pair<int, double>> nnag;   // alpha = 3/4 noisy bound
  std::vector<std::pair<int, double>> mnnag;  // modified noisy bound
  int crossover = -1;  // first grid k from which nnag stays below mnnag
};

// Monte-Carlo mean of the noisy-method Lyapunov at the critical iteration on
// a 1-D unit quadratic treated as L-smooth (valid for any L >= 1).
inline double estimate_eps_k0(double lipschitz, double c, double beta, double sigma2, double R2,
                              int k0, int replicas, std::uint64_t seed, int threads) {
  const Objective obj = make_quadratic(Vector::Ones(1), Vector::Zero(1));
  Vector x0(1);
  x0[0] = std::sqrt(R2);
  MethodSpec spec;
  spec.method = Method::Nnag;
  spec.name = "nnag";
  spec.c = c;
  spec.alpha = 0.75;
  spec.beta = beta;
  spec.lipschitz = lipschitz;
  spec.oracle = OracleMode::GaussianNoise;
  spec.sigma2 = sigma2;

  std::vector<double> values(replicas);
  parallel_replicas(replicas, threads, [&](int r) {
    if (k0 <= 1) {
      OptimizerState state{x0, x0, 1, StepSchedule(c, 0.75, 1).time(1)};
      values[r] = nnag_lyapunov(obj, state, beta, lipschitz);
      return;
    }
    RunOptions opt;
    opt.iterations = k0 - 1;
    opt.seed = seed + static_cast<std::uint64_t>(r);
    values[r] = run_optimizer(spec, obj, x0, opt).lyapunov.back();
  });
  double mean = 0.0;
  for (double v : values) mean += v;
  return mean / replicas;
}

inline std::vector<int> log_spaced_ks(int k_min, int k_max, int points) {
  std::set<int> ks;
  const double lo = std::log(static_cast<double>(k_min));
  const double hi = std::log(static_cast<double>(k_max));
  for (int i = 0; i < points; ++i) {
    const double w = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    ks.insert(static_cast<int>(std::lround(std::exp(lo + w * (hi - lo)))));
  }
  return {ks.begin(), ks.end()};
}

inline BoundsCurveSet compute_bound_curves(const ExperimentConfig& config, double lipschitz) {
  BoundsCurveSet curves;
  curves.lipschitz = lipschitz;
  const double c = resolve_param(config.c_expr, lipschitz, 1.0 / std::sqrt(lipschitz), "c");
  const double beta = resolve_param(config.beta_expr, lipschitz, lipschitz / 10.0, "beta");
  curves.k0 = critical_iteration(NnagParams(beta, StepSchedule(c, 0.75), lipschitz));
  curves.eps0 = config.eps0.value_or(config.R2 / 2.0);
  curves.eps_k0 = config.eps_k0.is_number()
                      ? config.eps_k0.get<double>()
                      : estimate_eps_k0(lipschitz, c, beta, config.sigma2, config.R2, curves.k0,
                                        config.estimate_replicas, config.seed, config.threads);

  BoundSpec spec;
  spec.R2 = config.R2;
  spec.c = c;
  spec.alpha = 0.75;
  spec.beta = beta;
  spec.lipschitz = lipschitz;
  spec.sigma2 = config.sigma2;
  spec.k0 = curves.k0;
  spec.eps_k0 = curves.eps_k0;
  spec.eps0 = curves.eps0;

  const std::vector<int> mnnag_ks = log_spaced_ks(2, config.k_max, config.points);
  curves.mnnag = bound_curve(BoundId::MnnagFgap, spec, mnnag_ks);
  const int nnag_min = std::max(2, curves.k0);
  std::vector<int> nnag_ks;
  for (int k : mnnag_ks)
    if (k >= nnag_min) nnag_ks.push_back(k);
  if (nnag_ks.empty() || nnag_ks.front() != nnag_min) nnag_ks.insert(nnag_ks.begin(), nnag_min);
  curves.nnag = bound_curve(BoundId::NnagA34, spec, nnag_ks);

  // first grid index from which the noisy curve stays below through k_max
  int crossover = -1;
  for (auto it = curves.nnag.rbegin(); it != curves.nnag.rend(); ++it) {
    const double mnnag_value = theoretical_bound(BoundId::MnnagFgap, spec, it->first);
    if (it->second < mnnag_value)
      crossover = it->first;
    else
      break;
  }
  curves.crossover = crossover;
  return curves;
}

// ---------------------------------------------------------------------------
// odecmp: rate-matching iterates vs the integrated limit system

struct OdeGapResult {
  double s = 0.0;
  double gap = 0.0;
};

inline std::vector<OdeGapResult> run_odecmp(const ExperimentConfig& config,
                                            ContinuousTrajectory* last_trajectory = nullptr) {
  Vector eigenvalues(2), shift(2), x0(2);
  eigenvalues << 1.0, 3.0;
  shift << 0.0, 0.0;
  x0 << 1.0, 2.0;
  const Objective obj = make_quadratic(eigenvalues, shift);

  std::vector<OdeGapResult> gaps;
  for (double s : config.s_values) {
    const double rs = std::sqrt(s);
    const int k_start = std::max<int>(1, static_cast<int>(std::llround(config.t_start / rs)));
    const double t_begin = k_start * rs;
    DampingParams params;
    params.s = s;
    const HrOdeSystem system = make_hr_system(SystemKind::ConvexForce1, obj, params);
    const ContinuousTrajectory traj =
        integrate_rk4(system, x0, x0, t_begin, config.t_end, config.dt);

    OptimizerState state{x0, x0, k_start, t_begin};
    std::vector<Vector> iterates{state.x};
    std::vector<int> indices{state.k};
    while ((state.k + 1) * rs <= config.t_end + 1e-12) {
      state = rate_match_step(state, obj, s);
      iterates.push_back(state.x);
      indices.push_back(state.k);
    }
    const double gap =
        trajectory_gap(iterates, indices, traj, [rs](int k) { return k * rs; });
    gaps.push_back({s, gap});
    if (last_trajectory) *last_trajectory = traj;
  }
  return gaps;
}

// ---------------------------------------------------------------------------
// Top-level dispatcher for the file-emitting experiments. `verify` is handled
// by the verification suite (see verification.hpp).

inline ExperimentResult run_experiment(const ExperimentConfig& config,
                                       const std::filesystem::path& out_dir) {
  ExperimentResult result;
  json diagnostics;

  if (config.experiment == "classify") {
    const ClassifyResult classify = run_classify(config);
    {
      auto out = detail::open_output(out_dir, "classify_dataset.csv", result);
      write_csv(classify.data, out);
    }
    bool any_usable = false;
    for (const ClassifyMethodResult& method : classify.methods) {
      if (!method.loss.empty()) {
        any_usable = true;
        auto loss_out = detail::open_output(out_dir, "classify_loss_" + method.name + ".csv", result);
        write_summary_csv(method.loss, "epoch", loss_out);
        auto grad_out =
            detail::open_output(out_dir, "classify_gradnorm2_" + method.name + ".csv", result);
        write_summary_csv(method.gradnorm2, "epoch", grad_out);
      }
      json entry;
      entry["final_mean_loss"] = method.final_mean_loss;
      entry["diverged_replicas"] = method.diverged_replicas;
      entry["lemma_window_violations"] = method.lemma_window_violations;
      diagnostics["methods"][method.name] = entry;
    }
    if (!any_usable) result.exit_code = 1;
  } else if (config.experiment == "bounds") {
    for (double lipschitz : config.lipschitz_values) {
      const BoundsCurveSet curves = compute_bound_curves(config, lipschitz);
      const std::string suffix = "L" + std::to_string(static_cast<long long>(lipschitz)) + ".csv";
      {
        auto out = detail::open_output(out_dir, "bounds_nnag_alpha34_" + suffix, result);
        write_csv(curves.nnag, out);
      }
      {
        auto out = detail::open_output(out_dir, "bounds_mnnag_fgap_" + suffix, result);
        write_csv(curves.mnnag, out);
      }
      json entry;
      entry["k0"] = curves.k0;
      entry["eps_k0"] = curves.eps_k0;
      entry["eps0"] = curves.eps0;
      entry["crossover"] = curves.crossover;
      diagnostics["lipschitz"][std::to_string(static_cast<long long>(lipschitz))] = entry;
    }
    if (!config.overlay.empty()) {
      std::ifstream in(config.overlay);
      if (!in) throw ConfigError("cannot open overlay file " + config.overlay, "overlay");
      std::string header;
      std::getline(in, header);
      if (header != "k,value" && header != "k,value\r")
        throw ConfigError("overlay must be a k,value CSV", "overlay");
      auto out = detail::open_output(out_dir, "bounds_overlay.csv", result);
      out << "k,value\n";
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out << line << "\n";
      }
    }
  } else if (config.experiment == "odecmp") {
    const std::vector<OdeGapResult> gaps = run_odecmp(config);
    auto out = detail::open_output(out_dir, "odecmp_gaps.csv", result);
    out << "s,gap\n";
    bool strictly_decreasing = true;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      out << format_g17(gaps[i].s) << "," << format_g17(gaps[i].gap) << "\n";
      if (i > 0 && !(gaps[i].gap < gaps[i - 1].gap)) strictly_decreasing = false;
    }
    diagnostics["strictly_decreasing"] = strictly_decreasing;
  } else {
    throw ConfigError("run_experiment does not handle \"" + config.experiment + "\"",
                      "experiment");
  }

  detail::write_manifest(config, out_dir, result, std::move(diagnostics));
  return result;
}

}  // namespace hrode
