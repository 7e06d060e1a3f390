#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hrode/analysis.hpp"
#include "hrode/experiments.hpp"

namespace hrode {

// One verification check; margin <= 0 means the check holds with room to
// spare (each check documents what its margin measures).
struct CheckResult {
  std::string name;
  bool pass = false;
  double margin = 0.0;
  std::string detail;
};

namespace verify_detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct QuadraticInstance {
  Objective obj;
  Vector x0;
  double R2 = 0.0;
};

inline QuadraticInstance random_quadratic(Rng& rng, int max_dim) {
  const int n = 1 + static_cast<int>(rng.uniform_int(max_dim));
  Vector eigenvalues(n), shift(n);
  for (int i = 0; i < n; ++i) {
    eigenvalues[i] = 0.1 + 9.9 * rng.uniform01();
    shift[i] = rng.normal();
  }
  QuadraticInstance instance{make_quadratic(eigenvalues, shift), shift + rng.normal_vector(n), 0.0};
  instance.R2 = (instance.x0 - shift).squaredNorm();
  return instance;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = n > 1.0 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return {mean, sd / std::sqrt(n)};
}

constexpr double kZ95 = 1.6448536269514722;  // one-sided 95% normal quantile

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// The twenty semi-implicit accelerated runs shared by the first three checks.
struct NagSieRuns {
  std::vector<QuadraticInstance> instances;
  std::vector<TrajectoryRecord> records;
  std::vector<double> steps;
  double elapsed = 0.0;
};

inline const NagSieRuns& shared_nag_sie_runs() {
  static const NagSieRuns runs = [] {
    NagSieRuns out;
    const auto start = Clock::now();
    Rng rng(12345);
    for (int i = 0; i < 20; ++i) {
      QuadraticInstance instance = random_quadratic(rng, 50);
      const double s = 1.0 / instance.obj.lipschitz;
      MethodSpec spec;
      spec.method = Method::NagSie;
      spec.name = "nag_sie";
      spec.s = s;
      RunOptions options;
      options.iterations = 1000;
      out.records.push_back(run_optimizer(spec, instance.obj, instance.x0, options));
      out.instances.push_back(std::move(instance));
      out.steps.push_back(s);
    }
    out.elapsed = seconds_since(start);
    return out;
  }();
  return runs;
}

}  // namespace verify_detail

// ---------------------------------------------------------------------------
// Individual checks. Margins are normalized so that <= 0 passes.

// Objective-gap bound 2 R^2 / (s k (k+2)) on every iterate of twenty random
// quadratic runs; margin = worst relative excess over the bound.
inline CheckResult check_nag_sie_objective_bound() {
  using namespace verify_detail;
  const NagSieRuns& runs = shared_nag_sie_runs();
  CheckResult result{"nag_sie objective-gap bound", true, -1.0, ""};
  double worst = -1.0;
  for (std::size_t i = 0; i < runs.records.size(); ++i) {
    BoundSpec spec;
    spec.R2 = runs.instances[i].R2;
    spec.s = runs.steps[i];
    const TrajectoryRecord& record = runs.records[i];
    for (std::size_t row = 1; row < record.rows(); ++row) {
      const double bound = theoretical_bound(BoundId::NagFgap, spec, record.k[row]);
      worst = std::max(worst, record.fgap[row] / bound - 1.0);
    }
  }
  result.margin = worst - 1e-9;
  result.pass = worst <= 1e-9 && runs.elapsed < 5.0;
  result.detail = "worst rel excess " + fmt(worst) + ", runtime " + fmt(runs.elapsed) + "s";
  return result;
}

// Min-gradient bound 12 R^2 / (k^3 s^2) on the same runs, plus strict
// dominance over the constant-8568 comparison bound at every k.
inline CheckResult check_nag_sie_gradient_bound() {
  using namespace verify_detail;
  const NagSieRuns& runs = shared_nag_sie_runs();
  CheckResult result{"nag_sie min-gradient bound", true, -1.0, ""};
  double worst = -1.0;
  for (std::size_t i = 0; i < runs.records.size(); ++i) {
    BoundSpec spec;
    spec.R2 = runs.instances[i].R2;
    spec.s = runs.steps[i];
    const TrajectoryRecord& record = runs.records[i];
    for (std::size_t row = 1; row < record.rows(); ++row) {
      const int k = record.k[row];
      const double bound = theoretical_bound(BoundId::NagGradMin, spec, k);
      worst = std::max(worst, record.min_gradnorm2[row - 1] / bound - 1.0);
    }
  }
  bool tighter = true;
  BoundSpec unit;
  unit.R2 = 1.0;
  unit.s = 1.0;
  for (int k = 1; k <= 1000; ++k)
    tighter = tighter && theoretical_bound(BoundId::NagGradMin, unit, k) <
                             theoretical_bound(BoundId::ShiGradMin, unit, k);
  result.margin = worst - 1e-9;
  result.pass = worst <= 1e-9 && tighter;
  result.detail = "worst rel excess " + fmt(worst) +
                  std::string(tighter ? ", dominates 8568-bound" : ", 8568 comparison FAILED");
  return result;
}

// Per-step Lyapunov decrement bound with zero violations, and the 1-D hand
// run whose Lyapunov values are exactly (0.5, 0.375, 0).
inline CheckResult check_nag_sie_decrement() {
  using namespace verify_detail;
  const NagSieRuns& runs = shared_nag_sie_runs();
  CheckResult result{"nag_sie lyapunov decrement", true, 0.0, ""};
  double worst_margin = -std::numeric_limits<double>::infinity();
  int violations = 0;
  for (std::size_t i = 0; i < runs.records.size(); ++i) {
    const DecrementReport report = decrement_check(runs.records[i], runs.steps[i], 1e-9);
    violations += static_cast<int>(report.violations.size());
    worst_margin = std::max(worst_margin, report.margin);
  }

  MethodSpec spec;
  spec.method = Method::NagSie;
  spec.s = 1.0;
  RunOptions options;
  options.iterations = 2;
  const Objective obj = make_quadratic(Vector::Ones(1), Vector::Zero(1));
  const TrajectoryRecord hand = run_optimizer(spec, obj, Vector::Ones(1), options);
  const bool exact = hand.lyapunov.size() == 3 && hand.lyapunov[0] == 0.5 &&
                     hand.lyapunov[1] == 0.375 && hand.lyapunov[2] == 0.0;

  result.pass = violations == 0 && exact;
  result.margin = worst_margin;
  result.detail = std::to_string(violations) + " violations, hand run " +
                  (exact ? "exact" : "INEXACT") + ", worst step margin " + fmt(worst_margin);
  return result;
}

// Exact reductions: the substituted rate-matching scheme reproduces the
// accelerated x-iterates, and the noiseless modified stochastic update with
// alpha = 0, c = 1/sqrt(L) reproduces the semi-implicit iterates.
inline CheckResult check_exact_reductions() {
  using namespace verify_detail;
  CheckResult result{"exact scheme reductions", true, 0.0, ""};
  double worst = 0.0;

  auto compare_rate_match_vs_nag = [&worst](const Objective& obj, const Vector& x0, double s) {
    OptimizerState nag{x0, x0, 0, 0.0};
    OptimizerState rm{x0, x0, 0, 0.0};
    for (int step = 0; step < 500; ++step) {
      nag = nag_step(nag, obj, s);
      rm = rate_match_nag_step(rm, obj, s, true);
      const double rel = (nag.x - rm.x).norm() / std::max(1.0, nag.x.norm());
      worst = std::max(worst, rel);
    }
  };
  Rng rng(777);
  {
    Vector eigenvalues(8), shift(8);
    for (int i = 0; i < 8; ++i) {
      eigenvalues[i] = 0.5 + 4.5 * rng.uniform01();
      shift[i] = rng.normal();
    }
    const Objective quad = make_quadratic(eigenvalues, shift);
    compare_rate_match_vs_nag(quad, shift + rng.normal_vector(8), 1.0 / quad.lipschitz);
  }
  {
    const Objective logistic = make_logistic(generate_classification_data(50, 5, 7));
    compare_rate_match_vs_nag(logistic, Vector::Zero(5), 1.0 / logistic.lipschitz);
  }

  // modified noisy update vs semi-implicit form from a shared (x1, v1)
  {
    Vector eigenvalues(4), shift(4);
    for (int i = 0; i < 4; ++i) {
      eigenvalues[i] = 0.5 + 4.5 * rng.uniform01();
      shift[i] = rng.normal();
    }
    const Objective quad = make_quadratic(eigenvalues, shift);
    const double L = quad.lipschitz;
    const Vector x0 = shift + rng.normal_vector(4);
    const StepSchedule schedule(1.0 / std::sqrt(L), 0.0, 510);
    GradientOracle oracle(OracleMode::Exact, 0.0, 1, 0);
    OptimizerState mn{x0, x0, 1, schedule.time(1)};
    OptimizerState sie{x0, x0, 1, 0.0};
    for (int step = 0; step < 500; ++step) {
      mn = mnnag_step(mn, quad, schedule, L, oracle);
      sie = nag_sie_step(sie, quad, 1.0 / L);
      const double rel = (mn.x - sie.x).norm() / std::max(1.0, sie.x.norm());
      worst = std::max(worst, rel);
    }
  }
  result.margin = worst - 1e-12;
  result.pass = worst <= 1e-12;
  result.detail = "worst rel deviation " + fmt(worst);
  return result;
}

// Rate-matching iterates approach the integrated limit system as s decreases.
inline CheckResult check_rate_match_ode_gap() {
  using namespace verify_detail;
  const auto start = Clock::now();
  ExperimentConfig config;
  config.experiment = "odecmp";
  const std::vector<OdeGapResult> gaps = run_odecmp(config);
  const double elapsed = seconds_since(start);

  CheckResult result{"rate-matching vs limit-system gap", true, 0.0, ""};
  double worst = -std::numeric_limits<double>::infinity();
  std::string detail = "gaps";
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    detail += " " + fmt(gaps[i].gap);
    if (i > 0) worst = std::max(worst, gaps[i].gap - gaps[i - 1].gap);
  }
  result.margin = worst;
  result.pass = worst < 0.0 && elapsed < 30.0;
  result.detail = detail + ", runtime " + fmt(elapsed) + "s";
  return result;
}

// Continuous Lyapunov values are nonincreasing along integrated trajectories
// of the three perturbed systems (1e-6 absolute slack per step).
inline CheckResult check_continuous_lyapunov() {
  using namespace verify_detail;
  Vector eigenvalues(2), shift(2), x0(2);
  eigenvalues << 1.0, 3.0;
  shift << 0.0, 0.0;
  x0 << 1.0, 2.0;
  const Objective obj = make_quadratic(eigenvalues, shift);

  CheckResult result{"continuous lyapunov monotonicity", true, 0.0, ""};
  double worst = -std::numeric_limits<double>::infinity();
  int violations = 0;
  const double slack = 1e-6;

  auto run_one = [&](SystemKind kind, LyapunovKind lyap, DampingParams params) {
    const HrOdeSystem system = make_hr_system(kind, obj, params);
    const ContinuousTrajectory traj = integrate_rk4(system, x0, x0, 0.1, 20.0, 1e-3);
    const std::vector<double> values = lyapunov_series(lyap, obj, params, traj);
    const DecrementReport report = decrement_check(values, slack);
    violations += static_cast<int>(report.violations.size());
    worst = std::max(worst, report.margin);
  };
  DampingParams convex;
  convex.s = 0.01;
  run_one(SystemKind::ConvexForce1, LyapunovKind::ConvexForce1, convex);
  run_one(SystemKind::ConvexForce2, LyapunovKind::ConvexForce2, convex);
  DampingParams strongly;
  strongly.s = 0.01;
  strongly.mu = eigenvalues.minCoeff();
  run_one(SystemKind::StronglyConvex, LyapunovKind::StronglyConvex, strongly);

  result.margin = worst - slack;
  result.pass = violations == 0;
  result.detail = std::to_string(violations) + " violations, worst step increment " + fmt(worst);
  return result;
}

namespace verify_detail {

// Monte-Carlo runs of a noisy method on the 1-D unit quadratic; returns the
// per-replica records.
inline std::vector<TrajectoryRecord> noisy_runs(const MethodSpec& spec, int iterations,
                                                int replicas, std::uint64_t base_seed,
                                                int threads) {
  const Objective obj = make_quadratic(Vector::Ones(1), Vector::Zero(1));
  const Vector x0 = Vector::Ones(1);
  std::vector<TrajectoryRecord> records(replicas);
  parallel_replicas(replicas, threads, [&](int r) {
    RunOptions options;
    options.iterations = iterations;
    options.seed = base_seed + static_cast<std::uint64_t>(r);
    records[r] = run_optimizer(spec, obj, x0, options);
  });
  return records;
}

}  // namespace verify_detail

// Monte-Carlo mean objective gap of the noisy accelerated method stays below
// the alpha = 3/4 bound (evaluated with the measured E[eps(k0)]) at
// k in {k0, 4 k0, 16 k0, 64 k0}, at one-sided 95% confidence.
inline CheckResult check_nnag_bound(int threads = 0) {
  using namespace verify_detail;
  const auto start = Clock::now();
  MethodSpec spec;
  spec.method = Method::Nnag;
  spec.name = "nnag";
  spec.c = 1.0;
  spec.alpha = 0.75;
  spec.beta = 2.0;
  spec.lipschitz = 1.0;
  spec.oracle = OracleMode::GaussianNoise;
  spec.sigma2 = 0.01;

  const int k0 = critical_iteration(NnagParams(spec.beta, StepSchedule(spec.c, spec.alpha), 1.0));
  const int k_last = 64 * k0;
  const std::vector<TrajectoryRecord> records =
      noisy_runs(spec, k_last - 1, 500, 2024, threads);

  std::vector<double> eps_values;
  eps_values.reserve(records.size());
  for (const TrajectoryRecord& record : records) eps_values.push_back(record.lyapunov[k0 - 1]);
  const double eps_k0 = mean_se(eps_values).mean;

  BoundSpec bound;
  bound.R2 = 1.0;
  bound.c = spec.c;
  bound.alpha = spec.alpha;
  bound.beta = spec.beta;
  bound.lipschitz = spec.lipschitz;
  bound.sigma2 = spec.sigma2;
  bound.k0 = k0;
  bound.eps_k0 = eps_k0;

  CheckResult result{"nnag mean objective gap vs alpha=3/4 bound", true, 0.0, ""};
  double worst = -std::numeric_limits<double>::infinity();
  std::string detail = "k0=" + std::to_string(k0) + ", eps(k0)=" + fmt(eps_k0);
  for (int k : {k0, 4 * k0, 16 * k0, 64 * k0}) {
    std::vector<double> gaps;
    gaps.reserve(records.size());
    for (const TrajectoryRecord& record : records) gaps.push_back(record.fgap[k - 1]);
    const MeanSe stat = mean_se(gaps);
    const double value = theoretical_bound(BoundId::NnagA34, bound, k);
    worst = std::max(worst, (stat.mean + kZ95 * stat.se - value) / value);
    detail += ", k=" + std::to_string(k) + ": " + fmt(stat.mean) + "<=" + fmt(value);
  }
  const double elapsed = seconds_since(start);
  result.margin = worst;
  result.pass = worst <= 0.0 && elapsed < 60.0;
  result.detail = detail + ", runtime " + fmt(elapsed) + "s";
  return result;
}

// Same protocol for the modified noisy method: mean objective gap against the
// alpha in {3/4, 7/8} bounds, and the mean running min-gradient against the
// alpha = 3/4 min-gradient bound.
inline CheckResult check_mnnag_bounds(int threads = 0) {
  using namespace verify_detail;
  const int k0 = 2;  // matches the damping-weight-2 critical iteration of the noisy method
  const int k_last = 64 * k0;
  CheckResult result{"mnnag mean bounds (objective gap, min gradient)", true, 0.0, ""};
  double worst = -std::numeric_limits<double>::infinity();
  std::string detail;

  for (double alpha : {0.75, 0.875}) {
    MethodSpec spec;
    spec.method = Method::Mnnag;
    spec.name = "mnnag";
    spec.c = 1.0;
    spec.alpha = alpha;
    spec.lipschitz = 1.0;
    spec.oracle = OracleMode::GaussianNoise;
    spec.sigma2 = 0.01;
    const std::vector<TrajectoryRecord> records =
        noisy_runs(spec, k_last - 1, 500, 4096, threads);

    BoundSpec bound;
    bound.c = spec.c;
    bound.alpha = alpha;
    bound.lipschitz = 1.0;
    bound.sigma2 = spec.sigma2;
    bound.eps0 = 0.5;  // |v0 - x*|^2 / 2 with v0 = x0 = 1

    detail += (detail.empty() ? "" : "; ") + std::string("alpha=") + fmt(alpha);
    for (int k : {k0, 4 * k0, 16 * k0, 64 * k0}) {
      std::vector<double> gaps;
      gaps.reserve(records.size());
      for (const TrajectoryRecord& record : records) gaps.push_back(record.fgap[k - 1]);
      const MeanSe stat = mean_se(gaps);
      const double value = theoretical_bound(BoundId::MnnagFgap, bound, k);
      worst = std::max(worst, (stat.mean + kZ95 * stat.se - value) / value);
      detail += " k" + std::to_string(k) + ":" + fmt(stat.mean) + "<=" + fmt(value);
    }

    if (alpha == 0.75) {
      detail += "; min-grad";
      for (int k : {k0, 4 * k0, 16 * k0, 64 * k0}) {
        std::vector<double> mins;
        mins.reserve(records.size());
        // min over iterates x_1 .. x_{k-1} (the statement's 0..k-1 with the
        // identity zeroth step)
        for (const TrajectoryRecord& record : records)
          mins.push_back(record.min_gradnorm2[k - 2]);
        const MeanSe stat = mean_se(mins);
        const double value = theoretical_bound(BoundId::MnnagGradMin, bound, k);
        worst = std::max(worst, (stat.mean + kZ95 * stat.se - value) / value);
        detail += " k" + std::to_string(k) + ":" + fmt(stat.mean) + "<=" + fmt(value);
      }
    }
  }
  result.margin = worst;
  result.pass = worst <= 0.0;
  result.detail = detail;
  return result;
}

// Monte-Carlo mean per-step Lyapunov increment of the modified noisy method
// obeys the drift bound s_k^2 (t_k + 2 s_k)^2 sigma^2 / 8 (no statistically
// significant violation at 95%).
inline CheckResult check_mnnag_drift(int threads = 0) {
  using namespace verify_detail;
  MethodSpec spec;
  spec.method = Method::Mnnag;
  spec.name = "mnnag";
  spec.c = 1.0;
  spec.alpha = 0.75;
  spec.lipschitz = 1.0;
  spec.oracle = OracleMode::GaussianNoise;
  spec.sigma2 = 0.01;
  const int steps = 200;
  const std::vector<TrajectoryRecord> records = noisy_runs(spec, steps, 500, 9001, threads);

  const StepSchedule schedule(spec.c, spec.alpha, steps + 2);
  CheckResult result{"mnnag per-step lyapunov drift bound", true, 0.0, ""};
  double worst = -std::numeric_limits<double>::infinity();
  int significant = 0;
  for (int row = 0; row + 1 < static_cast<int>(records.front().rows()); ++row) {
    const int k = records.front().k[row];
    std::vector<double> increments;
    increments.reserve(records.size());
    for (const TrajectoryRecord& record : records)
      increments.push_back(record.lyapunov[row + 1] - record.lyapunov[row]);
    const MeanSe stat = mean_se(increments);
    const double s_k = schedule.step(k);
    const double t_k = schedule.time(k);
    const double bound = s_k * s_k * (t_k + 2.0 * s_k) * (t_k + 2.0 * s_k) / 8.0 * spec.sigma2;
    const double allowance = std::max(kZ95 * stat.se, 1e-300);
    worst = std::max(worst, (stat.mean - bound) / allowance - 1.0);
    if (stat.mean - bound > kZ95 * stat.se) ++significant;
  }
  result.margin = worst;
  result.pass = significant == 0;
  result.detail = std::to_string(significant) + " significant violations over " +
                  std::to_string(steps) + " steps, worst (mean-bound)/allowance-1 = " + fmt(worst);
  return result;
}

// Bound-curve comparison: for large L the noisy alpha=3/4 curve stays below
// the modified curve through the plotted range; for the smaller L the
// crossover (if any) comes later.
inline CheckResult check_bound_crossover(int threads = 0) {
  ExperimentConfig config;
  config.experiment = "bounds";
  config.raw = json{{"experiment", "bounds"}};
  config.threads = threads;
  const BoundsCurveSet big = compute_bound_curves(config, 1000.0);
  const BoundsCurveSet small = compute_bound_curves(config, 100.0);

  CheckResult result{"bound-curve crossover vs smoothness scale", true, 0.0, ""};
  const bool big_has = big.crossover > 0;
  const bool small_later = small.crossover < 0 || small.crossover > big.crossover;
  result.pass = big_has && small_later;
  result.margin = result.pass ? -1.0 : 1.0;
  result.detail = "L=1000 crossover k=" + std::to_string(big.crossover) + " (eps_k0 " +
                  verify_detail::fmt(big.eps_k0) + "), L=100 crossover k=" +
                  std::to_string(small.crossover) + " (eps_k0 " + verify_detail::fmt(small.eps_k0) +
                  ")";
  return result;
}

// Noisy logistic benchmark: mean final loss orderings of the accelerated
// method against its baselines.
inline CheckResult check_classification_ordering(int threads = 0) {
  using namespace verify_detail;
  const auto start = Clock::now();
  ExperimentConfig config;
  config.experiment = "classify";
  config.raw = json{{"experiment", "classify"}};
  config.monte_carlo = 100;
  config.threads = threads;
  for (const char* name : {"nnag", "perturbed_gd", "sgd", "svrg", "nnag_sgd", "nnag_svrg"})
    config.methods.push_back({name, json::object()});

  const ClassifyResult classify = run_classify(config);
  auto final_loss = [&classify](const std::string& name) {
    for (const ClassifyMethodResult& method : classify.methods)
      if (method.name == name && !method.loss.empty()) return method.final_mean_loss;
    return std::numeric_limits<double>::infinity();
  };

  const double elapsed = seconds_since(start);
  CheckResult result{"noisy logistic benchmark ordering", true, 0.0, ""};
  double worst = -std::numeric_limits<double>::infinity();
  std::string detail;
  const std::pair<const char*, const char*> pairs[] = {
      {"nnag", "perturbed_gd"}, {"nnag_svrg", "svrg"}, {"nnag_sgd", "sgd"}};
  for (const auto& [fast, slow] : pairs) {
    const double a = final_loss(fast), b = final_loss(slow);
    worst = std::max(worst, std::log10(a / b));
    detail += std::string(fast) + "=" + fmt(a) + " vs " + slow + "=" + fmt(b) + "; ";
  }
  result.margin = worst;
  result.pass = worst < 0.0 && elapsed < 600.0;
  result.detail = detail + "runtime " + fmt(elapsed) + "s";
  return result;
}

// Gradient and Hessian-vector oracles agree with central differences on
// random points of both objective families.
inline CheckResult check_derivative_oracles() {
  using namespace verify_detail;
  Rng rng(31415);
  double worst_grad = 0.0, worst_hvp = 0.0;
  for (int i = 0; i < 25; ++i) {
    const QuadraticInstance instance = random_quadratic(rng, 20);
    const DerivativeCheck check = derivative_check(instance.obj, instance.x0, 1e-6);
    worst_grad = std::max(worst_grad, check.grad_err);
    worst_hvp = std::max(worst_hvp, check.hvp_err);
  }
  const Objective logistic = make_logistic(generate_classification_data(200, 8, 11));
  for (int i = 0; i < 25; ++i) {
    const DerivativeCheck check = derivative_check(logistic, rng.normal_vector(8), 1e-5);
    worst_grad = std::max(worst_grad, check.grad_err);
    worst_hvp = std::max(worst_hvp, check.hvp_err);
  }
  CheckResult result{"derivative oracle agreement", true, 0.0, ""};
  result.margin = std::max(worst_grad / 1e-5, worst_hvp / 1e-4) - 1.0;
  result.pass = worst_grad <= 1e-5 && worst_hvp <= 1e-4;
  result.detail = "grad err " + fmt(worst_grad) + " (<=1e-5), hvp err " + fmt(worst_hvp) +
                  " (<=1e-4) over 50 points";
  return result;
}

inline std::vector<CheckResult> run_verification_suite(int threads = 0) {
  return {
      check_nag_sie_objective_bound(),
      check_nag_sie_gradient_bound(),
      check_nag_sie_decrement(),
      check_exact_reductions(),
      check_rate_match_ode_gap(),
      check_continuous_lyapunov(),
      check_nnag_bound(threads),
      check_mnnag_bounds(threads),
      check_mnnag_drift(threads),
      check_bound_crossover(threads),
      check_classification_ordering(threads),
      check_derivative_oracles(),
  };
}

inline int print_verification(const std::vector<CheckResult>& results, std::ostream& out) {
  int failed = 0;
  for (const CheckResult& result : results) {
    out << (result.pass ? "[PASS] " : "[FAIL] ") << result.name
        << " (margin=" << verify_detail::fmt(result.margin) << ") " << result.detail << "\n";
    if (!result.pass) ++failed;
  }
  out << (failed == 0 ? "all checks passed" : std::to_string(failed) + " check(s) failed") << "\n";
  return failed;
}

// The `verify` experiment: run the suite, print one line per check, write
// the results table and manifest.
inline ExperimentResult run_verify_experiment(const ExperimentConfig& config,
                                              const std::filesystem::path& out_dir,
                                              std::ostream& console) {
  const std::vector<CheckResult> results = run_verification_suite(config.threads);
  const int failed = print_verification(results, console);

  ExperimentResult experiment;
  json diagnostics;
  {
    auto out = detail::open_output(out_dir, "verify_results.csv", experiment);
    out << "check,pass,margin\n";
    for (const CheckResult& result : results)
      out << '"' << result.name << "\"," << (result.pass ? 1 : 0) << ","
          << format_g17(result.margin) << "\n";
  }
  diagnostics["failed"] = failed;
  detail::write_manifest(config, out_dir, experiment, std::move(diagnostics));
  experiment.exit_code = failed == 0 ? 0 : 1;
  return experiment;
}

}  // namespace hrode
