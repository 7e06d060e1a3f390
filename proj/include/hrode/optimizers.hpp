#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hrode/dynamics.hpp"
#include "hrode/objectives.hpp"
#include "hrode/rng.hpp"
#include "hrode/schedules.hpp"

namespace hrode {

// Iterate bundle. v holds the momentum/dual variable (y for the two-line
// accelerated form, z for the rate-matching form). t tracks elapsed schedule
// time for schedule-driven methods, k*sqrt(s) otherwise.
struct OptimizerState {
  Vector x;
  Vector v;
  int k = 0;
  double t = 0.0;
};

enum class OracleMode { Exact, GaussianNoise, Minibatch, SvrgSnapshot };

// Gradient oracle with additive or sampling noise. GaussianNoise returns
// grad + e with E|e|^2 = sigma2; Minibatch averages `batch` per-component
// gradients; SvrgSnapshot returns grad_i(x) - grad_i(snapshot) + grad(snapshot).
class GradientOracle {
 public:
  GradientOracle(OracleMode mode, double sigma2, int batch, std::uint64_t seed)
      : mode_(mode), sigma2_(sigma2), batch_(batch), rng_(seed) {
    if (sigma2 < 0.0) throw std::invalid_argument("GradientOracle: sigma2 must be >= 0");
    if (batch < 1) throw std::invalid_argument("GradientOracle: batch must be >= 1");
  }

  OracleMode mode() const { return mode_; }
  double sigma2() const { return sigma2_; }
  bool is_stochastic() const {
    return mode_ == OracleMode::Minibatch || mode_ == OracleMode::SvrgSnapshot;
  }
  long long component_calls() const { return component_calls_; }
  long long snapshot_calls() const { return snapshot_calls_; }
  long long invocations() const { return invocations_; }

  Vector sample(const Objective& obj, const Vector& x) {
    ++invocations_;
    switch (mode_) {
      case OracleMode::Exact:
        return obj.gradient(x);
      case OracleMode::GaussianNoise:
        return obj.gradient(x) + rng_.gaussian_noise(obj.dim, sigma2_);
      case OracleMode::Minibatch: {
        require_components(obj);
        Vector g = Vector::Zero(obj.dim);
        for (int b = 0; b < batch_; ++b) {
          const auto i = static_cast<int>(rng_.uniform_int(obj.components));
          g += obj.component_gradient(i, x);
        }
        component_calls_ += batch_;
        return g / batch_;
      }
      case OracleMode::SvrgSnapshot: {
        require_components(obj);
        if (!has_snapshot_)
          throw std::logic_error("GradientOracle: snapshot not initialized");
        const auto i = static_cast<int>(rng_.uniform_int(obj.components));
        component_calls_ += 2;
        return obj.component_gradient(i, x) - obj.component_gradient(i, snapshot_x_) +
               snapshot_grad_;
      }
    }
    throw std::logic_error("GradientOracle: unknown mode");
  }

  void refresh_snapshot(const Objective& obj, const Vector& x) {
    require_components(obj);
    snapshot_x_ = x;
    snapshot_grad_ = obj.gradient(x);
    snapshot_calls_ += obj.components;
    has_snapshot_ = true;
  }

 private:
  void require_components(const Objective& obj) const {
    if (obj.components < 1)
      throw std::invalid_argument("GradientOracle: objective has no stochastic components");
  }

  OracleMode mode_;
  double sigma2_;
  int batch_;
  Rng rng_;
  Vector snapshot_x_;
  Vector snapshot_grad_;
  bool has_snapshot_ = false;
  long long component_calls_ = 0;
  long long snapshot_calls_ = 0;
  long long invocations_ = 0;
};

// ---------------------------------------------------------------------------
// Single-step updates. All are pure in (state, oracle draw).

// y_{k+1} = x_k - s grad(x_k); x_{k+1} = y_{k+1} + k/(k+3) (y_{k+1} - y_k).
// state.v stores y.
inline OptimizerState nag_step(const OptimizerState& state, const Objective& obj, double s) {
  const Vector y_next = state.x - s * obj.gradient(state.x);
  const double momentum = static_cast<double>(state.k) / (state.k + 3);
  OptimizerState next;
  next.x = y_next + momentum * (y_next - state.v);
  next.v = y_next;
  next.k = state.k + 1;
  next.t = state.t + std::sqrt(s);
  return next;
}

// Semi-implicit Euler form of the same method; the implicit x-update is
// affine and solved in closed form:
//   x_{k+1} = (k x_k + 2 v_k - k s grad(x_k)) / (k + 2)
//   v_{k+1} = v_k - (k s / 2 + s) grad(x_{k+1})
inline OptimizerState nag_sie_step(const OptimizerState& state, const Objective& obj, double s) {
  const double k = state.k;
  OptimizerState next;
  next.x = (k * state.x + 2.0 * state.v - k * s * obj.gradient(state.x)) / (k + 2.0);
  next.v = state.v - (0.5 * k * s + s) * obj.gradient(next.x);
  next.k = state.k + 1;
  next.t = state.t + std::sqrt(s);
  return next;
}

// Rate-matching discretization of the low-resolution pair; state.v stores
// z_{k-1}:
//   y_k = x_k - s grad(x_k); z_k = z_{k-1} - (s k / 2) grad(y_k)
//   x_{k+1} = 2/(k+2) z_k + k/(k+2) y_k
inline OptimizerState rate_match_step(const OptimizerState& state, const Objective& obj,
                                      double s) {
  const double k = state.k;
  const Vector y = state.x - s * obj.gradient(state.x);
  const Vector z = state.v - 0.5 * s * k * obj.gradient(y);
  OptimizerState next;
  next.x = (2.0 * z + k * y) / (k + 2.0);
  next.v = z;
  next.k = state.k + 1;
  next.t = state.t + std::sqrt(s);
  return next;
}

// Rate-matching discretization of the dual-perturbed pair, z-update weight
// (s/2)(k+2). With substitute set, the gradient moves from y_k to x_k, which
// makes y_k the accelerated method's lookahead point; the combination weights
// shift by one index accordingly and the x-iterates coincide with nag_step
// exactly.
inline OptimizerState rate_match_nag_step(const OptimizerState& state, const Objective& obj,
                                          double s, bool substitute) {
  const double k = state.k;
  const Vector g = obj.gradient(state.x);
  const Vector y = state.x - s * g;
  OptimizerState next;
  if (substitute) {
    const Vector z = state.v - 0.5 * s * (k + 2.0) * g;
    next.x = (2.0 * z + (k + 1.0) * y) / (k + 3.0);
    next.v = z;
  } else {
    const Vector z = state.v - 0.5 * s * (k + 2.0) * obj.gradient(y);
    next.x = (2.0 * z + k * y) / (k + 2.0);
    next.v = z;
  }
  next.k = state.k + 1;
  next.t = state.t + std::sqrt(s);
  return next;
}

// Noisy accelerated update with damping weight beta, steps s_k = c/k^alpha:
//   x_{k+1} = (x_k + (2 s_k/t_k) v_k - (beta s_k/sqrt(L)) g_k) / (1 + 2 s_k/t_k)
//   v_{k+1} = v_k - (t_k s_k + 2 s_k beta/sqrt(L))/2 * g_{k+1}
// The two oracle draws are independent.
inline OptimizerState nnag_step(const OptimizerState& state, const Objective& obj,
                                const NnagParams& params, GradientOracle& oracle) {
  if (state.k < 1) throw std::invalid_argument("nnag_step: schedule starts at k = 1");
  const double s_k = params.schedule.step(state.k);
  const double t_k = params.schedule.time(state.k);
  const double rl = std::sqrt(params.lipschitz);
  const double ratio = 2.0 * s_k / t_k;
  const Vector g1 = oracle.sample(obj, state.x);
  OptimizerState next;
  next.x = (state.x + ratio * state.v - (params.beta * s_k / rl) * g1) / (1.0 + ratio);
  const Vector g2 = oracle.sample(obj, next.x);
  next.v = state.v - 0.5 * (t_k * s_k + 2.0 * s_k * params.beta / rl) * g2;
  next.k = state.k + 1;
  next.t = params.schedule.time(next.k);
  return next;
}

// Modified noisy update with the beta-free damping:
//   x_{k+1} = (x_k + (2 s_k/t_k) v_k - (s_k/sqrt(L)) g_k) / (1 + 2 s_k/t_k)
//   v_{k+1} = v_k - (t_k s_k / 2 + s_k^2) g_{k+1}
inline OptimizerState mnnag_step(const OptimizerState& state, const Objective& obj,
                                 const StepSchedule& schedule, double lipschitz,
                                 GradientOracle& oracle) {
  if (state.k < 1) throw std::invalid_argument("mnnag_step: schedule starts at k = 1");
  const double s_k = schedule.step(state.k);
  const double t_k = schedule.time(state.k);
  const double ratio = 2.0 * s_k / t_k;
  const Vector g1 = oracle.sample(obj, state.x);
  OptimizerState next;
  next.x = (state.x + ratio * state.v - (s_k / std::sqrt(lipschitz)) * g1) / (1.0 + ratio);
  const Vector g2 = oracle.sample(obj, next.x);
  next.v = state.v - (0.5 * t_k * s_k + s_k * s_k) * g2;
  next.k = state.k + 1;
  next.t = schedule.time(next.k);
  return next;
}

// Gradient descent with decreasing step 1/(sqrt(L) k^{2/3}).
inline OptimizerState perturbed_gd_step(const OptimizerState& state, const Objective& obj,
                                        double lipschitz, GradientOracle& oracle) {
  if (state.k < 1) throw std::invalid_argument("perturbed_gd_step: schedule starts at k = 1");
  const double step =
      1.0 / (std::sqrt(lipschitz) * std::pow(static_cast<double>(state.k), 2.0 / 3.0));
  OptimizerState next;
  next.x = state.x - step * oracle.sample(obj, state.x);
  next.v = next.x;
  next.k = state.k + 1;
  next.t = state.t + step;
  return next;
}

// Constant-step gradient descent (SGD/SVRG baselines via the oracle mode).
inline OptimizerState gd_step(const OptimizerState& state, const Objective& obj, double step,
                              GradientOracle& oracle) {
  OptimizerState next;
  next.x = state.x - step * oracle.sample(obj, state.x);
  next.v = next.x;
  next.k = state.k + 1;
  next.t = state.t + step;
  return next;
}

// ---------------------------------------------------------------------------
// Method-specific Lyapunov values (the analysis module dispatches to these).

inline void require_solution(const Objective& obj, const char* who) {
  if (!obj.minimizer || !obj.optimal_value)
    throw std::invalid_argument(std::string(who) + ": objective needs known x* and f*");
}

// (s (k+2) k / 4) (f(x_k) - f*) + |v_k - x*|^2 / 2
inline double nag_sie_lyapunov(const Objective& obj, const OptimizerState& state, double s) {
  require_solution(obj, "nag_sie_lyapunov");
  const double k = state.k;
  return s * (k + 2.0) * k / 4.0 * obj.fgap(state.x) +
         0.5 * (state.v - *obj.minimizer).squaredNorm();
}

// (t_k^2/4 + t_k beta / (2 sqrt(L))) (f(x_k) - f*) + |v_k - x*|^2 / 2
inline double nnag_lyapunov(const Objective& obj, const OptimizerState& state, double beta,
                            double lipschitz) {
  require_solution(obj, "nnag_lyapunov");
  const double t = state.t;
  return (t * t / 4.0 + t * beta / (2.0 * std::sqrt(lipschitz))) * obj.fgap(state.x) +
         0.5 * (state.v - *obj.minimizer).squaredNorm();
}

// (t_k^2/4 + s_k t_k / 2) (f(x_k) - f*) + |v_k - x*|^2 / 2
inline double mnnag_lyapunov(const Objective& obj, const OptimizerState& state, double s_k) {
  require_solution(obj, "mnnag_lyapunov");
  const double t = state.t;
  return (t * t / 4.0 + s_k * t / 2.0) * obj.fgap(state.x) +
         0.5 * (state.v - *obj.minimizer).squaredNorm();
}

// ---------------------------------------------------------------------------
// Trajectory driver.

enum class Method { Nag, NagSie, RateMatch, RateMatchNag, Nnag, Mnnag, PerturbedGd, Gd };

struct MethodSpec {
  Method method = Method::NagSie;
  std::string name = "nag_sie";
  double s = 0.0;           // fixed step (Nag/NagSie/RateMatch*/Gd)
  double c = 1.0;           // schedule scale (Nnag/Mnnag)
  double alpha = 0.75;      // schedule decay
  double beta = 2.0;        // damping weight (Nnag)
  double lipschitz = 0.0;   // 0 -> use the objective's constant
  bool substitute = false;  // RateMatchNag gradient substitution
  bool reset_schedule_on_snapshot = false;
  OracleMode oracle = OracleMode::Exact;
  double sigma2 = 0.0;
  int batch = 1;
};

struct RunOptions {
  int iterations = 1;
  int log_every = 1;
  bool store_iterates = false;
  std::uint64_t seed = 0;
};

// Per-iterate log. min_gradnorm2 is the running minimum over logged rows.
struct TrajectoryRecord {
  std::vector<int> k;
  std::vector<double> t;
  std::vector<double> fgap;
  std::vector<double> gradnorm2;
  std::vector<double> lyapunov;
  std::vector<double> min_gradnorm2;
  std::vector<Vector> iterates;  // filled when requested
  OptimizerState final_state;
  long long oracle_component_calls = 0;
  long long oracle_snapshot_calls = 0;
  int lemma_window_violations = 0;

  std::size_t rows() const { return k.size(); }
};

class RunDivergenceError : public DivergenceError {
 public:
  RunDivergenceError(const std::string& what, double last_iteration, TrajectoryRecord partial)
      : DivergenceError(what, last_iteration), partial_(std::move(partial)) {}
  const TrajectoryRecord& partial() const { return partial_; }

 private:
  TrajectoryRecord partial_;
};

inline bool schedule_driven(Method m) {
  return m == Method::Nnag || m == Method::Mnnag || m == Method::PerturbedGd;
}

inline TrajectoryRecord run_optimizer(const MethodSpec& spec, const Objective& obj,
                                      const Vector& init, const RunOptions& opt) {
  if (opt.iterations < 1) throw std::invalid_argument("run_optimizer: iterations must be >= 1");
  const double lipschitz = spec.lipschitz > 0.0 ? spec.lipschitz : obj.lipschitz;
  const bool exact_method = spec.method == Method::Nag || spec.method == Method::NagSie ||
                            spec.method == Method::RateMatch || spec.method == Method::RateMatchNag;
  if (exact_method && spec.oracle != OracleMode::Exact)
    throw std::invalid_argument("run_optimizer: " + spec.name + " uses exact gradients");

  GradientOracle oracle(spec.oracle, spec.sigma2, spec.batch, opt.seed);
  StepSchedule schedule(spec.c > 0.0 ? spec.c : 1.0, spec.alpha, opt.iterations + 2);
  NnagParams nnag_params(spec.beta > 0.0 ? spec.beta : 2.0, schedule, lipschitz > 0.0 ? lipschitz : 1.0);

  OptimizerState state;
  state.x = init;
  state.v = init;
  if (schedule_driven(spec.method)) {
    state.k = 1;
    state.t = spec.method == Method::PerturbedGd ? 0.0 : schedule.time(1);
  }

  const bool solvable = obj.minimizer.has_value() && obj.optimal_value.has_value();
  TrajectoryRecord record;
  double running_min = std::numeric_limits<double>::infinity();
  auto log_row = [&](const OptimizerState& s_now) {
    record.k.push_back(s_now.k);
    record.t.push_back(s_now.t);
    record.fgap.push_back(obj.fgap(s_now.x));
    const double gn2 = obj.gradient(s_now.x).squaredNorm();
    record.gradnorm2.push_back(gn2);
    running_min = std::min(running_min, gn2);
    record.min_gradnorm2.push_back(running_min);
    double lyap = std::numeric_limits<double>::quiet_NaN();
    if (solvable) {
      switch (spec.method) {
        case Method::NagSie:
          lyap = nag_sie_lyapunov(obj, s_now, spec.s);
          break;
        case Method::Nnag:
          lyap = nnag_lyapunov(obj, s_now, nnag_params.beta, nnag_params.lipschitz);
          break;
        case Method::Mnnag:
          lyap = mnnag_lyapunov(obj, s_now, schedule.step(std::max(1, s_now.k)));
          break;
        default:
          break;
      }
    }
    record.lyapunov.push_back(lyap);
    if (opt.store_iterates) record.iterates.push_back(s_now.x);
  };

  long long next_snapshot_at = 0;
  if (spec.oracle == OracleMode::SvrgSnapshot) {
    oracle.refresh_snapshot(obj, state.x);
    next_snapshot_at = obj.components;
  }

  log_row(state);
  for (int it = 0; it < opt.iterations; ++it) {
    if (spec.oracle == OracleMode::SvrgSnapshot && oracle.invocations() >= next_snapshot_at) {
      oracle.refresh_snapshot(obj, state.x);
      next_snapshot_at += obj.components;
      if (spec.reset_schedule_on_snapshot) {
        state.k = 1;
        state.t = schedule.time(1);
      }
    }
    switch (spec.method) {
      case Method::Nag:
        state = nag_step(state, obj, spec.s);
        break;
      case Method::NagSie:
        state = nag_sie_step(state, obj, spec.s);
        break;
      case Method::RateMatch:
        state = rate_match_step(state, obj, spec.s);
        break;
      case Method::RateMatchNag:
        state = rate_match_nag_step(state, obj, spec.s, spec.substitute);
        break;
      case Method::Nnag:
        if (!lemma_window_contains(nnag_params.beta, spec.alpha, state.k))
          ++record.lemma_window_violations;
        state = nnag_step(state, obj, nnag_params, oracle);
        break;
      case Method::Mnnag:
        state = mnnag_step(state, obj, schedule, nnag_params.lipschitz, oracle);
        break;
      case Method::PerturbedGd:
        state = perturbed_gd_step(state, obj, nnag_params.lipschitz, oracle);
        break;
      case Method::Gd:
        state = gd_step(state, obj, spec.s, oracle);
        break;
    }
    if (!state.x.allFinite() || !state.v.allFinite()) {
      record.oracle_component_calls = oracle.component_calls();
      record.oracle_snapshot_calls = oracle.snapshot_calls();
      record.final_state = state;
      throw RunDivergenceError("run_optimizer: non-finite iterate in " + spec.name,
                               static_cast<double>(it), std::move(record));
    }
    if ((it + 1) % opt.log_every == 0 || it + 1 == opt.iterations) log_row(state);
  }
  record.oracle_component_calls = oracle.component_calls();
  record.oracle_snapshot_calls = oracle.snapshot_calls();
  record.final_state = state;
  return record;
}

// Spec'd comparison entry point: iterates must have been stored by the run.
inline double trajectory_gap(const TrajectoryRecord& record, const ContinuousTrajectory& continuous,
                             const std::function<double(int)>& time_map) {
  if (record.iterates.empty())
    throw std::invalid_argument("trajectory_gap: record has no stored iterates");
  return trajectory_gap(record.iterates, record.k, continuous, time_map);
}

}  // namespace hrode
