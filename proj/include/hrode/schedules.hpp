#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hrode/errors.hpp"

namespace hrode {

// Step sizes s_k = c / k^alpha (k >= 1) with cached prefix-sum times
// t_k = sum_{i=1..k} s_i, t_0 = 0. The cache grows on demand; call reserve()
// up to the horizon before sharing an instance across threads.
class StepSchedule {
 public:
  StepSchedule(double c, double alpha, int horizon = 0) : c_(c), alpha_(alpha) {
    if (!(c > 0.0)) throw std::invalid_argument("StepSchedule: c must be positive");
    if (!(alpha >= 0.0 && alpha < 1.0))
      throw std::invalid_argument("StepSchedule: alpha must lie in [0, 1)");
    times_.push_back(0.0);
    reserve(horizon);
  }

  double scale() const { return c_; }
  double decay() const { return alpha_; }

  double step(int k) const {
    if (k < 1) throw std::invalid_argument("StepSchedule: schedule is indexed from 1");
    return c_ * std::pow(static_cast<double>(k), -alpha_);
  }

  double time(int k) const {
    if (k < 0) throw std::invalid_argument("StepSchedule: negative index");
    reserve(k);
    return times_[static_cast<std::size_t>(k)];
  }

  void reserve(int k) const {
    while (static_cast<int>(times_.size()) <= k)
      times_.push_back(times_.back() + step(static_cast<int>(times_.size())));
  }

 private:
  double c_;
  double alpha_;
  mutable std::vector<double> times_;
};

inline double step_size(const StepSchedule& sched, int k) { return sched.step(k); }
inline double elapsed_time(const StepSchedule& sched, int k) { return sched.time(k); }

// Parameters of the noisy accelerated update: damping weight beta, the step
// schedule, and the smoothness constant the method was tuned for.
struct NnagParams {
  double beta;
  StepSchedule schedule;
  double lipschitz;

  NnagParams(double beta_, StepSchedule schedule_, double lipschitz_)
      : beta(beta_), schedule(std::move(schedule_)), lipschitz(lipschitz_) {
    if (!(beta > 0.0)) throw std::invalid_argument("NnagParams: beta must be positive");
    if (!(lipschitz > 0.0)) throw std::invalid_argument("NnagParams: L must be positive");
  }

  // Conditions under which the convergence guarantees are claimed.
  bool meets_theorem_window() const {
    return beta >= 2.0 && schedule.scale() <= 1.0 / std::sqrt(lipschitz) * (1.0 + 1e-12) &&
           schedule.decay() >= 0.75 && schedule.decay() < 1.0;
  }
};

// Raw per-iteration window 2/k^alpha <= beta <= k^alpha under which the
// drift control holds without the sharpened threshold.
inline bool lemma_window_contains(double beta, double alpha, int k) {
  const double ka = std::pow(static_cast<double>(k), alpha);
  return 2.0 / ka <= beta && beta <= ka;
}

// Smallest k0 >= 1 with k0^alpha * (1/(c sqrt(L)) + (c sqrt(L)/8) (sum_{i<=k0} i^-alpha)^2) >= beta.
// The threshold is nonincreasing in k0, so a linear scan finds the minimum.
// alpha == 0 returns 1 by convention.
inline int critical_iteration(const NnagParams& params, std::int64_t max_scan = 1000000000) {
  const double alpha = params.schedule.decay();
  if (alpha == 0.0) return 1;
  const double a = params.schedule.scale() * std::sqrt(params.lipschitz);  // c sqrt(L)
  double sum = 0.0;                                                        // sum of i^-alpha
  for (std::int64_t k = 1; k <= max_scan; ++k) {
    sum += std::pow(static_cast<double>(k), -alpha);
    const double threshold =
        std::pow(static_cast<double>(k), alpha) * (1.0 / a + a / 8.0 * sum * sum);
    if (threshold >= params.beta) return static_cast<int>(k);
  }
  throw ResourceLimitError("critical_iteration: scan limit exceeded");
}

}  // namespace hrode
