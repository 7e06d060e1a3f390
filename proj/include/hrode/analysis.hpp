#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hrode/dynamics.hpp"
#include "hrode/objectives.hpp"
#include "hrode/optimizers.hpp"

namespace hrode {

enum class LyapunovKind {
  ConvexForce1,   // |V - x*|^2/2 + C t^p (f - f*)
  ConvexForce2,   // |V - x*|^2/2 + (C t^p + sqrt(s) t/p)(f - f*)
  StronglyConvex, // e^{sqrt(mu) t} (mu |V - x*|^2 / 2 + f - f*)
  NagSie,
  Nnag,
  ModifiedNnag,
};

inline bool is_continuous(LyapunovKind kind) {
  return kind == LyapunovKind::ConvexForce1 || kind == LyapunovKind::ConvexForce2 ||
         kind == LyapunovKind::StronglyConvex;
}

// Continuous evaluation in two-line coordinates (V is the system's dual
// variable, V = X + e^{-alpha} X' + sqrt(s) e^{-alpha} grad).
inline double lyapunov_value(LyapunovKind kind, const Objective& obj, const DampingParams& params,
                             double t, const Vector& x, const Vector& v) {
  require_solution(obj, "lyapunov_value");
  const double gap = obj.fgap(x);
  const double dist2 = (v - *obj.minimizer).squaredNorm();
  switch (kind) {
    case LyapunovKind::ConvexForce1:
      return 0.5 * dist2 + params.C * std::pow(t, params.p) * gap;
    case LyapunovKind::ConvexForce2:
      return 0.5 * dist2 +
             (params.C * std::pow(t, params.p) + params.sqrt_s() * t / params.p) * gap;
    case LyapunovKind::StronglyConvex:
      return std::exp(std::sqrt(params.mu) * t) * (0.5 * params.mu * dist2 + gap);
    default:
      throw std::invalid_argument("lyapunov_value: discrete kind given continuous arguments");
  }
}

// Dual variable from (X, X'); lets the continuous kinds be evaluated on
// velocity-space states.
inline Vector two_line_dual(LyapunovKind kind, const Objective& obj, const DampingParams& params,
                            double t, const Vector& x, const Vector& xdot) {
  if (kind == LyapunovKind::StronglyConvex) {
    const double rmu = std::sqrt(params.mu);
    return x + xdot / rmu + params.sqrt_s() / rmu * obj.gradient(x);
  }
  const double inv_n = t / params.p;
  return x + inv_n * xdot + params.sqrt_s() * inv_n * obj.gradient(x);
}

struct DiscreteLyapunovParams {
  double s = 0.0;          // fixed step (NagSie kind)
  double beta = 2.0;       // damping weight (Nnag kind)
  double lipschitz = 1.0;  // smoothness constant (Nnag kind)
  double s_k = 0.0;        // schedule step at the state's k (ModifiedNnag kind)
};

inline double lyapunov_value(LyapunovKind kind, const Objective& obj, const OptimizerState& state,
                             const DiscreteLyapunovParams& params) {
  switch (kind) {
    case LyapunovKind::NagSie:
      return nag_sie_lyapunov(obj, state, params.s);
    case LyapunovKind::Nnag:
      return nnag_lyapunov(obj, state, params.beta, params.lipschitz);
    case LyapunovKind::ModifiedNnag:
      return mnnag_lyapunov(obj, state, params.s_k);
    default:
      throw std::invalid_argument("lyapunov_value: continuous kind given discrete arguments");
  }
}

// Lyapunov values along an integrated trajectory.
inline std::vector<double> lyapunov_series(LyapunovKind kind, const Objective& obj,
                                           const DampingParams& params,
                                           const ContinuousTrajectory& traj) {
  std::vector<double> values;
  values.reserve(traj.times.size());
  for (std::size_t i = 0; i < traj.times.size(); ++i)
    values.push_back(lyapunov_value(kind, obj, params, traj.times[i], traj.x[i], traj.v[i]));
  return values;
}

struct DecrementReport {
  std::vector<int> violations;
  double margin = 0.0;  // worst observed (increment - bound); <= 0 when clean

  bool pass() const { return violations.empty(); }
};

// Per-step decrement bound for the semi-implicit accelerated run:
//   eps(k+1) - eps(k) <= -(s^2 k (k+2) / 8) |grad f(x_k)|^2
// with relative slack on the violation test. Requires contiguous rows.
inline DecrementReport decrement_check(const TrajectoryRecord& record, double s,
                                       double rel_slack) {
  DecrementReport report;
  report.margin = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < record.rows(); ++i) {
    if (record.k[i + 1] != record.k[i] + 1)
      throw std::invalid_argument("decrement_check: record rows must be contiguous");
    const double k = record.k[i];
    const double bound = -(s * s * k * (k + 2.0) / 8.0) * record.gradnorm2[i];
    const double increment = record.lyapunov[i + 1] - record.lyapunov[i];
    const double excess = increment - bound;
    report.margin = std::max(report.margin, excess);
    if (excess > rel_slack * std::max(1.0, std::abs(record.lyapunov[i])))
      report.violations.push_back(record.k[i]);
  }
  return report;
}

// Nonincreasing check with absolute per-step slack (continuous kinds and
// noiseless stochastic runs).
inline DecrementReport decrement_check(std::span<const double> lyapunov_values, double abs_slack) {
  DecrementReport report;
  report.margin = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < lyapunov_values.size(); ++i) {
    const double increment = lyapunov_values[i + 1] - lyapunov_values[i];
    report.margin = std::max(report.margin, increment);
    if (increment > abs_slack) report.violations.push_back(static_cast<int>(i));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Closed-form theoretical bounds.

enum class BoundId {
  NagFgap,       // 2 R^2 / (s k (k+2))
  NagGradMin,    // 12 R^2 / (k^3 s^2)
  ShiGradMin,    // 8568 R^2 / ((k+1)^3 s^2)
  NnagA34,       // noisy accelerated bound, alpha = 3/4
  NnagGeneral,   // noisy accelerated bound, 3/4 < alpha < 1
  MnnagFgap,     // modified noisy bound (both alpha branches)
  MnnagGradMin,  // modified noisy min-gradient bound, alpha = 3/4
};

struct BoundSpec {
  double R2 = 1.0;  // |x0 - x*|^2
  double s = 0.0;
  double c = 1.0;
  double alpha = 0.75;
  double beta = 2.0;
  double lipschitz = 1.0;
  double sigma2 = 0.0;
  int k0 = 1;
  double eps_k0 = 0.0;  // E[eps(k0)]
  double eps0 = 0.0;    // E[eps(0)] = R^2 / 2
};

inline double theoretical_bound(BoundId id, const BoundSpec& spec, int k) {
  if (k < 1) throw std::invalid_argument("theoretical_bound: k must be >= 1");
  const double kd = k;
  const double rl = std::sqrt(spec.lipschitz);
  const double c = spec.c, a = spec.alpha, beta = spec.beta, sg2 = spec.sigma2;
  switch (id) {
    case BoundId::NagFgap:
      return 2.0 * spec.R2 / (spec.s * kd * (kd + 2.0));
    case BoundId::NagGradMin:
      return 12.0 * spec.R2 / (kd * kd * kd * spec.s * spec.s);
    case BoundId::ShiGradMin:
      return 8568.0 * spec.R2 / (std::pow(kd + 1.0, 3) * spec.s * spec.s);
    case BoundId::NnagA34: {
      if (k < spec.k0) throw std::invalid_argument("theoretical_bound: k < k0");
      const double k0 = spec.k0;
      const double u = std::pow(kd, 0.25) - 1.0;
      const double den = 4.0 * c * c * u * u + 2.0 * c * beta / rl * u;
      if (den == 0.0) throw std::domain_error("theoretical_bound: denominator vanishes at k = 1");
      const double num = spec.eps_k0 + 2.0 * sg2 * std::pow(c, 4) * std::log(kd / k0) +
                         8.0 * sg2 * std::pow(c, 3) * beta / rl *
                             (std::pow(k0, -0.25) - std::pow(kd, -0.25)) +
                         beta * beta * c * c * sg2 / spec.lipschitz *
                             (std::pow(k0, -0.5) - std::pow(kd, -0.5));
      return num / den;
    }
    case BoundId::NnagGeneral: {
      if (!(a > 0.75 && a < 1.0))
        throw std::invalid_argument("theoretical_bound: general branch needs 3/4 < alpha < 1");
      if (k < spec.k0) throw std::invalid_argument("theoretical_bound: k < k0");
      const double k0 = spec.k0;
      const double oma = 1.0 - a;
      const double u = std::pow(kd, oma) - 1.0;
      const double den = c * c / (4.0 * oma * oma) * u * u + c * beta / (2.0 * rl * oma) * u;
      if (den == 0.0) throw std::domain_error("theoretical_bound: denominator vanishes at k = 1");
      const double num =
          spec.eps_k0 +
          sg2 * std::pow(c, 4) / (oma * oma) *
              (std::pow(k0, 3.0 - 4.0 * a) - std::pow(kd, 3.0 - 4.0 * a)) +
          sg2 * std::pow(c, 3) * beta / (2.0 * rl * oma * (3.0 * a - 2.0)) *
              (std::pow(k0, 2.0 - 3.0 * a) - std::pow(kd, 2.0 - 3.0 * a)) +
          beta * beta * c * c * sg2 / (2.0 * spec.lipschitz * (2.0 * a - 1.0)) *
              (std::pow(k0, 1.0 - 2.0 * a) - std::pow(kd, 1.0 - 2.0 * a));
      return num / den;
    }
    case BoundId::MnnagFgap: {
      if (a == 0.75) {
        const double u = std::pow(kd, 0.25) - 1.0;
        const double den =
            2.0 * c * c * (2.0 * u * u + std::pow(kd, -0.75) * u);
        if (den == 0.0)
          throw std::domain_error("theoretical_bound: denominator vanishes at k = 1");
        const double num = spec.eps0 + std::pow(c, 4) * sg2 / 8.0 *
                                           (16.0 * (1.0 + std::log(kd)) + 32.0 + 6.0);
        return num / den;
      }
      if (!(a > 0.75 && a < 1.0))
        throw std::invalid_argument("theoretical_bound: alpha must lie in [3/4, 1)");
      const double oma = 1.0 - a;
      const double u = std::pow(kd, oma) - 1.0;
      const double den =
          c * c / (2.0 * oma) * (u * u / (2.0 * oma) + std::pow(kd, -a) * u);
      if (den == 0.0) throw std::domain_error("theoretical_bound: denominator vanishes at k = 1");
      const double num =
          spec.eps0 + std::pow(c, 4) * sg2 / 8.0 *
                          ((4.0 * a - 2.0) / (oma * oma * (4.0 * a - 3.0)) +
                           4.0 * (4.0 * a - 1.0) / (oma * (4.0 * a - 2.0)) +
                           4.0 * (4.0 * a) / (4.0 * a - 1.0));
      return num / den;
    }
    case BoundId::MnnagGradMin: {
      if (a != 0.75)
        throw std::invalid_argument("theoretical_bound: min-gradient bound needs alpha = 3/4");
      const double den = 16.0 * std::pow(c, 3) *
                         ((std::pow(kd, 0.75) - 1.0) / 3.0 + std::pow(kd, 0.25) - 1.5 +
                          std::pow(kd, 0.5));
      const double num =
          2.0 * rl * spec.eps0 + 2.0 * std::pow(c, 4) * sg2 * rl * (2.0 * std::log(kd) + 6.75);
      return num / den;
    }
  }
  throw std::logic_error("theoretical_bound: unknown id");
}

inline std::vector<std::pair<int, double>> bound_curve(BoundId id, const BoundSpec& spec,
                                                       std::span<const int> ks) {
  std::vector<std::pair<int, double>> curve;
  curve.reserve(ks.size());
  for (int k : ks) curve.emplace_back(k, theoretical_bound(id, spec, k));
  return curve;
}

}  // namespace hrode
