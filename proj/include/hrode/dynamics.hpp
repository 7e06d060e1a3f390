#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hrode/errors.hpp"
#include "hrode/objectives.hpp"

namespace hrode {

// Damping family n(t) = p/t, q(t) = C p t^{p-1} (velocity weight
// alpha_t = log n, potential weight beta_t = log(q/n)), perturbation scale
// sqrt(s), and strong convexity mu for the constant-damping system.
struct DampingParams {
  double p = 2.0;
  double C = 0.25;
  double s = 0.0;
  double mu = 0.0;

  double sqrt_s() const { return std::sqrt(s); }
  double n(double t) const { return p / t; }
  double q(double t) const { return C * p * std::pow(t, p - 1.0); }
};

enum class SystemKind {
  ConvexForce1,    // x-perturbed pair: X' = n(V-X) - sqrt(s) grad, V' = -q grad
  ConvexForce2,    // x-perturbed pair with the extra dual correction term
  StronglyConvex,  // constant damping 2 sqrt(mu), Hessian-driven correction
  LrUnperturbed,   // low-resolution pair, no sqrt(s) terms
  LrZPerturbed,    // dual-perturbed pair: V' = -(q + sqrt(s)) grad
  NagHrTwoLine,    // both perturbations; the accelerated method's limit system
};

inline bool has_time_singularity(SystemKind kind) { return kind != SystemKind::StronglyConvex; }

// First-order two-line system X'(t), V'(t). rhs throws std::domain_error at
// t <= 0 for kinds with 1/t damping.
struct HrOdeSystem {
  SystemKind kind;
  DampingParams params;
  int dim = 0;
  std::function<void(double, const Vector&, const Vector&, Vector&, Vector&)> rhs;
};

inline HrOdeSystem make_hr_system(SystemKind kind, const Objective& obj,
                                  const DampingParams& params) {
  if (!(params.p > 0.0) || !(params.C > 0.0) || params.s < 0.0)
    throw std::invalid_argument("make_hr_system: need p > 0, C > 0, s >= 0");
  if (kind == SystemKind::StronglyConvex && !(params.mu > 0.0))
    throw std::invalid_argument("make_hr_system: strongly convex system needs mu > 0");

  HrOdeSystem system;
  system.kind = kind;
  system.params = params;
  system.dim = obj.dim;

  const double rs = params.sqrt_s();
  if (kind == SystemKind::StronglyConvex) {
    const double rmu = std::sqrt(params.mu);
    system.rhs = [obj, rs, rmu](double, const Vector& x, const Vector& v, Vector& dx, Vector& dv) {
      const Vector g = obj.gradient(x);
      dx = rmu * (v - x) - rs * g;
      dv = rmu * (x - v) - g / rmu;
    };
    return system;
  }

  const bool x_perturbed = kind == SystemKind::ConvexForce1 || kind == SystemKind::ConvexForce2 ||
                           kind == SystemKind::NagHrTwoLine;
  // dual correction sqrt(s) * (q'n - n'q)/(n^2 q), which is identically 1
  // for the n = p/t, q = C p t^{p-1} family
  const bool v_perturbed = kind == SystemKind::ConvexForce2 ||
                           kind == SystemKind::LrZPerturbed || kind == SystemKind::NagHrTwoLine;
  system.rhs = [obj, params, rs, x_perturbed, v_perturbed](double t, const Vector& x,
                                                           const Vector& v, Vector& dx,
                                                           Vector& dv) {
    if (!(t > 0.0)) throw std::domain_error("HrOdeSystem: 1/t damping needs t > 0");
    const Vector g = obj.gradient(x);
    dx = params.n(t) * (v - x);
    if (x_perturbed) dx -= rs * g;
    dv = -params.q(t) * g;
    if (v_perturbed) dv -= rs * g;
  };
  return system;
}

// Uniformly spaced states of one integration.
struct ContinuousTrajectory {
  std::vector<double> times;
  std::vector<Vector> x;
  std::vector<Vector> v;

  double t_begin() const { return times.front(); }
  double t_end() const { return times.back(); }

  // Linear interpolation between integrator nodes.
  Vector x_at(double t) const {
    if (times.empty() || t < times.front() - 1e-12 || t > times.back() + 1e-12)
      throw std::invalid_argument("ContinuousTrajectory: time out of range");
    if (t <= times.front()) return x.front();
    if (t >= times.back()) return x.back();
    const double dt = times[1] - times[0];
    const auto i = static_cast<std::size_t>((t - times.front()) / dt);
    const std::size_t j = std::min(i, times.size() - 2);
    const double w = (t - times[j]) / (times[j + 1] - times[j]);
    return (1.0 - w) * x[j] + w * x[j + 1];
  }
};

// Classical fourth-order Runge-Kutta with fixed step dt; every step is
// recorded and the final time lands within dt of T. Throws DivergenceError
// (carrying the last finite time) when the state leaves the finite range.
inline ContinuousTrajectory integrate_rk4(const HrOdeSystem& system, const Vector& x0,
                                          const Vector& v0, double t0, double T, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_rk4: dt must be positive");
  if (!(T > t0)) throw std::invalid_argument("integrate_rk4: need T > t0");
  if (has_time_singularity(system.kind) && !(t0 > 0.0))
    throw std::invalid_argument("integrate_rk4: this system needs t0 > 0");

  const auto steps = static_cast<long long>(std::llround((T - t0) / dt));
  const long long n = steps < 1 ? 1 : steps;

  ContinuousTrajectory traj;
  traj.times.reserve(n + 1);
  traj.x.reserve(n + 1);
  traj.v.reserve(n + 1);

  Vector x = x0, v = v0;
  Vector k1x(system.dim), k1v(system.dim), k2x(system.dim), k2v(system.dim);
  Vector k3x(system.dim), k3v(system.dim), k4x(system.dim), k4v(system.dim);

  traj.times.push_back(t0);
  traj.x.push_back(x);
  traj.v.push_back(v);
  for (long long i = 0; i < n; ++i) {
    const double t = t0 + static_cast<double>(i) * dt;
    system.rhs(t, x, v, k1x, k1v);
    system.rhs(t + 0.5 * dt, x + 0.5 * dt * k1x, v + 0.5 * dt * k1v, k2x, k2v);
    system.rhs(t + 0.5 * dt, x + 0.5 * dt * k2x, v + 0.5 * dt * k2v, k3x, k3v);
    system.rhs(t + dt, x + dt * k3x, v + dt * k3v, k4x, k4v);
    x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (!x.allFinite() || !v.allFinite())
      throw DivergenceError("integrate_rk4: non-finite state", t);
    traj.times.push_back(t0 + static_cast<double>(i + 1) * dt);
    traj.x.push_back(x);
    traj.v.push_back(v);
  }
  return traj;
}

enum class ScalingCondition { Ideal, ModifiedIdeal, StronglyConvexIdeal };

struct ScalingCheck {
  bool pass = true;
  std::vector<std::string> violations;
};

// Symbolically reduced scaling conditions for the damping family. The basic
// pair holds with equality (beta' = p/t = e^alpha, gamma' = e^alpha by
// construction); the second-order condition beta'' <= e^alpha beta' +
// 2 alpha' beta' reduces to p >= 1; the strongly convex variant needs
// constant alpha (mu > 0) and beta' = sqrt(mu) >= 0.
inline ScalingCheck ideal_scaling_check(const DampingParams& params, ScalingCondition condition) {
  ScalingCheck check;
  auto violate = [&check](const std::string& what) {
    check.pass = false;
    check.violations.push_back(what);
  };
  switch (condition) {
    case ScalingCondition::Ideal:
      if (!(params.p > 0.0)) violate("positive damping degree");
      break;
    case ScalingCondition::ModifiedIdeal:
      if (!(params.p > 0.0)) violate("positive damping degree");
      if (params.p < 1.0) violate("second-order scaling");
      break;
    case ScalingCondition::StronglyConvexIdeal:
      if (!(params.mu > 0.0)) violate("positive strong convexity");
      break;
  }
  return check;
}

// Residual of the equivalent second-order form
//   X'' + A(t) X' + h * hess(X) X' + B(t) grad(X) = 0
// evaluated through the two-line right-hand side; zero (to rounding) on every
// state for a correctly built system.
inline double second_order_residual(const HrOdeSystem& system, const Objective& obj, double t,
                                    const Vector& x, const Vector& v) {
  const DampingParams& dp = system.params;
  const double rs = dp.sqrt_s();
  Vector dx(obj.dim), dv(obj.dim);
  system.rhs(t, x, v, dx, dv);
  const Vector g = obj.gradient(x);

  Vector xdd(obj.dim);
  double damping = 0.0, hess_factor = 0.0, grad_factor = 0.0;
  if (system.kind == SystemKind::StronglyConvex) {
    const double rmu = std::sqrt(dp.mu);
    xdd = rmu * (dv - dx) - rs * obj.hessian_vec(x, dx);
    damping = 2.0 * rmu;
    hess_factor = rs;
    grad_factor = 1.0 + std::sqrt(dp.mu * dp.s);
  } else {
    const double n = dp.n(t);
    const double ndot = -dp.p / (t * t);
    const bool x_perturbed = system.kind == SystemKind::ConvexForce1 ||
                             system.kind == SystemKind::ConvexForce2 ||
                             system.kind == SystemKind::NagHrTwoLine;
    xdd = ndot * (v - x) + n * (dv - dx);
    if (x_perturbed) xdd -= rs * obj.hessian_vec(x, dx);
    damping = (dp.p + 1.0) / t;
    hess_factor = x_perturbed ? rs : 0.0;
    grad_factor = dp.C * dp.p * dp.p * std::pow(t, dp.p - 2.0);
    switch (system.kind) {
      case SystemKind::ConvexForce1:
        grad_factor += rs / t;
        break;
      case SystemKind::ConvexForce2:
      case SystemKind::NagHrTwoLine:
        grad_factor += rs * (dp.p + 1.0) / t;
        break;
      case SystemKind::LrZPerturbed:
        grad_factor += rs * dp.p / t;
        break;
      default:
        break;
    }
  }
  Vector residual = xdd + damping * dx + grad_factor * g;
  if (hess_factor != 0.0) residual += hess_factor * obj.hessian_vec(x, dx);
  return residual.norm();
}

// Max over recorded iterates of |x_k - X(t_k)| with X linearly interpolated.
inline double trajectory_gap(const std::vector<Vector>& iterates, const std::vector<int>& indices,
                             const ContinuousTrajectory& continuous,
                             const std::function<double(int)>& time_map) {
  if (iterates.size() != indices.size())
    throw std::invalid_argument("trajectory_gap: iterates/indices length mismatch");
  double gap = 0.0;
  for (std::size_t i = 0; i < iterates.size(); ++i)
    gap = std::max(gap, (iterates[i] - continuous.x_at(time_map(indices[i]))).norm());
  return gap;
}

}  // namespace hrode
