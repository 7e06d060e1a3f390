#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hrode/analysis.hpp"
#include "hrode/csv.hpp"
#include "hrode/dynamics.hpp"

using namespace hrode;

namespace {

Vector vec1(double x) {
  Vector v(1);
  v[0] = x;
  return v;
}

Objective unit_quadratic() { return make_quadratic(Vector::Ones(1), Vector::Zero(1)); }

}  // namespace

TEST_CASE("stationary point of the strongly convex system") {
  const Objective obj = make_quadratic(vec1(0.7), vec1(2.0));
  DampingParams params;
  params.s = 0.04;
  params.mu = 0.7;
  const HrOdeSystem system = make_hr_system(SystemKind::StronglyConvex, obj, params);
  Vector dx(1), dv(1);
  system.rhs(1.0, *obj.minimizer, *obj.minimizer, dx, dv);
  CHECK(dx.norm() == 0.0);
  CHECK(dv.norm() == 0.0);
}

TEST_CASE("low-resolution pair hand value") {
  const Objective obj = unit_quadratic();
  const HrOdeSystem system = make_hr_system(SystemKind::LrUnperturbed, obj, DampingParams{});
  Vector dx(1), dv(1);
  system.rhs(2.0, vec1(1.0), vec1(1.0), dx, dv);
  CHECK(dx[0] == doctest::Approx(0.0));
  CHECK(dv[0] == doctest::Approx(-1.0));
}

TEST_CASE("1/t systems reject t = 0 and enforce parameter domains") {
  const Objective obj = unit_quadratic();
  const HrOdeSystem system = make_hr_system(SystemKind::ConvexForce1, obj, DampingParams{});
  Vector dx(1), dv(1);
  CHECK_THROWS_AS(system.rhs(0.0, vec1(1.0), vec1(1.0), dx, dv), std::domain_error);
  CHECK_THROWS_AS(make_hr_system(SystemKind::StronglyConvex, obj, DampingParams{}),
                  std::invalid_argument);
  DampingParams bad;
  bad.C = 0.0;
  CHECK_THROWS_AS(make_hr_system(SystemKind::ConvexForce1, obj, bad), std::invalid_argument);
}

TEST_CASE("second-order residual vanishes for every system kind") {
  Vector eigenvalues(2), shift(2);
  eigenvalues << 0.8, 2.5;
  shift << 0.3, -0.4;
  const Objective obj = make_quadratic(eigenvalues, shift);
  Rng rng(42);
  for (SystemKind kind :
       {SystemKind::ConvexForce1, SystemKind::ConvexForce2, SystemKind::StronglyConvex,
        SystemKind::LrUnperturbed, SystemKind::LrZPerturbed, SystemKind::NagHrTwoLine}) {
    DampingParams params;
    params.p = kind == SystemKind::ConvexForce1 ? 3.0 : 2.0;
    params.C = kind == SystemKind::ConvexForce1 ? 0.5 : 0.25;
    params.s = 0.09;
    params.mu = 0.8;
    const HrOdeSystem system = make_hr_system(kind, obj, params);
    for (int trial = 0; trial < 10; ++trial) {
      const double t = 0.3 + 3.0 * rng.uniform01();
      const double residual =
          second_order_residual(system, obj, t, rng.normal_vector(2), rng.normal_vector(2));
      CHECK(residual < 1e-10);
    }
  }
}

TEST_CASE("dual-correction and x-perturbation structure") {
  // with s = 0 every perturbed system collapses to the low-resolution pair
  const Objective obj = unit_quadratic();
  DampingParams zero;
  zero.s = 0.0;
  const HrOdeSystem lr = make_hr_system(SystemKind::LrUnperturbed, obj, zero);
  Vector dx_lr(1), dv_lr(1), dx(1), dv(1);
  for (SystemKind kind :
       {SystemKind::ConvexForce1, SystemKind::ConvexForce2, SystemKind::LrZPerturbed,
        SystemKind::NagHrTwoLine}) {
    const HrOdeSystem hr = make_hr_system(kind, obj, zero);
    lr.rhs(1.7, vec1(0.6), vec1(-0.2), dx_lr, dv_lr);
    hr.rhs(1.7, vec1(0.6), vec1(-0.2), dx, dv);
    CHECK(dx == dx_lr);
    CHECK(dv == dv_lr);
  }

  // the dual correction of the second force equals the fully perturbed pair
  // on this damping family
  DampingParams perturbed;
  perturbed.s = 0.09;
  const HrOdeSystem force2 = make_hr_system(SystemKind::ConvexForce2, obj, perturbed);
  const HrOdeSystem nag_pair = make_hr_system(SystemKind::NagHrTwoLine, obj, perturbed);
  Vector dx2(1), dv2(1);
  force2.rhs(0.9, vec1(1.1), vec1(0.4), dx, dv);
  nag_pair.rhs(0.9, vec1(1.1), vec1(0.4), dx2, dv2);
  CHECK(dx == dx2);
  CHECK(dv == dv2);
}

TEST_CASE("rk4 integrates the harmonic oscillator to fourth order") {
  // X' = V, V' = -X has the cosine solution; the builder is bypassed
  HrOdeSystem harmonic;
  harmonic.kind = SystemKind::StronglyConvex;  // no 1/t guard
  harmonic.dim = 1;
  harmonic.rhs = [](double, const Vector& x, const Vector& v, Vector& dx, Vector& dv) {
    dx = v;
    dv = -x;
  };
  const ContinuousTrajectory fine =
      integrate_rk4(harmonic, vec1(1.0), vec1(0.0), 0.0, M_PI, 1e-4);
  CHECK(std::abs(fine.x.back()[0] - std::cos(fine.times.back())) < 1e-8);
  CHECK(std::abs(fine.times.back() - M_PI) <= 1e-4);
  CHECK(fine.times.size() == 31417);

  // Richardson ratio at a horizon divisible by both steps, where the phase
  // error (order 4) dominates the amplitude error (order 5)
  auto endpoint_error = [&harmonic](double dt) {
    const ContinuousTrajectory traj = integrate_rk4(harmonic, vec1(1.0), vec1(0.0), 0.0, 2.4, dt);
    return std::abs(traj.x.back()[0] - std::cos(traj.times.back()));
  };
  CHECK(endpoint_error(2e-2) / endpoint_error(1e-2) == doctest::Approx(16.0).epsilon(0.3));
}

TEST_CASE("rk4 stays at a stationary start") {
  const Objective obj = make_quadratic(vec1(2.0), vec1(1.5));
  DampingParams params;
  params.s = 0.01;
  params.mu = 2.0;
  const HrOdeSystem system = make_hr_system(SystemKind::StronglyConvex, obj, params);
  const ContinuousTrajectory traj =
      integrate_rk4(system, *obj.minimizer, *obj.minimizer, 0.1, 3.0, 1e-3);
  for (const Vector& x : traj.x) CHECK((x - *obj.minimizer).norm() < 1e-14);
}

TEST_CASE("rk4 reports divergence with the last finite time") {
  HrOdeSystem exploding;
  exploding.kind = SystemKind::StronglyConvex;
  exploding.dim = 1;
  exploding.rhs = [](double, const Vector& x, const Vector&, Vector& dx, Vector& dv) {
    dx = 100.0 * x.array().square().matrix() + Vector::Ones(1);
    dv = dx;
  };
  CHECK_THROWS_AS(integrate_rk4(exploding, vec1(1.0), vec1(0.0), 0.0, 10.0, 0.1),
                  DivergenceError);
}

TEST_CASE("ideal scaling checks reduce to closed-form conditions") {
  DampingParams params;
  params.p = 2.0;
  params.C = 0.25;
  CHECK(ideal_scaling_check(params, ScalingCondition::ModifiedIdeal).pass);

  params.p = 0.5;
  const ScalingCheck fail = ideal_scaling_check(params, ScalingCondition::ModifiedIdeal);
  CHECK_FALSE(fail.pass);
  REQUIRE(fail.violations.size() == 1);
  CHECK(fail.violations[0] == "second-order scaling");

  params.p = 1.0;
  CHECK(ideal_scaling_check(params, ScalingCondition::Ideal).pass);

  DampingParams strongly;
  strongly.mu = 0.5;
  CHECK(ideal_scaling_check(strongly, ScalingCondition::StronglyConvexIdeal).pass);
  strongly.mu = 0.0;
  CHECK_FALSE(ideal_scaling_check(strongly, ScalingCondition::StronglyConvexIdeal).pass);
}

TEST_CASE("trajectory gap basics") {
  ContinuousTrajectory traj;
  for (int i = 0; i <= 10; ++i) {
    traj.times.push_back(0.1 * i);
    traj.x.push_back(vec1(0.1 * i));
    traj.v.push_back(vec1(0.0));
  }
  const std::vector<Vector> same{vec1(0.0), vec1(0.5), vec1(1.0)};
  const std::vector<int> ks{0, 5, 10};
  CHECK(trajectory_gap(same, ks, traj, [](int k) { return 0.1 * k; }) ==
        doctest::Approx(0.0).epsilon(1e-12));

  const std::vector<Vector> constant{vec1(0.25), vec1(0.25)};
  CHECK(trajectory_gap(constant, {2, 3}, traj, [](int k) { return 0.1 * k; }) ==
        doctest::Approx(std::max(std::abs(0.25 - 0.2), std::abs(0.25 - 0.3))));

  CHECK_THROWS_AS(trajectory_gap(constant, {2, 200}, traj, [](int k) { return 0.1 * k; }),
                  std::invalid_argument);
}

TEST_CASE("objective decay matches the force-2 envelope") {
  Vector eigenvalues(2), shift(2), x0(2);
  eigenvalues << 1.0, 3.0;
  shift << 0.0, 0.0;
  x0 << 1.0, 2.0;
  const Objective obj = make_quadratic(eigenvalues, shift);
  DampingParams params;
  params.s = 0.01;
  const HrOdeSystem system = make_hr_system(SystemKind::ConvexForce2, obj, params);
  const ContinuousTrajectory traj = integrate_rk4(system, x0, x0, 0.1, 15.0, 1e-3);
  const double initial =
      lyapunov_value(LyapunovKind::ConvexForce2, obj, params, traj.times[0], traj.x[0], traj.v[0]);
  for (std::size_t i = 0; i < traj.times.size(); i += 50) {
    const double t = traj.times[i];
    const double envelope =
        initial / (params.C * t * t + params.sqrt_s() * t / params.p);
    CHECK(obj.fgap(traj.x[i]) <= envelope * (1.0 + 1e-9) + 1e-6);
  }
}

TEST_CASE("trajectory csv layout") {
  ContinuousTrajectory traj;
  traj.times = {0.5};
  traj.x = {vec1(1.0)};
  traj.v = {vec1(-2.0)};
  std::ostringstream out;
  write_csv(traj, out);
  CHECK(out.str() == "t,x_1,v_1\n0.5,1,-2\n");
}
