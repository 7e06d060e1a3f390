#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hrode/csv.hpp"
#include "hrode/objectives.hpp"

using namespace hrode;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("quadratic matches the closed form") {
  const Objective obj = make_quadratic(vec({1.0}), vec({0.0}));
  CHECK(obj.value(vec({2.0})) == doctest::Approx(2.0));
  CHECK(obj.gradient(vec({2.0}))[0] == doctest::Approx(2.0));
  CHECK(obj.hessian_vec(vec({5.0}), vec({3.0}))[0] == doctest::Approx(3.0));

  const Objective two = make_quadratic(vec({1.0, 4.0}), vec({0.0, 0.0}));
  CHECK(two.lipschitz == 4.0);
  CHECK(two.strong_convexity == 1.0);
  CHECK((*two.minimizer - vec({0.0, 0.0})).norm() == 0.0);
  CHECK(*two.optimal_value == 0.0);
}

TEST_CASE("quadratic rejects bad spectra") {
  CHECK_THROWS_AS(make_quadratic(vec({1.0, -2.0}), vec({0.0, 0.0})), std::invalid_argument);
  CHECK_THROWS_AS(make_quadratic(vec({1.0}), vec({0.0, 0.0})), std::invalid_argument);
}

TEST_CASE("logistic hand values on a single sample") {
  Dataset data;
  data.samples.resize(1, 2);
  data.samples << 1.0, 0.0;
  data.labels = vec({1.0});
  const Objective obj = make_logistic(data);

  const Vector origin = vec({0.0, 0.0});
  CHECK(obj.value(origin) == doctest::Approx(std::log(2.0)));
  CHECK(obj.gradient(origin)[0] == doctest::Approx(-0.5));
  CHECK(obj.gradient(origin)[1] == doctest::Approx(0.0));
  CHECK(obj.lipschitz == doctest::Approx(0.25).epsilon(1e-9));
  const Vector hv = obj.hessian_vec(origin, vec({1.0, 0.0}));
  CHECK(hv[0] == doctest::Approx(0.25));
  CHECK(hv[1] == doctest::Approx(0.0));
  CHECK(obj.components == 1);
  CHECK_FALSE(obj.minimizer.has_value());
}

TEST_CASE("logistic rejects empty data") {
  Dataset data;
  data.samples.resize(0, 3);
  data.labels.resize(0);
  CHECK_THROWS_AS(make_logistic(data), std::invalid_argument);
}

TEST_CASE("logistic is nonnegative and midpoint-convex") {
  const Dataset data = generate_classification_data(60, 4, 3);
  const Objective obj = make_logistic(data);
  Rng rng(99);
  for (int i = 0; i < 100; ++i) {
    const Vector a = 3.0 * rng.normal_vector(4);
    const Vector b = 3.0 * rng.normal_vector(4);
    CHECK(obj.value(a) >= 0.0);
    CHECK(obj.value(0.5 * (a + b)) <= 0.5 * (obj.value(a) + obj.value(b)) + 1e-12);
  }
}

TEST_CASE("gradient is L-Lipschitz on sampled pairs") {
  const Objective obj = make_logistic(generate_classification_data(80, 5, 21));
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const Vector a = 2.0 * rng.normal_vector(5);
    const Vector b = 2.0 * rng.normal_vector(5);
    CHECK((obj.gradient(a) - obj.gradient(b)).norm() <=
          obj.lipschitz * (a - b).norm() * (1.0 + 1e-9));
  }
}

TEST_CASE("classification data is reproducible and labeled in {-1,+1}") {
  const Dataset a = generate_classification_data(1000, 10, 7);
  const Dataset b = generate_classification_data(1000, 10, 7);
  CHECK(a.count() == 1000);
  CHECK(a.dim() == 10);
  CHECK(a.samples == b.samples);
  CHECK(a.labels == b.labels);

  std::ostringstream csv_a, csv_b;
  write_csv(a, csv_a);
  write_csv(b, csv_b);
  CHECK(csv_a.str() == csv_b.str());

  const Dataset tiny = generate_classification_data(1, 1, 0);
  CHECK((tiny.labels[0] == 1.0 || tiny.labels[0] == -1.0));
  for (int i = 0; i < a.count(); ++i) CHECK(std::abs(a.labels[i]) == 1.0);

  CHECK_THROWS_AS(generate_classification_data(0, 3, 1), std::invalid_argument);
}

TEST_CASE("dataset csv layout") {
  Dataset data;
  data.samples.resize(1, 2);
  data.samples << 0.5, -1.25;
  data.labels = vec({-1.0});
  std::ostringstream out;
  write_csv(data, out);
  CHECK(out.str() == "label,x1,x2\n-1,0.5,-1.25\n");
}

TEST_CASE("derivative check on exact oracles") {
  const Objective quad = make_quadratic(vec({1.0}), vec({0.0}));
  const DerivativeCheck at_one = derivative_check(quad, vec({1.0}), 1e-6);
  CHECK(at_one.grad_err < 1e-7);
  CHECK(at_one.hvp_err < 1e-7);

  Dataset data;
  data.samples.resize(1, 2);
  data.samples << 1.0, 0.0;
  data.labels = vec({1.0});
  const Objective logistic = make_logistic(data);
  const DerivativeCheck at_origin = derivative_check(logistic, vec({0.0, 0.0}), 1e-5);
  CHECK(at_origin.grad_err < 1e-6);

  const DerivativeCheck at_min = derivative_check(quad, vec({0.0}), 1e-6);
  CHECK(at_min.grad_norm < 1e-10);

  CHECK_THROWS_AS(derivative_check(quad, vec({1.0}), 0.0), std::invalid_argument);
}

TEST_CASE("central differences are exact on quadratics and O(h^2) on logistic") {
  Rng rng(17);
  Vector eigenvalues(6), shift(6);
  for (int i = 0; i < 6; ++i) {
    eigenvalues[i] = 0.1 + 9.9 * rng.uniform01();
    shift[i] = rng.normal();
  }
  const Objective quad = make_quadratic(eigenvalues, shift);
  const Vector point = shift + rng.normal_vector(6);
  for (double h : {1e-2, 1e-3, 1e-4})
    CHECK(derivative_check(quad, point, h).grad_err < 1e-9);

  // third derivative is nonzero here, so halving h divides the truncation
  // error by about four
  const Objective logistic = make_logistic(generate_classification_data(40, 3, 13));
  const Vector x = rng.normal_vector(3);
  const double coarse = derivative_check(logistic, x, 2e-2).grad_err;
  const double fine = derivative_check(logistic, x, 1e-2).grad_err;
  CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("stationarity at the quadratic minimizer") {
  const Objective obj = make_quadratic(vec({2.0, 3.0}), vec({1.0, -1.0}));
  CHECK(obj.gradient(*obj.minimizer).norm() <= 1e-10);
  Rng rng(4);
  for (int i = 0; i < 20; ++i)
    CHECK(obj.value(rng.normal_vector(2)) >= *obj.optimal_value);
}
