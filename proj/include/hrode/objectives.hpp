#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "hrode/rng.hpp"

namespace hrode {

// Smooth convex objective oracle. Immutable after construction; evaluation is
// pure, so instances may be shared across threads.
struct Objective {
  int dim = 0;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Vector(const Vector&, const Vector&)> hessian_vec;
  double lipschitz = 0.0;         // L, smoothness constant of the gradient
  double strong_convexity = 0.0;  // mu, 0 when merely convex
  std::optional<Vector> minimizer;
  std::optional<double> optimal_value;

  // Finite-sum structure for stochastic oracles: f = (1/components) * sum f_i.
  // components == 0 means the objective is not decomposable.
  int components = 0;
  std::function<Vector(int, const Vector&)> component_gradient;

  double fgap(const Vector& x) const {
    return value(x) - optimal_value.value_or(0.0);
  }
};

// Binary classification data: one sample per row, labels in {-1, +1}.
struct Dataset {
  Eigen::MatrixXd samples;  // d x n
  Vector labels;            // d
  std::uint64_t seed = 0;

  int count() const { return static_cast<int>(samples.rows()); }
  int dim() const { return static_cast<int>(samples.cols()); }
};

// Largest eigenvalue of a symmetric PSD matrix by power iteration.
inline double power_iteration_lambda_max(const Eigen::MatrixXd& m, int max_iters = 200,
                                         double tol = 1e-10) {
  const int n = static_cast<int>(m.rows());
  if (n == 1) return m(0, 0);
  Vector v = Vector::Ones(n).normalized();
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector w = m * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    const double next = w.dot(m * w);
    const bool converged = std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next));
    lambda = next;
    v = w;
    if (converged && it > 0) break;
  }
  return lambda;
}

/// f(x) = 1/2 sum_i lambda_i (x_i - shift_i)^2 with diagonal Hessian.
inline Objective make_quadratic(const Vector& eigenvalues, const Vector& shift) {
  if (eigenvalues.size() != shift.size())
    throw std::invalid_argument("make_quadratic: eigenvalues/shift dimension mismatch");
  if (eigenvalues.size() == 0) throw std::invalid_argument("make_quadratic: empty spectrum");
  if ((eigenvalues.array() <= 0.0).any())
    throw std::invalid_argument("make_quadratic: eigenvalues must be positive");

  Objective obj;
  obj.dim = static_cast<int>(eigenvalues.size());
  obj.lipschitz = eigenvalues.maxCoeff();
  obj.strong_convexity = eigenvalues.minCoeff();
  obj.minimizer = shift;
  obj.optimal_value = 0.0;
  obj.value = [eigenvalues, shift](const Vector& x) {
    return 0.5 * (eigenvalues.array() * (x - shift).array().square()).sum();
  };
  obj.gradient = [eigenvalues, shift](const Vector& x) -> Vector {
    return eigenvalues.array() * (x - shift).array();
  };
  obj.hessian_vec = [eigenvalues](const Vector&, const Vector& dir) -> Vector {
    return eigenvalues.array() * dir.array();
  };
  return obj;
}

/// Mean logistic loss f(x) = (1/d) sum log(1 + exp(-y_i <x_i, x>)).
/// L = lambda_max((1/4d) X^T X) by power iteration; mu = 0; x*, f* unknown.
inline Objective make_logistic(const Dataset& data) {
  if (data.count() == 0) throw std::invalid_argument("make_logistic: empty dataset");
  const Eigen::MatrixXd x_mat = data.samples;
  const Vector y = data.labels;
  const int d = data.count();
  const int n = data.dim();

  // log(1 + exp(-m)) without overflow
  auto loss = [](double m) {
    return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
  };
  auto sigmoid = [](double m) {
    return m > 0.0 ? 1.0 / (1.0 + std::exp(-m)) : std::exp(m) / (1.0 + std::exp(m));
  };

  Objective obj;
  obj.dim = n;
  obj.value = [x_mat, y, d, loss](const Vector& x) {
    const Vector margins = y.array() * (x_mat * x).array();
    double total = 0.0;
    for (int i = 0; i < d; ++i) total += loss(margins[i]);
    return total / d;
  };
  obj.gradient = [x_mat, y, d, sigmoid](const Vector& x) -> Vector {
    const Vector margins = y.array() * (x_mat * x).array();
    Vector coeff(d);
    for (int i = 0; i < d; ++i) coeff[i] = -y[i] * sigmoid(-margins[i]);
    return x_mat.transpose() * coeff / d;
  };
  obj.hessian_vec = [x_mat, y, d, sigmoid](const Vector& x, const Vector& dir) -> Vector {
    const Vector margins = y.array() * (x_mat * x).array();
    const Vector along = x_mat * dir;
    Vector coeff(d);
    for (int i = 0; i < d; ++i) {
      const double s = sigmoid(margins[i]);
      coeff[i] = s * (1.0 - s) * along[i];
    }
    return x_mat.transpose() * coeff / d;
  };
  obj.lipschitz =
      power_iteration_lambda_max(x_mat.transpose() * x_mat / (4.0 * d));
  obj.strong_convexity = 0.0;
  obj.components = d;
  obj.component_gradient = [x_mat, y, sigmoid](int i, const Vector& x) -> Vector {
    const double margin = y[i] * x_mat.row(i).dot(x);
    return (-y[i] * sigmoid(-margin)) * x_mat.row(i).transpose();
  };
  return obj;
}

// Standard normal samples with labels from a hidden normal separator; ties on
// the decision boundary map to +1. Deterministic in the seed.
inline Dataset generate_classification_data(int d, int n, std::uint64_t seed) {
  if (d < 1 || n < 1)
    throw std::invalid_argument("generate_classification_data: d and n must be >= 1");
  Rng rng(seed);
  Dataset data;
  data.seed = seed;
  data.samples.resize(d, n);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < n; ++j) data.samples(i, j) = rng.normal();
  const Vector separator = rng.normal_vector(n);
  data.labels.resize(d);
  for (int i = 0; i < d; ++i)
    data.labels[i] = data.samples.row(i).dot(separator) < 0.0 ? -1.0 : 1.0;
  return data;
}

struct DerivativeCheck {
  double grad_err = 0.0;  // max relative error, analytic vs central differences
  double hvp_err = 0.0;
  double grad_norm = 0.0;
};

/// Central-difference validation of the gradient and Hessian-vector oracles.
inline DerivativeCheck derivative_check(const Objective& obj, const Vector& point, double h) {
  if (h <= 0.0) throw std::invalid_argument("derivative_check: h must be positive");
  const Vector grad = obj.gradient(point);
  Vector grad_fd(obj.dim);
  for (int i = 0; i < obj.dim; ++i) {
    Vector lo = point, hi = point;
    lo[i] -= h;
    hi[i] += h;
    grad_fd[i] = (obj.value(hi) - obj.value(lo)) / (2.0 * h);
  }
  DerivativeCheck result;
  result.grad_norm = grad.norm();
  result.grad_err = (grad_fd - grad).norm() / std::max(1.0, grad.norm());

  Rng rng(0);
  const Vector dir = rng.normal_vector(obj.dim).normalized();
  const Vector hv = obj.hessian_vec(point, dir);
  const Vector hv_fd = (obj.gradient(point + h * dir) - obj.gradient(point - h * dir)) / (2.0 * h);
  result.hvp_err = (hv_fd - hv).norm() / std::max(1.0, hv.norm());
  return result;
}

}  // namespace hrode
