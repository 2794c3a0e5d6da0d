#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>

namespace sohkit {

// Box-constrained BFGS minimizer with backtracking Armijo line search.
// Deterministic: no randomness, fixed evaluation order. Iterates are
// projected onto [lower, upper] after every step; the inverse-Hessian
// approximation resets to identity whenever curvature information is
// unusable (non-descent direction or tiny s'y).
struct BfgsOptions {
  int max_iterations = 60;
  double gradient_tolerance = 1e-5;   // stop when max|g| falls below
  double step_tolerance = 1e-12;      // stop when the projected step stalls
  double armijo_c1 = 1e-4;
  int max_backtracks = 40;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;  // gradient tolerance reached on interior coords
};

// objective(x, grad) returns f(x) and fills grad (same size as x).
inline BfgsResult bfgs_minimize(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& objective,
    Eigen::VectorXd x0, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
    const BfgsOptions& opts = {}) {
  const auto n = x0.size();
  auto project = [&](Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < n; ++i)
      v[i] = std::min(std::max(v[i], lower[i]), upper[i]);
  };
  project(x0);

  BfgsResult res;
  res.x = x0;
  Eigen::VectorXd g(n), g_new(n);
  double f = objective(res.x, g);
  if (!std::isfinite(f)) {
    res.value = f;
    return res;
  }
  res.value = f;

  // Gradient entries pointing outward at an active bound do not count
  // against convergence.
  auto interior_grad_norm = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& grad) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lower = x[i] <= lower[i] && grad[i] > 0.0;
      const bool at_upper = x[i] >= upper[i] && grad[i] < 0.0;
      if (!at_lower && !at_upper) m = std::max(m, std::abs(grad[i]));
    }
    return m;
  };

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    res.iterations = iter;
    if (interior_grad_norm(res.x, g) <= opts.gradient_tolerance) {
      res.converged = true;
      return res;
    }

    Eigen::VectorXd p = -(H * g);
    double descent = g.dot(p);
    if (!(descent < 0.0)) {
      H.setIdentity();
      p = -g;
      descent = g.dot(p);
    }

    double step = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int bt = 0; bt < opts.max_backtracks; ++bt) {
      x_new = res.x + step * p;
      project(x_new);
      const Eigen::VectorXd actual = x_new - res.x;
      if (actual.lpNorm<Eigen::Infinity>() < opts.step_tolerance) break;
      f_new = objective(x_new, g_new);
      if (std::isfinite(f_new) &&
          f_new <= f + opts.armijo_c1 * step * descent) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return res;  // no further progress possible along p

    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      // Sherman-Morrison form of the inverse BFGS update.
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) +
          rho * s * s.transpose();
    } else {
      H.setIdentity();
    }
    res.x = x_new;
    f = f_new;
    res.value = f;
    g = g_new;
  }
  res.converged =
      interior_grad_norm(res.x, g) <= opts.gradient_tolerance;
  return res;
}

}  // namespace sohkit
