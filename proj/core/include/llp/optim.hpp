#pragma once

#include <Eigen/Dense>
#include <functional>

namespace llp {

// value = f(x), gradient written into grad (same size as x)
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;
  long iterations = 0;
};

struct LbfgsOptions {
  double grad_tol = 1e-6;
  long max_iter = 500;
  int history = 10;
};

// Limited-memory BFGS (two-loop recursion) with Armijo backtracking.
// Deterministic for a deterministic objective.
OptimResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x0,
                           const LbfgsOptions& opt = {});

// Plain fixed-step gradient descent.
OptimResult gradient_descent(const Objective& f, Eigen::VectorXd x0, double step,
                             long max_iter, double grad_tol);

}  // namespace llp
