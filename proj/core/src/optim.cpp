#include "llp/optim.hpp"

#include <cmath>
#include <deque>

#include "llp/errors.hpp"

namespace llp {

OptimResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& opt) {
  const long dim = x0.size();
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd grad(dim);
  double value = f(x, grad);

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  OptimResult res;
  long it = 0;
  for (; it < opt.max_iter; ++it) {
    if (grad.norm() <= opt.grad_tol) break;

    // two-loop recursion
    Eigen::VectorXd q = grad;
    std::vector<double> alpha(s_hist.size());
    for (long i = static_cast<long>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      const auto& s = s_hist.back();
      const auto& y = y_hist.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd direction = -q;

    double slope = grad.dot(direction);
    if (slope >= 0.0) {  // not a descent direction; fall back to steepest
      direction = -grad;
      slope = -grad.squaredNorm();
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    // Armijo backtracking
    double step = 1.0;
    Eigen::VectorXd x_new(dim), grad_new(dim);
    double value_new = value;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * direction;
      value_new = f(x_new, grad_new);
      if (std::isfinite(value_new) && value_new <= value + 1e-4 * step * slope) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      if (static_cast<int>(s_hist.size()) == opt.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    x = std::move(x_new);
    grad = std::move(grad_new);
    value = value_new;
  }

  res.x = std::move(x);
  res.value = value;
  res.grad_norm = grad.norm();
  res.iterations = it;
  return res;
}

OptimResult gradient_descent(const Objective& f, Eigen::VectorXd x0, double step,
                             long max_iter, double grad_tol) {
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd grad(x.size());
  double value = f(x, grad);
  long it = 0;
  for (; it < max_iter; ++it) {
    if (grad.norm() <= grad_tol) break;
    x -= step * grad;
    value = f(x, grad);
    if (!std::isfinite(value)) throw Error("gradient_descent: diverged");
  }
  OptimResult res;
  res.x = std::move(x);
  res.value = value;
  res.grad_norm = grad.norm();
  res.iterations = it;
  return res;
}

}  // namespace llp
