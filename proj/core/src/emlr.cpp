#include <algorithm>
#include <cmath>

#include "llp/errors.hpp"
#include "llp/optim.hpp"
#include "learners_impl.hpp"

namespace llp::detail {

Eigen::VectorXd soft_logistic_fit(const Eigen::MatrixXd& xb, const Eigen::VectorXd& q,
                                  double reg, bool penalize_bias,
                                  const Eigen::VectorXd& warm_start, double* final_value) {
  const double n = static_cast<double>(xb.rows());
  Objective obj = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    Eigen::VectorXd a = xb * theta;
    double loss = 0.0;
    Eigen::VectorXd resid(a.size());
    for (long i = 0; i < a.size(); ++i) {
      loss += log1pexp(a[i]) - q[i] * a[i];
      resid[i] = sigmoid(a[i]) - q[i];
    }
    loss /= n;
    grad = xb.transpose() * resid / n;
    const long wlen = penalize_bias ? theta.size() : theta.size() - 1;
    loss += reg * theta.head(wlen).squaredNorm() / (2.0 * n);
    grad.head(wlen) += reg * theta.head(wlen) / n;
    return loss;
  };
  LbfgsOptions lopt;
  lopt.grad_tol = 1e-6;
  lopt.max_iter = 500;
  OptimResult r = lbfgs_minimize(obj, warm_start, lopt);
  if (final_value) *final_value = r.value;
  return r.x;
}

double soft_logistic_value(const Eigen::MatrixXd& xb, const Eigen::VectorXd& q, double reg,
                           bool penalize_bias, const Eigen::VectorXd& theta) {
  const double n = static_cast<double>(xb.rows());
  Eigen::VectorXd a = xb * theta;
  double loss = 0.0;
  for (long i = 0; i < a.size(); ++i) loss += log1pexp(a[i]) - q[i] * a[i];
  loss /= n;
  const long wlen = penalize_bias ? theta.size() : theta.size() - 1;
  loss += reg * theta.head(wlen).squaredNorm() / (2.0 * n);
  return loss;
}

namespace {

// Per-bag multiplicative calibration: returns q_i = s_i t / (s_i t + 1 - s_i)
// with t chosen by bisection so the bag mean of q matches the proportion.
void calibrate_bag_binary(const std::vector<long>& items, const Eigen::VectorXd& s,
                          double p, Eigen::VectorXd& q) {
  if (p <= 0.0) {
    for (long i : items) q[i] = 0.0;
    return;
  }
  if (p >= 1.0) {
    for (long i : items) q[i] = 1.0;
    return;
  }
  const double n = static_cast<double>(items.size());
  auto mean_at = [&](double log_t) {
    const double t = std::exp(log_t);
    double sum = 0.0;
    for (long i : items) sum += s[i] * t / (s[i] * t + 1.0 - s[i]);
    return sum / n;
  };
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 100; ++it) {
    double mid = 0.5 * (lo + hi);
    (mean_at(mid) < p ? lo : hi) = mid;
  }
  const double t = std::exp(0.5 * (lo + hi));
  for (long i : items) q[i] = s[i] * t / (s[i] * t + 1.0 - s[i]);
}

// Multiclass analogue: per-class scale factors fitted by cyclic
// rescaling until the bag mean matches the proportion row.
void calibrate_bag_multiclass(const std::vector<long>& items, const Eigen::MatrixXd& s,
                              const Eigen::RowVectorXd& p, Eigen::MatrixXd& q) {
  const long C = s.cols();
  const double n = static_cast<double>(items.size());
  Eigen::RowVectorXd t = Eigen::RowVectorXd::Ones(C);
  for (long c = 0; c < C; ++c)
    if (p[c] <= 0.0) t[c] = 0.0;
  Eigen::MatrixXd qi(static_cast<long>(items.size()), C);
  for (int sweep = 0; sweep < 500; ++sweep) {
    for (std::size_t k = 0; k < items.size(); ++k) {
      Eigen::RowVectorXd row = s.row(items[k]).cwiseProduct(t);
      double z = row.sum();
      qi.row(static_cast<long>(k)) = z > 0 ? (row / z).eval() : row;
    }
    Eigen::RowVectorXd m = qi.colwise().sum() / n;
    double dev = (m - p).cwiseAbs().maxCoeff();
    if (dev < 1e-10) break;
    for (long c = 0; c < C; ++c)
      if (m[c] > 0 && p[c] > 0) t[c] *= p[c] / m[c];
  }
  for (std::size_t k = 0; k < items.size(); ++k) q.row(items[k]) = qi.row(static_cast<long>(k));
}

LLPModel fit_emlr_binary(const LlpView& train, const HyperParams& hp) {
  const double c_reg = hyper(hp, "C", 1.0);
  if (c_reg <= 0.0) throw Error("emlr: C must be positive");
  const double reg = 1.0 / c_reg;
  const Eigen::MatrixXd xb = with_bias(train.features);
  const long n = train.n_items();
  const long L = train.n_bags();

  std::vector<std::vector<long>> by_bag(L);
  for (long i = 0; i < n; ++i) by_bag[train.bag_ids[i]].push_back(i);

  // soft labels start at each item's bag proportion of class 1
  Eigen::VectorXd q(n);
  for (long i = 0; i < n; ++i) q[i] = train.proportions(train.bag_ids[i], 1);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(xb.cols());
  LLPModel model;
  double value = 0.0;
  long round = 0;
  for (; round < 50; ++round) {
    theta = soft_logistic_fit(xb, q, reg, false, theta, &value);
    model.training_meta.objective_trace.push_back(value);

    Eigen::VectorXd s = (xb * theta).unaryExpr([](double a) {
      return std::clamp(sigmoid(a), 1e-12, 1.0 - 1e-12);
    });
    Eigen::VectorXd q_new(n);
    for (long l = 0; l < L; ++l)
      calibrate_bag_binary(by_bag[l], s, train.proportions(l, 1), q_new);

    const double delta = (q_new - q).cwiseAbs().maxCoeff();
    q = std::move(q_new);
    if (delta < 1e-4) {
      ++round;
      break;
    }
  }
  model.theta = theta;
  model.training_meta.iterations = round;
  model.training_meta.final_loss = value;
  return model;
}

LLPModel fit_emlr_multiclass(const LlpView& train, const HyperParams& hp) {
  const double c_reg = hyper(hp, "C", 1.0);
  if (c_reg <= 0.0) throw Error("emlr: C must be positive");
  const double reg = 1.0 / c_reg;
  const Eigen::MatrixXd xb = with_bias(train.features);
  const long n = train.n_items();
  const long L = train.n_bags();
  const int C = train.n_classes();
  const long dim = xb.cols();

  std::vector<std::vector<long>> by_bag(L);
  for (long i = 0; i < n; ++i) by_bag[train.bag_ids[i]].push_back(i);

  Eigen::MatrixXd q(n, C);
  for (long i = 0; i < n; ++i) q.row(i) = train.proportions.row(train.bag_ids[i]);

  auto softmax_rows = [&](const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd s(logits.rows(), logits.cols());
    for (long i = 0; i < logits.rows(); ++i) {
      Eigen::RowVectorXd row = logits.row(i);
      double mx = row.maxCoeff();
      Eigen::RowVectorXd e = (row.array() - mx).exp();
      s.row(i) = e / e.sum();
    }
    return s;
  };

  // soft-label softmax regression; weights flattened row-major C x dim
  Objective obj = [&](const Eigen::VectorXd& w, Eigen::VectorXd& grad) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        wm(w.data(), C, dim);
    Eigen::MatrixXd logits = xb * wm.transpose();
    Eigen::MatrixXd s = softmax_rows(logits);
    double loss = 0.0;
    for (long i = 0; i < n; ++i)
      for (int c = 0; c < C; ++c)
        if (q(i, c) > 0) loss -= q(i, c) * std::log(std::max(s(i, c), 1e-300));
    loss /= static_cast<double>(n);
    Eigen::MatrixXd g = (s - q).transpose() * xb / static_cast<double>(n);  // C x dim
    // penalize weights, not biases (last column)
    for (int c = 0; c < C; ++c) {
      loss += reg * wm.row(c).head(dim - 1).squaredNorm() / (2.0 * n);
      g.row(c).head(dim - 1) += reg * wm.row(c).head(dim - 1) / static_cast<double>(n);
    }
    grad.resize(C * dim);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        grad.data(), C, dim) = g;
    return loss;
  };

  Eigen::VectorXd w = Eigen::VectorXd::Zero(C * dim);
  LLPModel model;
  double value = 0.0;
  long round = 0;
  for (; round < 50; ++round) {
    LbfgsOptions lopt;
    lopt.grad_tol = 1e-6;
    OptimResult r = lbfgs_minimize(obj, w, lopt);
    w = r.x;
    value = r.value;
    model.training_meta.objective_trace.push_back(value);

    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        wm(w.data(), C, dim);
    Eigen::MatrixXd s = softmax_rows(xb * wm.transpose());
    s = s.cwiseMax(1e-12);
    Eigen::MatrixXd q_new(n, C);
    for (long l = 0; l < L; ++l)
      calibrate_bag_multiclass(by_bag[l], s, train.proportions.row(l), q_new);

    const double delta = (q_new - q).cwiseAbs().maxCoeff();
    q = std::move(q_new);
    if (delta < 1e-4) {
      ++round;
      break;
    }
  }
  model.theta = w;
  model.training_meta.iterations = round;
  model.training_meta.final_loss = value;
  return model;
}

}  // namespace

LLPModel fit_emlr(const LlpView& train, const HyperParams& hp, std::uint64_t) {
  return train.n_classes() == 2 ? fit_emlr_binary(train, hp)
                                : fit_emlr_multiclass(train, hp);
}

}  // namespace llp::detail
