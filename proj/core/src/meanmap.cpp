#include <algorithm>
#include <cmath>
#include <numeric>

#include "llp/errors.hpp"
#include "llp/optim.hpp"
#include "llp/rounding.hpp"
#include "learners_impl.hpp"

namespace llp::detail {

namespace {

struct BagStats {
  Eigen::MatrixXd means;   // L x (d+1), per-bag means of [x;1]
  Eigen::VectorXd p;       // class-1 proportion per bag
  Eigen::VectorXd weight;  // n_l / N
  std::vector<std::vector<long>> members;
};

BagStats bag_stats(const LlpView& train, const Eigen::MatrixXd& xb) {
  const long L = train.n_bags();
  BagStats s;
  s.means = Eigen::MatrixXd::Zero(L, xb.cols());
  s.p.resize(L);
  s.weight.resize(L);
  s.members.resize(L);
  for (long i = 0; i < xb.rows(); ++i) {
    s.means.row(train.bag_ids[i]) += xb.row(i);
    s.members[train.bag_ids[i]].push_back(i);
  }
  for (long l = 0; l < L; ++l) {
    if (s.members[l].empty()) throw Error("mean map: empty bag " + std::to_string(l));
    s.means.row(l) /= static_cast<double>(s.members[l].size());
    s.p[l] = train.proportions(l, 1);
    s.weight[l] = static_cast<double>(s.members[l].size()) / static_cast<double>(xb.rows());
  }
  return s;
}

Eigen::VectorXd mu_from_class_means(const BagStats& s, const Eigen::MatrixXd& b_pos,
                                    const Eigen::MatrixXd& b_neg) {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(b_pos.cols());
  for (long l = 0; l < s.p.size(); ++l) {
    const long r = b_pos.rows() == 1 ? 0 : l;
    mu += s.weight[l] *
          (s.p[l] * b_pos.row(r) - (1.0 - s.p[l]) * b_neg.row(r)).transpose();
  }
  return mu;
}

}  // namespace

Eigen::VectorXd mean_map_theta(const Eigen::MatrixXd& xb, const Eigen::VectorXd& mu_hat,
                               double lambda, double* final_value) {
  const double n = static_cast<double>(xb.rows());
  const Eigen::VectorXd v = xb.colwise().mean().transpose() + mu_hat;
  Objective obj = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    Eigen::VectorXd a = xb * theta;
    double loss = 0.0;
    Eigen::VectorXd sig(a.size());
    for (long i = 0; i < a.size(); ++i) {
      loss += log1pexp(a[i]);
      sig[i] = sigmoid(a[i]);
    }
    loss = loss / n - 0.5 * theta.dot(v) + lambda * theta.squaredNorm() / (2.0 * n);
    grad = xb.transpose() * sig / n - 0.5 * v + lambda * theta / n;
    return loss;
  };
  LbfgsOptions lopt;
  lopt.grad_tol = 1e-6;
  OptimResult r = lbfgs_minimize(obj, Eigen::VectorXd::Zero(xb.cols()), lopt);
  if (final_value) *final_value = r.value;
  return r.x;
}

LLPModel fit_mm(const LlpView& train, const HyperParams& hp, std::uint64_t) {
  const double lambda = hyper(hp, "lambda", 1.0);
  const Eigen::MatrixXd xb = with_bias(train.features);
  BagStats s = bag_stats(train, xb);

  // homogeneity model: bag mean = p * b+ + (1-p) * b-
  Eigen::MatrixXd pi(s.p.size(), 2);
  pi.col(0) = s.p;
  pi.col(1) = Eigen::VectorXd::Ones(s.p.size()) - s.p;
  Eigen::Matrix2d g = pi.transpose() * pi;
  if (lambda == 0.0) {
    const double scale = std::max(1.0, g.trace());
    if (std::abs(g.determinant()) < 1e-10 * scale * scale)
      throw Error("mm: normal equations singular (all bag proportions equal and lambda=0)");
  }
  Eigen::Matrix2d reg = g + lambda * Eigen::Matrix2d::Identity();
  Eigen::MatrixXd b = reg.ldlt().solve(pi.transpose() * s.means);  // 2 x (d+1)
  if (!b.allFinite()) throw Error("mm: class-mean solve failed");

  Eigen::VectorXd mu = mu_from_class_means(s, b.row(0), b.row(1));

  LLPModel model;
  double value = 0.0;
  model.theta = mean_map_theta(xb, mu, lambda, &value);
  model.training_meta.final_loss = value;
  model.training_meta.iterations = 1;
  return model;
}

LLPModel fit_lmm(const LlpView& train, const HyperParams& hp, std::uint64_t) {
  const double lambda = hyper(hp, "lambda", 1.0);
  const double gamma = hyper(hp, "gamma", 1.0);
  const double sigma = hyper(hp, "sigma", 1.0);
  if (sigma <= 0.0) throw Error("lmm: sigma must be positive");
  const Eigen::MatrixXd xb = with_bias(train.features);
  BagStats s = bag_stats(train, xb);
  const long L = s.p.size();

  // bag-similarity Laplacian on bag means
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(L, L);
  for (long a = 0; a < L; ++a)
    for (long b2 = a + 1; b2 < L; ++b2) {
      double d2 = (s.means.row(a) - s.means.row(b2)).squaredNorm();
      w(a, b2) = w(b2, a) = std::exp(-d2 / (2.0 * sigma * sigma));
    }
  Eigen::MatrixXd lap = -w;
  for (long a = 0; a < L; ++a) lap(a, a) = w.row(a).sum();

  // per-bag class means stacked [b_1+ .. b_L+ ; b_1- .. b_L-]
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(L, 2 * L);
  for (long l = 0; l < L; ++l) {
    pi(l, l) = s.p[l];
    pi(l, L + l) = 1.0 - s.p[l];
  }
  Eigen::MatrixXd lap2 = Eigen::MatrixXd::Zero(2 * L, 2 * L);
  lap2.topLeftCorner(L, L) = lap;
  lap2.bottomRightCorner(L, L) = lap;

  Eigen::MatrixXd system = pi.transpose() * pi + gamma * lap2;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-12)
    throw Error("lmm: class-mean system singular (degenerate proportions)");
  Eigen::MatrixXd b = ldlt.solve(pi.transpose() * s.means);  // 2L x (d+1)
  if (!b.allFinite()) throw Error("lmm: class-mean solve failed");

  Eigen::VectorXd mu = mu_from_class_means(s, b.topRows(L), b.bottomRows(L));

  LLPModel model;
  double value = 0.0;
  model.theta = mean_map_theta(xb, mu, lambda, &value);
  model.training_meta.final_loss = value;
  model.training_meta.iterations = 1;
  return model;
}

LLPModel fit_amm(const LlpView& train, const HyperParams& hp, std::uint64_t seed) {
  const double lambda = hyper(hp, "lambda", 1.0);
  const Eigen::MatrixXd xb = with_bias(train.features);
  BagStats s = bag_stats(train, xb);
  const long L = s.p.size();
  const long n = xb.rows();

  HyperParams mm_hp{{"lambda", lambda}};
  LLPModel model = fit_mm(train, mm_hp, seed);
  model.training_meta.objective_trace.clear();

  std::vector<long> positives(L);
  for (long l = 0; l < L; ++l) {
    positives[l] = std::clamp<long>(
        ceil_tol(s.p[l] * static_cast<double>(s.members[l].size())), 0,
        static_cast<long>(s.members[l].size()));
  }

  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd q_prev = Eigen::VectorXd::Constant(n, -1.0);
  long rounds = 0;
  double value = model.training_meta.final_loss;
  for (; rounds < 20; ++rounds) {
    // optimal within-bag assignment at the current theta: the top-k items
    // by score take class 1 (ties by item index)
    Eigen::VectorXd score = xb * model.theta;
    for (long l = 0; l < L; ++l) {
      std::vector<long> order = s.members[l];
      std::stable_sort(order.begin(), order.end(),
                       [&](long a, long b) { return score[a] > score[b]; });
      for (std::size_t k = 0; k < order.size(); ++k)
        q[order[k]] = k < static_cast<std::size_t>(positives[l]) ? 1.0 : 0.0;
    }
    if ((q - q_prev).cwiseAbs().maxCoeff() == 0.0) break;
    q_prev = q;
    model.theta = soft_logistic_fit(xb, q, lambda, true, model.theta, &value);
    model.training_meta.objective_trace.push_back(value);
  }
  model.training_meta.iterations = rounds;
  model.training_meta.final_loss = value;
  return model;
}

}  // namespace llp::detail
