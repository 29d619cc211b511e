#include <algorithm>
#include <cmath>

#include "llp/errors.hpp"
#include "llp/rng.hpp"
#include "learners_impl.hpp"

namespace llp::detail {

namespace {

constexpr int kHidden = 100;
constexpr int kEpochs = 100;
constexpr double kProbFloor = 1e-12;

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd s(z.rows(), z.cols());
  for (long i = 0; i < z.rows(); ++i) {
    Eigen::RowVectorXd row = z.row(i);
    double mx = row.maxCoeff();
    Eigen::RowVectorXd e = (row.array() - mx).exp();
    s.row(i) = e / e.sum();
  }
  return s;
}

Eigen::MatrixXd init_weight(long rows, long cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));  // fan-in
  Eigen::MatrixXd w(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) w(i, j) = rng.uniform(-bound, bound);
  return w;
}

}  // namespace

LLPModel fit_dllp(const LlpView& train, const HyperParams& hp, std::uint64_t seed) {
  const double alpha = hyper(hp, "alpha", 1e-3);
  if (alpha <= 0.0) throw Error("dllp: alpha must be positive");
  const long d = train.features.cols();
  const int C = train.n_classes();
  const long L = train.n_bags();

  Rng rng(derive_seed(seed, "dllp-init"));
  LLPModel model;
  model.weights = {init_weight(kHidden, d, rng), init_weight(kHidden, kHidden, rng),
                   init_weight(C, kHidden, rng)};
  model.biases = {Eigen::VectorXd::Zero(kHidden), Eigen::VectorXd::Zero(kHidden),
                  Eigen::VectorXd::Zero(C)};

  std::vector<std::vector<long>> by_bag(L);
  for (long i = 0; i < train.n_items(); ++i) by_bag[train.bag_ids[i]].push_back(i);
  std::vector<Eigen::MatrixXd> bag_x(L);
  for (long l = 0; l < L; ++l) {
    bag_x[l].resize(static_cast<long>(by_bag[l].size()), d);
    for (std::size_t k = 0; k < by_bag[l].size(); ++k)
      bag_x[l].row(static_cast<long>(k)) = train.features.row(by_bag[l][k]);
  }

  double epoch_loss = 0.0;
  for (int epoch = 0; epoch < kEpochs; ++epoch) {
    epoch_loss = 0.0;
    for (long l = 0; l < L; ++l) {  // one bag per step, round-robin
      const Eigen::MatrixXd& x = bag_x[l];
      const long n = x.rows();
      const Eigen::RowVectorXd p = train.proportions.row(l);

      // forward
      Eigen::MatrixXd z1 = (x * model.weights[0].transpose()).rowwise() +
                           model.biases[0].transpose();
      Eigen::MatrixXd h1 = z1.cwiseMax(0.0);
      Eigen::MatrixXd z2 = (h1 * model.weights[1].transpose()).rowwise() +
                           model.biases[1].transpose();
      Eigen::MatrixXd h2 = z2.cwiseMax(0.0);
      Eigen::MatrixXd z3 = (h2 * model.weights[2].transpose()).rowwise() +
                           model.biases[2].transpose();
      Eigen::MatrixXd s = softmax_rows(z3);
      Eigen::RowVectorXd p_hat = s.colwise().mean().cwiseMax(kProbFloor);

      double loss = 0.0;
      for (int c = 0; c < C; ++c)
        if (p[c] > 0) loss += p[c] * std::log(p[c] / p_hat[c]);
      epoch_loss += loss;

      // backward: dKL/dp_hat = -p/p_hat, shared across the bag mean
      Eigen::RowVectorXd dp_hat = Eigen::RowVectorXd::Zero(C);
      for (int c = 0; c < C; ++c)
        if (p[c] > 0) dp_hat[c] = -p[c] / p_hat[c];
      Eigen::MatrixXd ds = dp_hat.replicate(n, 1) / static_cast<double>(n);
      Eigen::MatrixXd dz3(n, C);
      for (long i = 0; i < n; ++i) {
        const double dot = ds.row(i).dot(s.row(i));
        dz3.row(i) = s.row(i).cwiseProduct((ds.row(i).array() - dot).matrix());
      }
      Eigen::MatrixXd dh2 = dz3 * model.weights[2];
      Eigen::MatrixXd dz2 = (z2.array() > 0.0).select(dh2, 0.0);
      Eigen::MatrixXd dh1 = dz2 * model.weights[1];
      Eigen::MatrixXd dz1 = (z1.array() > 0.0).select(dh1, 0.0);

      model.weights[2] -= alpha * (dz3.transpose() * h2);
      model.biases[2] -= alpha * dz3.colwise().sum().transpose();
      model.weights[1] -= alpha * (dz2.transpose() * h1);
      model.biases[1] -= alpha * dz2.colwise().sum().transpose();
      model.weights[0] -= alpha * (dz1.transpose() * x);
      model.biases[0] -= alpha * dz1.colwise().sum().transpose();
    }
    model.training_meta.objective_trace.push_back(epoch_loss);
  }
  model.training_meta.iterations = kEpochs;
  model.training_meta.final_loss = epoch_loss;
  model.theta = Eigen::VectorXd::Zero(0);
  return model;
}

}  // namespace llp::detail
