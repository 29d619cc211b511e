#pragma once

#include <Eigen/Dense>
#include <vector>

namespace llp {

struct TreeOptions {
  int max_depth = 8;
  long min_leaf = 5;
};

// Depth-bounded CART regression tree with multi-output targets (sum of
// per-dimension squared errors as the split criterion). Deterministic:
// ties between splits go to the lowest feature index / threshold.
class RegressionTree {
 public:
  void fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
           const TreeOptions& opt = {});
  Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const;

  long node_count() const { return static_cast<long>(nodes_.size()); }

 private:
  struct Node {
    int feature = -1;  // -1 = leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    Eigen::VectorXd value;
  };

  int build(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, std::vector<long>& rows,
            int depth, const TreeOptions& opt);

  std::vector<Node> nodes_;
};

// Mean squared error between targets and predictions, averaged over items
// and output dimensions.
double mse(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred);

}  // namespace llp
