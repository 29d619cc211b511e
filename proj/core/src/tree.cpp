#include "llp/tree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "llp/errors.hpp"

namespace llp {

namespace {

struct BestSplit {
  int feature = -1;
  double threshold = 0.0;
  double score = std::numeric_limits<double>::infinity();  // child SSE sum
  long left_count = 0;
};

// Scans sorted feature values; returns the split minimizing the summed
// child SSE, computed incrementally from running sums per output dim.
void scan_feature(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                  const std::vector<long>& rows, std::vector<long>& order, int feature,
                  long min_leaf, BestSplit& best) {
  const long n = static_cast<long>(rows.size());
  const long m = y.cols();
  order.assign(rows.begin(), rows.end());
  std::stable_sort(order.begin(), order.end(), [&](long a, long b) {
    return x(a, feature) < x(b, feature);
  });

  Eigen::VectorXd sum_left = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sq_left = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sum_total = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sq_total = Eigen::VectorXd::Zero(m);
  for (long i = 0; i < n; ++i) {
    sum_total += y.row(order[i]);
    sq_total += y.row(order[i]).array().square().matrix();
  }

  for (long i = 0; i < n - 1; ++i) {
    sum_left += y.row(order[i]);
    sq_left += y.row(order[i]).array().square().matrix();
    const long nl = i + 1, nr = n - nl;
    if (nl < min_leaf) continue;
    if (nr < min_leaf) break;
    const double lo = x(order[i], feature), hi = x(order[i + 1], feature);
    if (lo == hi) continue;  // cannot split between equal values
    double sse = 0.0;
    for (long d = 0; d < m; ++d) {
      const double sl = sum_left[d], st = sum_total[d];
      const double sr = st - sl;
      sse += sq_left[d] - sl * sl / nl;
      sse += (sq_total[d] - sq_left[d]) - sr * sr / nr;
    }
    if (sse < best.score - 1e-12) {
      best.score = sse;
      best.feature = feature;
      best.threshold = 0.5 * (lo + hi);
      best.left_count = nl;
    }
  }
}

}  // namespace

int RegressionTree::build(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                          std::vector<long>& rows, int depth, const TreeOptions& opt) {
  const long n = static_cast<long>(rows.size());
  const long m = y.cols();
  Node node;
  node.value = Eigen::VectorXd::Zero(m);
  for (long r : rows) node.value += y.row(r);
  node.value /= static_cast<double>(n);

  bool splittable = depth < opt.max_depth && n >= 2 * opt.min_leaf;
  if (splittable) {
    // pure node: nothing to gain
    double spread = 0.0;
    for (long r : rows) spread += (y.row(r).transpose() - node.value).squaredNorm();
    if (spread <= 1e-12) splittable = false;
  }

  BestSplit best;
  if (splittable) {
    std::vector<long> scratch;
    for (int f = 0; f < x.cols(); ++f)
      scan_feature(x, y, rows, scratch, f, opt.min_leaf, best);
  }

  const int idx = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(node));
  if (best.feature < 0) return idx;

  std::vector<long> left, right;
  left.reserve(best.left_count);
  right.reserve(n - best.left_count);
  for (long r : rows)
    (x(r, best.feature) <= best.threshold ? left : right).push_back(r);
  if (left.empty() || right.empty()) return idx;  // degenerate numeric edge

  nodes_[idx].feature = best.feature;
  nodes_[idx].threshold = best.threshold;
  rows.clear();
  rows.shrink_to_fit();
  const int l = build(x, y, left, depth + 1, opt);
  nodes_[idx].left = l;
  const int r = build(x, y, right, depth + 1, opt);
  nodes_[idx].right = r;
  return idx;
}

void RegressionTree::fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                         const TreeOptions& opt) {
  if (x.rows() != y.rows() || x.rows() == 0) throw Error("tree: shape mismatch");
  nodes_.clear();
  std::vector<long> rows(static_cast<std::size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  build(x, y, rows, 0, opt);
}

Eigen::MatrixXd RegressionTree::predict(const Eigen::MatrixXd& x) const {
  if (nodes_.empty()) throw Error("tree: predict before fit");
  Eigen::MatrixXd out(x.rows(), nodes_[0].value.size());
  for (long i = 0; i < x.rows(); ++i) {
    int cur = 0;
    while (nodes_[cur].feature >= 0)
      cur = x(i, nodes_[cur].feature) <= nodes_[cur].threshold ? nodes_[cur].left
                                                               : nodes_[cur].right;
    out.row(i) = nodes_[cur].value;
  }
  return out;
}

double mse(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred) {
  if (truth.rows() != pred.rows() || truth.cols() != pred.cols())
    throw Error("mse: shape mismatch");
  return (truth - pred).squaredNorm() /
         static_cast<double>(truth.rows() * truth.cols());
}

}  // namespace llp
