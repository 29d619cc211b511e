#pragma once

#include <cstdint>
#include <limits>

#include "llp/cluster.hpp"
#include "llp/dataset.hpp"

namespace llp {

// Dense Q x C x L probability array for Pr(Z, Y, B).
struct JointTable3D {
  long q = 0, c = 0, l = 0;
  std::vector<double> values;  // indexed [z][y][b], b fastest

  JointTable3D() = default;
  JointTable3D(long q_, long c_, long l_, double fill = 0.0)
      : q(q_), c(c_), l(l_), values(static_cast<std::size_t>(q_ * c_ * l_), fill) {}

  double& at(long z, long y, long b) { return values[(z * c + y) * l + b]; }
  double at(long z, long y, long b) const { return values[(z * c + y) * l + b]; }

  double total() const;
  Eigen::MatrixXd zy_marginal() const;  // Q x C
  Eigen::MatrixXd yb_marginal() const;  // C x L
  void validate(double tol = 1e-9) const;
};

// Conditional bag-assignment rule Pr(B | .). The table has one row per
// conditioning value: 1 (ByConstant), C (ByLabel), Q (ByCluster) or
// Q*C (ByClusterAndLabel, row index z*C+y); L columns, each row stochastic.
struct AssignmentRule {
  enum class Kind { ByConstant, ByLabel, ByCluster, ByClusterAndLabel };
  Kind kind = Kind::ByConstant;
  Eigen::MatrixXd table;

  void validate(double tol = 1e-9) const;
};

struct PgdOptions {
  double alpha = 0.01;
  long max_iter = 10000;
  double tol = 1e-5;
  int restarts = 5;
};

// Minimizes ||p_yb - p_yz * A||_F over row-stochastic A (Q x L) by
// projected gradient descent: gradient step, clip entries to [0,1],
// renormalize rows. Best of `restarts` uniform-random starts.
StochasticMatrix pgd_solve(const Eigen::MatrixXd& p_yz, const Eigen::MatrixXd& p_yb,
                           const PgdOptions& opt, std::uint64_t seed,
                           double* residual_out = nullptr);

double pgd_residual(const Eigen::MatrixXd& p_yz, const Eigen::MatrixXd& p_yb,
                    const Eigen::MatrixXd& a);

struct IpfOptions {
  long max_iter = 1000;
  double tol = 1e-8;
};

// Iterative proportional fitting of a Q x C x L table against the (Z,Y)
// and (Y,B) two-dimensional marginals. The one-dimensional marginals are
// implied by those and are only checked for consistency (within 1e-6).
JointTable3D ipf_fit(const JointTable3D& init, const Eigen::MatrixXd& marginal_zy,
                     const Eigen::MatrixXd& marginal_yb, const Eigen::VectorXd& marginal_z,
                     const Eigen::VectorXd& marginal_y, const Eigen::VectorXd& marginal_b,
                     const IpfOptions& opt = {}, double* max_dev_out = nullptr);

struct GenOptions {
  PgdOptions pgd;
  IpfOptions ipf;
  double residual_warn_threshold = 0.05;  // Frobenius, Intermediate only
};

// Target joint Pr(Y = c, B = l) implied by the spec: p[l][c] * s[l] / N.
Eigen::MatrixXd target_yb(const GenSpec& spec);

// Exact-mode per-(bag, class) integer targets for the Simple variant:
// largest-remainder rounding of p[l][c]*s[l] within each class column
// (column sums match the class totals), then a minimal marginal repair so
// row sums match the bag sizes. Throws InfeasibleError when a class
// budget is violated beyond the rounding slack 0.5*L.
Eigen::MatrixXi simple_exact_targets(const GenSpec& spec,
                                     const std::vector<long>& class_counts);

LLPInstance generate_naive(std::shared_ptr<const BaseDataset> ds, const GenSpec& spec);
LLPInstance generate_simple(std::shared_ptr<const BaseDataset> ds, const GenSpec& spec);
LLPInstance generate_intermediate(std::shared_ptr<const BaseDataset> ds, const GenSpec& spec,
                                  const Clustering& cl, const GenOptions& opt = {});
LLPInstance generate_hard(std::shared_ptr<const BaseDataset> ds, const GenSpec& spec,
                          const Clustering& cl, const GenOptions& opt = {});

// Dispatch on spec.variant; cl required for Intermediate/Hard.
LLPInstance generate(std::shared_ptr<const BaseDataset> ds, const GenSpec& spec,
                     const Clustering* cl = nullptr, const GenOptions& opt = {});

}  // namespace llp
