#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "llp/dataset.hpp"
#include "llp/tree.hpp"

namespace llp {

enum class CiDecision { Independent, Dependent };

struct TestOutcome {
  std::string test_name;
  double p_value = 1.0;
  double statistic = 0.0;
  CiDecision decision = CiDecision::Independent;
};

struct CiTestOptions {
  int n_splits = 16;
  TreeOptions tree;  // depth 8, min leaf 5
};

// Pearson chi-square test of Y vs B on the bags x classes contingency
// table; p-value from the chi-square upper tail.
TestOutcome chi_square_yb(const LLPInstance& inst, const std::vector<int>& labels,
                          double alpha);

// FCIT-style predictive (conditional) independence test. For each of
// n_splits random 50/50 train/eval splits, a regression tree predicting
// `target` from [conditioning | predictors] is compared with one using
// conditioning alone; with empty conditioning the reduced model sees a
// within-split permutation of the predictors instead. A one-sided paired
// t-test on the per-split eval MSEs gives the p-value (small p = the
// predictors help = Dependent).
TestOutcome predictive_ci_test(const Eigen::MatrixXd& target,
                               const Eigen::MatrixXd& predictors,
                               const Eigen::MatrixXd& conditioning, int n_splits,
                               std::uint64_t seed, double alpha,
                               const CiTestOptions& opt = {});

Eigen::MatrixXd one_hot(const std::vector<int>& values, int n_values);

struct VariantReport {
  double alpha = 0.05;
  std::array<TestOutcome, 5> outcomes;  // Y_indep_B, X_indep_B, X_indep_Y_given_B,
                                        // X_indep_B_given_Y, Y_indep_B_given_X
  std::optional<Variant> inferred_variant;  // nullopt = Unrecognized

  std::string inferred_name() const;
};

// Expected decision pattern for a variant, in the order above
// (true = Independent).
std::array<bool, 5> variant_pattern(Variant v);

// Runs the five tests and matches the decisions against the four known
// dependence structures; X and Y are assumed dependent throughout.
VariantReport verify_variant(const LLPInstance& inst, const std::vector<int>& labels,
                             double alpha, std::uint64_t seed,
                             const CiTestOptions& opt = {});

std::string variant_report_json(const VariantReport& report);

}  // namespace llp
