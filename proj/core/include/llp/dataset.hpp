#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace llp {

enum class Variant { Naive, Simple, Intermediate, Hard };
enum class AssignmentMode { Exact, Sampled };

const char* to_string(Variant v);
const char* to_string(AssignmentMode m);
Variant variant_from_string(const std::string& s);
AssignmentMode assignment_mode_from_string(const std::string& s);

// Labeled feature matrix used as raw material for LLP generation.
// Labels are dense class ids in {0..n_classes-1}.
struct BaseDataset {
  Eigen::MatrixXd features;  // one row per item
  std::vector<int> labels;
  std::vector<std::string> feature_names;
  int n_classes = 0;
  std::string label_name = "label";

  long n_items() const { return features.rows(); }
  long n_features() const { return features.cols(); }

  std::vector<long> class_counts() const;
  Eigen::VectorXd class_frequencies() const;  // length n_classes, sums to 1

  // Checks finiteness, label range and shape agreement. When
  // require_all_classes is set, every class id must occur at least once
  // (ingestion contract; row subsets taken later may drop a class).
  void validate(bool require_all_classes = true) const;
};

// Full recipe for one generated LLP instance.
struct GenSpec {
  Variant variant = Variant::Naive;
  int n_bags = 2;
  std::vector<long> bag_sizes;
  Eigen::MatrixXd proportions;  // n_bags x C, rows sum to 1
  int n_clusters = 1;           // Intermediate/Hard only
  AssignmentMode assignment_mode = AssignmentMode::Exact;
  std::uint64_t seed = 0;

  long n_items() const;
  void validate(long n_items, int n_classes) const;
};

// Generator-side diagnostics attached to an instance.
struct GenMeta {
  double pgd_residual = std::numeric_limits<double>::quiet_NaN();
  double ipf_max_dev = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> warnings;
};

// Items + bag assignment + the proportion matrix realized by the
// ground-truth labels.
struct LLPInstance {
  std::shared_ptr<const BaseDataset> base;
  std::vector<int> bag_ids;                // values in {0..n_bags-1}
  Eigen::MatrixXd realized_proportions;    // n_bags x C
  std::vector<long> realized_sizes;
  GenSpec spec;
  GenMeta meta;

  long n_items() const { return static_cast<long>(bag_ids.size()); }
  long n_bags() const { return static_cast<long>(realized_sizes.size()); }
  int n_classes() const { return base->n_classes; }

  void validate() const;
};

// Matrix with row-stochastic entries (conditional probability tables).
struct StochasticMatrix {
  Eigen::MatrixXd entries;

  long rows() const { return entries.rows(); }
  long cols() const { return entries.cols(); }
  void validate(double tol = 1e-9) const;
};

// Builds an instance from a bag assignment: computes realized sizes and
// proportions from ground truth and checks every bag is non-empty.
LLPInstance make_instance(std::shared_ptr<const BaseDataset> base, std::vector<int> bag_ids,
                          GenSpec spec);

// Recomputes the n_bags x C empirical proportion matrix from labels.
Eigen::MatrixXd empirical_proportions(const std::vector<int>& bag_ids,
                                      const std::vector<int>& labels, long n_bags,
                                      int n_classes);

BaseDataset scale_features(const BaseDataset& ds);
BaseDataset merge_classes(const BaseDataset& ds, const std::map<int, int>& mapping);

// Random split stratified by bag (largest-remainder per-bag train counts).
// Both sides recompute their proportion matrices from their own labels.
std::pair<LLPInstance, LLPInstance> train_test_split(const LLPInstance& inst,
                                                     double train_fraction,
                                                     std::uint64_t seed);

}  // namespace llp
