#include "llp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "llp/errors.hpp"
#include "llp/rng.hpp"
#include "llp/rounding.hpp"

namespace llp {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Naive: return "naive";
    case Variant::Simple: return "simple";
    case Variant::Intermediate: return "intermediate";
    case Variant::Hard: return "hard";
  }
  return "?";
}

const char* to_string(AssignmentMode m) {
  return m == AssignmentMode::Exact ? "exact" : "sampled";
}

Variant variant_from_string(const std::string& s) {
  if (s == "naive") return Variant::Naive;
  if (s == "simple") return Variant::Simple;
  if (s == "intermediate") return Variant::Intermediate;
  if (s == "hard") return Variant::Hard;
  throw Error("unknown variant: " + s);
}

AssignmentMode assignment_mode_from_string(const std::string& s) {
  if (s == "exact") return AssignmentMode::Exact;
  if (s == "sampled") return AssignmentMode::Sampled;
  throw Error("unknown assignment mode: " + s);
}

std::vector<long> BaseDataset::class_counts() const {
  std::vector<long> counts(n_classes, 0);
  for (int y : labels) ++counts[y];
  return counts;
}

Eigen::VectorXd BaseDataset::class_frequencies() const {
  auto counts = class_counts();
  Eigen::VectorXd f(n_classes);
  for (int c = 0; c < n_classes; ++c)
    f[c] = static_cast<double>(counts[c]) / static_cast<double>(n_items());
  return f;
}

void BaseDataset::validate(bool require_all_classes) const {
  if (n_items() < 1 || n_features() < 1) throw Error("dataset: empty feature matrix");
  if (static_cast<long>(labels.size()) != n_items())
    throw Error("dataset: labels/features length mismatch");
  if (n_classes < 2) throw Error("dataset: fewer than two classes");
  if (!feature_names.empty() &&
      static_cast<long>(feature_names.size()) != n_features())
    throw Error("dataset: feature_names length mismatch");
  if (!features.allFinite()) throw Error("dataset: non-finite feature value");
  std::vector<bool> seen(n_classes, false);
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw Error("dataset: label out of range");
    seen[y] = true;
  }
  if (require_all_classes)
    for (int c = 0; c < n_classes; ++c)
      if (!seen[c]) throw Error("dataset: class " + std::to_string(c) + " has no items");
}

long GenSpec::n_items() const {
  return std::accumulate(bag_sizes.begin(), bag_sizes.end(), 0L);
}

void GenSpec::validate(long n, int n_classes) const {
  if (n_bags < 2) throw Error("gen spec: n_bags must be >= 2");
  if (static_cast<int>(bag_sizes.size()) != n_bags)
    throw Error("gen spec: bag_sizes length != n_bags");
  for (long s : bag_sizes)
    if (s < 1) throw Error("gen spec: bag size must be positive");
  if (n_items() != n)
    throw Error("gen spec: bag sizes sum to " + std::to_string(n_items()) +
                ", dataset has " + std::to_string(n) + " items");
  if (proportions.rows() != n_bags || proportions.cols() != n_classes)
    throw Error("gen spec: proportions must be n_bags x n_classes");
  for (long l = 0; l < proportions.rows(); ++l) {
    double row_sum = proportions.row(l).sum();
    if (std::abs(row_sum - 1.0) > 1e-9)
      throw Error("gen spec: proportions row " + std::to_string(l) + " sums to " +
                  std::to_string(row_sum));
    if ((proportions.row(l).array() < -1e-12).any())
      throw Error("gen spec: negative proportion in row " + std::to_string(l));
  }
  if (n_clusters < 1) throw Error("gen spec: n_clusters must be >= 1");
}

void StochasticMatrix::validate(double tol) const {
  if ((entries.array() < -tol).any() || (entries.array() > 1.0 + tol).any())
    throw Error("stochastic matrix: entry outside [0,1]");
  for (long r = 0; r < entries.rows(); ++r)
    if (std::abs(entries.row(r).sum() - 1.0) > tol)
      throw Error("stochastic matrix: row " + std::to_string(r) + " does not sum to 1");
}

Eigen::MatrixXd empirical_proportions(const std::vector<int>& bag_ids,
                                      const std::vector<int>& labels, long n_bags,
                                      int n_classes) {
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n_bags, n_classes);
  for (std::size_t i = 0; i < bag_ids.size(); ++i) counts(bag_ids[i], labels[i]) += 1.0;
  for (long l = 0; l < n_bags; ++l) {
    double total = counts.row(l).sum();
    if (total > 0) counts.row(l) /= total;
  }
  return counts;
}

LLPInstance make_instance(std::shared_ptr<const BaseDataset> base, std::vector<int> bag_ids,
                          GenSpec spec) {
  LLPInstance inst;
  inst.base = std::move(base);
  inst.bag_ids = std::move(bag_ids);
  inst.spec = std::move(spec);
  const long L = inst.spec.n_bags;
  const int C = inst.base->n_classes;
  if (static_cast<long>(inst.bag_ids.size()) != inst.base->n_items())
    throw Error("instance: bag_ids length mismatch");
  inst.realized_sizes.assign(L, 0);
  for (int b : inst.bag_ids) {
    if (b < 0 || b >= L) throw Error("instance: bag id out of range");
    ++inst.realized_sizes[b];
  }
  for (long l = 0; l < L; ++l)
    if (inst.realized_sizes[l] == 0)
      throw Error("instance: bag " + std::to_string(l) + " is empty");
  inst.realized_proportions =
      empirical_proportions(inst.bag_ids, inst.base->labels, L, C);
  return inst;
}

void LLPInstance::validate() const {
  base->validate(false);
  if (n_items() != base->n_items()) throw Error("instance: item count mismatch");
  long total = std::accumulate(realized_sizes.begin(), realized_sizes.end(), 0L);
  if (total != n_items()) throw Error("instance: realized sizes do not sum to N");
  for (long s : realized_sizes)
    if (s == 0) throw Error("instance: empty bag");
  Eigen::MatrixXd expected =
      empirical_proportions(bag_ids, base->labels, n_bags(), n_classes());
  if ((realized_proportions - expected).cwiseAbs().maxCoeff() > 1e-12)
    throw Error("instance: realized_proportions inconsistent with labels");
}

BaseDataset scale_features(const BaseDataset& ds) {
  BaseDataset out = ds;
  for (long j = 0; j < ds.n_features(); ++j) {
    double lo = ds.features.col(j).minCoeff();
    double hi = ds.features.col(j).maxCoeff();
    if (hi > lo) {
      double scale = 2.0 / (hi - lo);
      out.features.col(j) = (ds.features.col(j).array() - lo) * scale - 1.0;
    } else {
      out.features.col(j).setZero();  // constant column
    }
  }
  return out;
}

BaseDataset merge_classes(const BaseDataset& ds, const std::map<int, int>& mapping) {
  int new_c = 0;
  for (int c = 0; c < ds.n_classes; ++c) {
    auto it = mapping.find(c);
    if (it == mapping.end())
      throw Error("merge_classes: class " + std::to_string(c) + " unmapped");
    if (it->second < 0) throw Error("merge_classes: negative target class");
    new_c = std::max(new_c, it->second + 1);
  }
  std::vector<bool> hit(new_c, false);
  for (const auto& [from, to] : mapping)
    if (from >= 0 && from < ds.n_classes) hit[to] = true;
  for (int c = 0; c < new_c; ++c)
    if (!hit[c])
      throw Error("merge_classes: image skips class " + std::to_string(c));
  if (new_c < 2) throw Error("merge_classes: result has a single class");

  BaseDataset out = ds;
  out.n_classes = new_c;
  for (auto& y : out.labels) y = mapping.at(y);
  out.validate();
  return out;
}

std::pair<LLPInstance, LLPInstance> train_test_split(const LLPInstance& inst,
                                                     double train_fraction,
                                                     std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error("train_test_split: fraction must be in (0,1)");
  const long L = inst.n_bags();
  for (long l = 0; l < L; ++l)
    if (inst.realized_sizes[l] < 2)
      throw Error("train_test_split: bag " + std::to_string(l) + " has fewer than 2 items");

  // per-bag train counts: largest remainder against the global train total
  std::vector<double> quotas(L);
  for (long l = 0; l < L; ++l)
    quotas[l] = train_fraction * static_cast<double>(inst.realized_sizes[l]);
  long train_total = static_cast<long>(
      std::llround(train_fraction * static_cast<double>(inst.n_items())));
  std::vector<long> train_counts = largest_remainder(quotas, train_total);
  for (long l = 0; l < L; ++l)
    if (train_counts[l] == 0 || train_counts[l] == inst.realized_sizes[l])
      throw Error("train_test_split: bag " + std::to_string(l) +
                  " would be empty on one side");

  std::vector<std::vector<long>> by_bag(L);
  for (long i = 0; i < inst.n_items(); ++i) by_bag[inst.bag_ids[i]].push_back(i);

  Rng rng(derive_seed(seed, "train_test_split"));
  std::vector<char> in_train(inst.n_items(), 0);
  for (long l = 0; l < L; ++l) {
    rng.shuffle(by_bag[l]);
    for (long k = 0; k < train_counts[l]; ++k) in_train[by_bag[l][k]] = 1;
  }

  auto take = [&](bool train_side) {
    std::vector<long> rows;
    for (long i = 0; i < inst.n_items(); ++i)
      if ((in_train[i] != 0) == train_side) rows.push_back(i);
    auto sub = std::make_shared<BaseDataset>();
    sub->features.resize(static_cast<long>(rows.size()), inst.base->n_features());
    sub->labels.reserve(rows.size());
    std::vector<int> bag_ids;
    bag_ids.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      sub->features.row(static_cast<long>(k)) = inst.base->features.row(rows[k]);
      sub->labels.push_back(inst.base->labels[rows[k]]);
      bag_ids.push_back(inst.bag_ids[rows[k]]);
    }
    sub->feature_names = inst.base->feature_names;
    sub->n_classes = inst.base->n_classes;
    sub->label_name = inst.base->label_name;
    GenSpec spec = inst.spec;
    spec.bag_sizes.assign(L, 0);
    for (int b : bag_ids) ++spec.bag_sizes[b];
    LLPInstance out = make_instance(std::move(sub), std::move(bag_ids), std::move(spec));
    out.spec.proportions = out.realized_proportions;
    out.meta = inst.meta;
    return out;
  };

  return {take(true), take(false)};
}

}  // namespace llp
