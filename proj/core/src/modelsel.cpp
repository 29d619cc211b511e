#include "llp/modelsel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "llp/errors.hpp"
#include "llp/parallel.hpp"
#include "llp/rng.hpp"
#include "llp/rounding.hpp"

namespace llp {

const char* to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::FullBagKFold: return "full-bag-k-fold";
    case StrategyKind::SplitBagKFold: return "split-bag-k-fold";
    case StrategyKind::SplitBagShuffle: return "split-bag-shuffle";
    case StrategyKind::SplitBagBootstrap: return "split-bag-bootstrap";
  }
  return "?";
}

StrategyKind strategy_from_string(const std::string& s) {
  if (s == "full-bag-k-fold" || s == "full-bag-kfold") return StrategyKind::FullBagKFold;
  if (s == "split-bag-k-fold" || s == "split-bag-kfold") return StrategyKind::SplitBagKFold;
  if (s == "split-bag-shuffle") return StrategyKind::SplitBagShuffle;
  if (s == "split-bag-bootstrap") return StrategyKind::SplitBagBootstrap;
  throw Error("unknown selection strategy: " + s);
}

void SelectionStrategy::validate(long n_bags) const {
  switch (kind) {
    case StrategyKind::FullBagKFold:
      if (k < 2 || k > n_bags)
        throw Error("full-bag k-fold: need 2 <= k <= number of bags");
      break;
    case StrategyKind::SplitBagKFold:
      if (k < 2) throw Error("split-bag k-fold: k must be >= 2");
      break;
    case StrategyKind::SplitBagShuffle:
    case StrategyKind::SplitBagBootstrap:
      if (repeats < 1) throw Error("selection strategy: repeats must be >= 1");
      break;
  }
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw Error("selection strategy: val_fraction must be in (0,1)");
}

namespace {

LlpView subset_view(const LlpView& data, const std::vector<long>& rows) {
  LlpView v;
  v.features.resize(static_cast<long>(rows.size()), data.features.cols());
  v.bag_ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    v.features.row(static_cast<long>(i)) = data.features.row(rows[i]);
    v.bag_ids.push_back(data.bag_ids[rows[i]]);
  }
  v.proportions = data.proportions;  // parent rows, by construction
  return v;
}

std::vector<std::vector<long>> items_by_bag(const LlpView& data) {
  std::vector<std::vector<long>> by_bag(data.n_bags());
  for (long i = 0; i < data.n_items(); ++i) by_bag[data.bag_ids[i]].push_back(i);
  return by_bag;
}

std::vector<Fold> full_bag_kfold(const LlpView& data, const SelectionStrategy& st) {
  const long L = data.n_bags();
  const auto sizes = data.bag_sizes();
  const long n = data.n_items();
  const int C = data.n_classes();

  Eigen::RowVectorXd global = Eigen::RowVectorXd::Zero(C);
  for (long l = 0; l < L; ++l)
    global += data.proportions.row(l) * static_cast<double>(sizes[l]);
  global /= static_cast<double>(n);

  // bags sorted by deviation from the global proportion, most deviant
  // first; each goes to the fold whose aggregate sits farthest on the
  // opposite side (most-negative alignment), ties to the smallest fold
  std::vector<long> order(L);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](long a, long b) {
    return (data.proportions.row(a) - global).norm() >
           (data.proportions.row(b) - global).norm();
  });

  std::vector<std::vector<long>> fold_bags(st.k);
  std::vector<Eigen::RowVectorXd> fold_sum(st.k, Eigen::RowVectorXd::Zero(C));
  std::vector<long> fold_items(st.k, 0);
  for (long bag : order) {
    const Eigen::RowVectorXd dev = data.proportions.row(bag) - global;
    int best = 0;
    double best_align = std::numeric_limits<double>::infinity();
    for (int f = 0; f < st.k; ++f) {
      Eigen::RowVectorXd agg_dev =
          fold_items[f] > 0
              ? (fold_sum[f] / static_cast<double>(fold_items[f]) - global).eval()
              : Eigen::RowVectorXd::Zero(C).eval();
      const double align = agg_dev.dot(dev);
      if (align < best_align - 1e-15 ||
          (std::abs(align - best_align) <= 1e-15 && fold_items[f] < fold_items[best])) {
        best_align = align;
        best = f;
      }
    }
    fold_bags[best].push_back(bag);
    fold_sum[best] += data.proportions.row(bag) * static_cast<double>(sizes[bag]);
    fold_items[best] += sizes[bag];
  }

  auto by_bag = items_by_bag(data);
  std::vector<Fold> folds;
  for (int f = 0; f < st.k; ++f) {
    std::vector<long> val_rows, train_rows;
    std::vector<char> in_fold(L, 0);
    for (long bag : fold_bags[f]) in_fold[bag] = 1;
    for (long l = 0; l < L; ++l)
      for (long i : by_bag[l]) (in_fold[l] ? val_rows : train_rows).push_back(i);
    if (val_rows.empty() || train_rows.empty())
      throw Error("full-bag k-fold: empty fold (too few bags)");
    folds.push_back({subset_view(data, train_rows), subset_view(data, val_rows)});
  }
  return folds;
}

std::vector<Fold> split_bag_kfold(const LlpView& data, const SelectionStrategy& st) {
  const long L = data.n_bags();
  auto by_bag = items_by_bag(data);
  for (long l = 0; l < L; ++l)
    if (static_cast<long>(by_bag[l].size()) < st.k)
      throw Error("split-bag k-fold: bag " + std::to_string(l) + " has fewer than k items");

  // each bag is shuffled and cut into k near-equal parts
  std::vector<std::vector<std::vector<long>>> parts(L);
  for (long l = 0; l < L; ++l) {
    Rng rng(derive_seed(st.seed, "split-bag-kfold", static_cast<std::uint64_t>(l)));
    rng.shuffle(by_bag[l]);
    const long n_l = static_cast<long>(by_bag[l].size());
    std::vector<double> quotas(st.k, static_cast<double>(n_l) / st.k);
    std::vector<long> cuts = largest_remainder(quotas, n_l);
    parts[l].resize(st.k);
    long pos = 0;
    for (int f = 0; f < st.k; ++f)
      for (long c = 0; c < cuts[f]; ++c) parts[l][f].push_back(by_bag[l][pos++]);
  }

  std::vector<Fold> folds;
  for (int f = 0; f < st.k; ++f) {
    std::vector<long> val_rows, train_rows;
    for (long l = 0; l < L; ++l)
      for (int g = 0; g < st.k; ++g)
        for (long i : parts[l][g]) (g == f ? val_rows : train_rows).push_back(i);
    std::sort(val_rows.begin(), val_rows.end());
    std::sort(train_rows.begin(), train_rows.end());
    folds.push_back({subset_view(data, train_rows), subset_view(data, val_rows)});
  }
  return folds;
}

std::vector<Fold> split_bag_shuffle(const LlpView& data, const SelectionStrategy& st) {
  const long L = data.n_bags();
  auto by_bag = items_by_bag(data);
  for (long l = 0; l < L; ++l)
    if (by_bag[l].size() < 2)
      throw Error("split-bag shuffle: bag " + std::to_string(l) + " has fewer than 2 items");

  std::vector<Fold> folds;
  for (int r = 0; r < st.repeats; ++r) {
    std::vector<long> val_rows, train_rows;
    for (long l = 0; l < L; ++l) {
      std::vector<long> items = by_bag[l];
      Rng rng(derive_seed(st.seed, "split-bag-shuffle",
                          static_cast<std::uint64_t>(r) * 1000003ULL +
                              static_cast<std::uint64_t>(l)));
      rng.shuffle(items);
      const long n_l = static_cast<long>(items.size());
      const long train_n = std::clamp<long>(
          static_cast<long>(std::llround((1.0 - st.val_fraction) * n_l)), 1, n_l - 1);
      for (long i = 0; i < n_l; ++i)
        (i < train_n ? train_rows : val_rows).push_back(items[i]);
    }
    std::sort(val_rows.begin(), val_rows.end());
    std::sort(train_rows.begin(), train_rows.end());
    folds.push_back({subset_view(data, train_rows), subset_view(data, val_rows)});
  }
  return folds;
}

std::vector<Fold> split_bag_bootstrap(const LlpView& data, const SelectionStrategy& st) {
  const long L = data.n_bags();
  auto by_bag = items_by_bag(data);
  for (long l = 0; l < L; ++l)
    if (by_bag[l].size() < 2)
      throw Error("split-bag bootstrap: bag " + std::to_string(l) + " has fewer than 2 items");

  std::vector<Fold> folds;
  for (int r = 0; r < st.repeats; ++r) {
    // resample each bag with replacement; out-of-sample items validate.
    // a draw leaving some bag with no validation items is retried
    std::vector<long> train_rows, val_rows;
    bool ok = false;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
      train_rows.clear();
      val_rows.clear();
      ok = true;
      for (long l = 0; l < L && ok; ++l) {
        Rng rng(derive_seed(st.seed, "split-bag-bootstrap",
                            (static_cast<std::uint64_t>(r) * 1000003ULL +
                             static_cast<std::uint64_t>(l)) *
                                    31ULL +
                                static_cast<std::uint64_t>(attempt)));
        const auto& items = by_bag[l];
        const long n_l = static_cast<long>(items.size());
        std::vector<char> sampled(n_l, 0);
        for (long i = 0; i < n_l; ++i) {
          long pick = static_cast<long>(rng.next_below(static_cast<std::uint64_t>(n_l)));
          train_rows.push_back(items[pick]);
          sampled[pick] = 1;
        }
        long oob = 0;
        for (long i = 0; i < n_l; ++i)
          if (!sampled[i]) {
            val_rows.push_back(items[i]);
            ++oob;
          }
        if (oob == 0) ok = false;
      }
    }
    if (!ok)
      throw Error("split-bag bootstrap: could not draw out-of-sample items after 10 tries");
    std::sort(val_rows.begin(), val_rows.end());
    std::sort(train_rows.begin(), train_rows.end());
    folds.push_back({subset_view(data, train_rows), subset_view(data, val_rows)});
  }
  return folds;
}

}  // namespace

std::vector<Fold> make_folds(const LlpView& data, const SelectionStrategy& strategy) {
  data.validate();
  strategy.validate(data.n_bags());
  switch (strategy.kind) {
    case StrategyKind::FullBagKFold: return full_bag_kfold(data, strategy);
    case StrategyKind::SplitBagKFold: return split_bag_kfold(data, strategy);
    case StrategyKind::SplitBagShuffle: return split_bag_shuffle(data, strategy);
    case StrategyKind::SplitBagBootstrap: return split_bag_bootstrap(data, strategy);
  }
  throw Error("make_folds: unknown strategy");
}

double proportion_error(const LLPModel& model, const LlpView& validation) {
  const Eigen::MatrixXd predicted = predict_proportions(model, validation);
  // bags absent from the validation side (full-bag folds) are skipped
  std::vector<char> present(validation.n_bags(), 0);
  for (int b : validation.bag_ids) present[b] = 1;
  double total = 0.0;
  long counted = 0;
  for (long l = 0; l < validation.n_bags(); ++l) {
    if (!present[l]) continue;
    total += (predicted.row(l) - validation.proportions.row(l)).cwiseAbs().sum();
    ++counted;
  }
  if (counted == 0) throw Error("proportion_error: no bags present");
  return total / static_cast<double>(counted);
}

SelectionResult select(Algorithm algorithm, const LlpView& data, const HyperGrid& grid,
                       const SelectionStrategy& strategy, std::uint64_t seed) {
  const std::vector<HyperParams> points = grid.points();
  if (points.empty()) throw Error("select: empty hyperparameter grid");
  const std::vector<Fold> folds = make_folds(data, strategy);

  SelectionResult result;
  result.fold_scores.assign(points.size(),
                            std::vector<double>(folds.size(),
                                                std::numeric_limits<double>::quiet_NaN()));

  const std::size_t n_tasks = points.size() * folds.size();
  parallel_for(n_tasks, [&](std::size_t t) {
    const std::size_t g = t / folds.size();
    const std::size_t f = t % folds.size();
    double score = std::numeric_limits<double>::infinity();
    try {
      LLPModel model = fit(algorithm, folds[f].train, points[g],
                           derive_seed(seed, "select-fit", t));
      score = proportion_error(model, folds[f].validation);
    } catch (const Error&) {
      // failed fit: +inf score, surfaced below if the whole grid fails
    }
    result.fold_scores[g][f] = score;
  });

  double best_score = std::numeric_limits<double>::infinity();
  std::size_t best_g = points.size();
  for (std::size_t g = 0; g < points.size(); ++g) {
    double mean_score = 0.0;
    for (double s : result.fold_scores[g]) mean_score += s;
    mean_score /= static_cast<double>(folds.size());
    if (std::isnan(mean_score)) mean_score = std::numeric_limits<double>::infinity();
    result.scores.emplace_back(points[g], mean_score);
    if (mean_score < best_score) {  // strict: ties keep the earlier point
      best_score = mean_score;
      best_g = g;
    }
  }
  if (best_g == points.size())
    throw Error("select: every grid point failed to fit");
  result.best_hyperparameters = points[best_g];
  return result;
}

}  // namespace llp
