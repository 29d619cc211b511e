#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "llp/learners.hpp"

namespace llp {

enum class StrategyKind { FullBagKFold, SplitBagKFold, SplitBagShuffle, SplitBagBootstrap };

const char* to_string(StrategyKind k);
StrategyKind strategy_from_string(const std::string& s);

struct SelectionStrategy {
  StrategyKind kind = StrategyKind::SplitBagShuffle;
  int k = 5;                  // k-fold kinds
  int repeats = 5;            // shuffle / bootstrap
  double val_fraction = 0.25; // shuffle
  std::uint64_t seed = 0;

  void validate(long n_bags) const;
};

struct Fold {
  LlpView train;
  LlpView validation;
};

// Builds (train, validation) pairs per the strategy. Sub-bags always
// carry the PARENT bag's proportion row; their own labels are never
// consulted. Full-bag folds validate on whole bags, assigned by greedy
// proportion balancing; split-bag kinds cut every bag.
std::vector<Fold> make_folds(const LlpView& data, const SelectionStrategy& strategy);

struct SelectionResult {
  HyperParams best_hyperparameters;
  std::vector<std::pair<HyperParams, double>> scores;  // grid order, mean score
  std::vector<std::vector<double>> fold_scores;        // [grid point][fold]
};

// Grid search: every grid point is fitted on each fold's training side
// and scored on its validation side by the mean per-bag L1 proportion
// error (labels never used). The minimizer wins; ties go to grid order.
SelectionResult select(Algorithm algorithm, const LlpView& data, const HyperGrid& grid,
                       const SelectionStrategy& strategy, std::uint64_t seed);

// Mean over bags of ||p_hat_l - p_l||_1 with p from the view.
double proportion_error(const LLPModel& model, const LlpView& validation);

}  // namespace llp
