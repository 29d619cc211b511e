#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "llp/modelsel.hpp"

namespace llp {

struct ExecutionRecord {
  std::uint64_t seed = 0;
  HyperParams selected_hyperparameters;
  double test_f1 = 0.0;
  bool failed = false;
  std::string error;
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample std over successful executions
  long count = 0;
};

struct BenchmarkRecord {
  std::string dataset_id;
  std::string algorithm;
  std::string strategy;
  std::vector<ExecutionRecord> executions;
  Summary summary;
  bool valid = true;  // false when > 20% of executions failed

  std::vector<double> f1_samples() const;  // successful executions only
};

Summary summarize(const std::vector<ExecutionRecord>& executions);

// One run of the evaluation meta-algorithm: random train/test split,
// training proportions recomputed from ground truth, label-free grid
// search, retrain with the winner, F1 on the test side.
ExecutionRecord run_once(const LLPInstance& inst, const std::vector<int>& labels,
                         Algorithm algorithm, SelectionStrategy strategy,
                         const HyperGrid& grid, double train_fraction,
                         std::uint64_t seed);

struct BenchmarkConfig {
  std::vector<Algorithm> algorithms;
  std::vector<SelectionStrategy> strategies;
  std::map<std::string, HyperGrid> grids;  // key: algorithm name
  int n_executions = 30;
  double train_fraction = 0.75;
  std::uint64_t base_seed = 0;
};

// Every (algorithm, strategy) cell runs n_executions independent
// executions with seeds derived from (base_seed, dataset_id, algorithm,
// strategy, index); failures are recorded, never dropped silently.
std::vector<BenchmarkRecord> run_benchmark(const LLPInstance& inst,
                                           const std::vector<int>& labels,
                                           const std::string& dataset_id,
                                           const BenchmarkConfig& config);

struct BestSet {
  std::vector<std::string> ranked;          // by descending mean
  std::vector<std::string> best;            // statistically tied with the top
  std::map<std::string, double> p_values;   // top vs. each other group
};

// Welch two-sided t-test of the top-mean group against each other group;
// groups with p >= alpha stay in the best set.
BestSet best_set(const std::map<std::string, std::vector<double>>& samples, double alpha);

// Pools each algorithm's executions across all strategies.
BestSet best_algorithm_set(const std::vector<BenchmarkRecord>& records, double alpha);

enum class StrategyGrouping { Pooled, PerAlgorithm };

// Pooled: one comparison with each strategy's executions pooled across
// algorithms. PerAlgorithm: one comparison per algorithm.
std::map<std::string, BestSet> best_strategy_sets(const std::vector<BenchmarkRecord>& records,
                                                  double alpha, StrategyGrouping grouping);

// "SB", "FB", or "SB+FB" depending on which families the set touches.
std::string family_label(const std::vector<std::string>& strategies);

}  // namespace llp
