#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "llp/dataset.hpp"

namespace llp {

enum class Algorithm { EMLR, MM, LMM, AMM, DLLP };

const char* to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

using HyperParams = std::map<std::string, double>;

// The label-free face of an LLP training set: features, bag membership
// and one proportion row per bag. Ground-truth labels never enter here;
// fold construction hands sub-bags their parent bag's proportion row.
struct LlpView {
  Eigen::MatrixXd features;     // n x d
  std::vector<int> bag_ids;     // values in {0..L-1}
  Eigen::MatrixXd proportions;  // L x C

  long n_items() const { return features.rows(); }
  long n_bags() const { return proportions.rows(); }
  int n_classes() const { return static_cast<int>(proportions.cols()); }
  std::vector<long> bag_sizes() const;
  void validate() const;
};

LlpView view_of(const LLPInstance& inst);

struct TrainingMeta {
  long iterations = 0;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> objective_trace;  // per EM round / alternation / epoch
};

struct LLPModel {
  Algorithm algorithm = Algorithm::EMLR;
  HyperParams hyperparameters;
  TrainingMeta training_meta;
  int n_classes = 2;
  long n_features = 0;

  // EMLR (binary), MM, LMM, AMM: theta holds [w; bias], length d+1.
  // EMLR with C > 2: row-major C x (d+1) softmax weights.
  Eigen::VectorXd theta;

  // DLLP: fully connected layers, weights[i] maps layer i-1 to i.
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Trains a model from proportions only; deterministic given seed.
// MM/LMM/AMM require binary labels.
LLPModel fit(Algorithm algorithm, const LlpView& train, const HyperParams& hp,
             std::uint64_t seed);

// Per-item class probabilities, n x C rows summing to 1.
Eigen::MatrixXd predict_probabilities(const LLPModel& model, const Eigen::MatrixXd& x);

// Class ids; probability ties resolve to the lower class id.
std::vector<int> predict(const LLPModel& model, const Eigen::MatrixXd& x);

// Row l = mean predicted probability vector over bag l.
Eigen::MatrixXd predict_proportions(const LLPModel& model, const LlpView& view);

std::string model_to_json(const LLPModel& model);
LLPModel model_from_json(const std::string& text);

struct HyperGrid {
  // name -> candidate values; grid points enumerate in declaration order
  // with later parameters cycling fastest
  std::vector<std::pair<std::string, std::vector<double>>> params;

  static HyperGrid paper_preset(Algorithm a);
  std::vector<HyperParams> points() const;
  bool empty() const { return params.empty(); }
};

}  // namespace llp
