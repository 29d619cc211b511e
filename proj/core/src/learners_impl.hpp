#pragma once

// Internal helpers shared by the learner translation units.

#include <Eigen/Dense>
#include <cstdint>

#include "llp/learners.hpp"

namespace llp::detail {

// features with a trailing bias column of ones
Eigen::MatrixXd with_bias(const Eigen::MatrixXd& x);

inline double sigmoid(double a) {
  return a >= 0.0 ? 1.0 / (1.0 + std::exp(-a)) : std::exp(a) / (1.0 + std::exp(a));
}

// log(1 + e^a), overflow-safe
inline double log1pexp(double a) {
  return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
}

// Weighted-label L2 logistic regression: minimizes
//   (1/N) sum_i [log(1+e^{a_i}) - q_i a_i] + reg/(2N) * penalty(theta)
// where a_i = theta . [x_i;1] and q_i in [0,1] is the soft class-1 label.
// penalize_bias selects ||theta||^2 (mean-map family) vs ||w||^2 (EMLR).
Eigen::VectorXd soft_logistic_fit(const Eigen::MatrixXd& xb, const Eigen::VectorXd& q,
                                  double reg, bool penalize_bias,
                                  const Eigen::VectorXd& warm_start,
                                  double* final_value = nullptr);

// Value of the objective above at theta (used for alternation traces).
double soft_logistic_value(const Eigen::MatrixXd& xb, const Eigen::VectorXd& q,
                           double reg, bool penalize_bias, const Eigen::VectorXd& theta);

LLPModel fit_emlr(const LlpView& train, const HyperParams& hp, std::uint64_t seed);
LLPModel fit_mm(const LlpView& train, const HyperParams& hp, std::uint64_t seed);
LLPModel fit_lmm(const LlpView& train, const HyperParams& hp, std::uint64_t seed);
LLPModel fit_amm(const LlpView& train, const HyperParams& hp, std::uint64_t seed);
LLPModel fit_dllp(const LlpView& train, const HyperParams& hp, std::uint64_t seed);

// Shared by MM/LMM/AMM: bag means, the mean-operator estimate -> theta.
Eigen::VectorXd mean_map_theta(const Eigen::MatrixXd& xb, const Eigen::VectorXd& mu_hat,
                               double lambda, double* final_value);

double hyper(const HyperParams& hp, const std::string& name, double fallback);

}  // namespace llp::detail
