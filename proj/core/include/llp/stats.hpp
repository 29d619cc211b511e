#pragma once

#include <span>
#include <vector>

namespace llp {

// Regularized incomplete gamma functions P(a,x) and Q(a,x) = 1 - P(a,x).
// Series expansion for x < a+1, continued fraction otherwise.
double reg_gamma_p(double a, double x);
double reg_gamma_q(double a, double x);

// Regularized incomplete beta I_x(a, b) (Lentz continued fraction).
double reg_inc_beta(double a, double b, double x);

// Upper tail of the chi-square distribution with dof degrees of freedom.
double chi2_sf(double x, double dof);

// Upper tail P(T > t) of Student's t with dof degrees of freedom.
double student_t_sf(double t, double dof);

struct TTest {
  double statistic = 0.0;
  double p_value = 1.0;
  double dof = 0.0;
};

// Welch two-sample t-test, two-sided. Zero variance on both sides gives
// p = 1 for equal means and p = 0 otherwise.
TTest welch_t_test(std::span<const double> a, std::span<const double> b);

// Paired one-sided t-test on differences d, H0: mean(d) <= 0.
TTest paired_t_test_greater(std::span<const double> d);

double mean(std::span<const double> v);
double sample_variance(std::span<const double> v);  // divides by n-1

// F1 with class 1 as positive; 0/0 precision and recall are defined as 0.
double f1_binary(std::span<const int> labels, std::span<const int> predictions);
double f1_macro(std::span<const int> labels, std::span<const int> predictions,
                int n_classes);
// binary -> f1_binary, multiclass -> macro
double f1_score(std::span<const int> labels, std::span<const int> predictions,
                int n_classes);

}  // namespace llp
