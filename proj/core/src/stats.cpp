#include "llp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "llp/errors.hpp"

namespace llp {

namespace {

constexpr int kMaxIter = 500;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kFpMin = std::numeric_limits<double>::min() / kEps;

double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kEps)
      break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kFpMin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = b + an / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) <= kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double reg_gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw Error("reg_gamma_p: domain");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double reg_gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw Error("reg_gamma_q: domain");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_contfrac(a, x);
}

namespace {

double inc_beta_contfrac(double a, double b, double x) {
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) <= kEps) break;
  }
  return h;
}

}  // namespace

double reg_inc_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0 || x < 0.0 || x > 1.0) throw Error("reg_inc_beta: domain");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * inc_beta_contfrac(a, b, x) / a;
  return 1.0 - front * inc_beta_contfrac(b, a, 1.0 - x) / b;
}

double chi2_sf(double x, double dof) {
  if (dof <= 0.0) throw Error("chi2_sf: dof must be positive");
  if (x <= 0.0) return 1.0;
  return reg_gamma_q(0.5 * dof, 0.5 * x);
}

double student_t_sf(double t, double dof) {
  if (dof <= 0.0) throw Error("student_t_sf: dof must be positive");
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double x = dof / (dof + t * t);
  const double half_tail = 0.5 * reg_inc_beta(0.5 * dof, 0.5, x);
  return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

double mean(std::span<const double> v) {
  if (v.empty()) throw Error("mean: empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) throw Error("sample_variance: need at least 2 values");
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

TTest welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw Error("welch_t_test: need >= 2 samples per side");
  const double ma = mean(a), mb = mean(b);
  const double va = sample_variance(a), vb = sample_variance(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  TTest r;
  const double se2 = va / na + vb / nb;
  if (se2 == 0.0) {
    r.statistic = (ma == mb) ? 0.0 : std::copysign(
        std::numeric_limits<double>::infinity(), ma - mb);
    r.p_value = (ma == mb) ? 1.0 : 0.0;
    r.dof = na + nb - 2.0;
    return r;
  }
  r.statistic = (ma - mb) / std::sqrt(se2);
  const double num = se2 * se2;
  const double den = (va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0);
  r.dof = num / den;
  r.p_value = 2.0 * student_t_sf(std::abs(r.statistic), r.dof);
  r.p_value = std::min(1.0, r.p_value);
  return r;
}

TTest paired_t_test_greater(std::span<const double> d) {
  if (d.size() < 2) throw Error("paired_t_test: need >= 2 differences");
  const double m = mean(d);
  const double v = sample_variance(d);
  const double n = static_cast<double>(d.size());
  TTest r;
  r.dof = n - 1.0;
  if (v == 0.0) {
    r.statistic = (m == 0.0) ? 0.0 : std::copysign(
        std::numeric_limits<double>::infinity(), m);
    r.p_value = m > 0.0 ? 0.0 : 1.0;
    return r;
  }
  r.statistic = m / std::sqrt(v / n);
  r.p_value = student_t_sf(r.statistic, r.dof);
  return r;
}

namespace {

double f1_one_vs_rest(std::span<const int> labels, std::span<const int> predictions,
                      int positive) {
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool is_pos = labels[i] == positive;
    const bool said_pos = predictions[i] == positive;
    if (said_pos && is_pos) ++tp;
    else if (said_pos) ++fp;
    else if (is_pos) ++fn;
  }
  const double precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  const double recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double f1_binary(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size() || labels.empty())
    throw Error("f1_binary: shape mismatch");
  return f1_one_vs_rest(labels, predictions, 1);
}

double f1_macro(std::span<const int> labels, std::span<const int> predictions,
                int n_classes) {
  if (labels.size() != predictions.size() || labels.empty())
    throw Error("f1_macro: shape mismatch");
  double s = 0.0;
  for (int c = 0; c < n_classes; ++c) s += f1_one_vs_rest(labels, predictions, c);
  return s / n_classes;
}

double f1_score(std::span<const int> labels, std::span<const int> predictions,
                int n_classes) {
  return n_classes == 2 ? f1_binary(labels, predictions)
                        : f1_macro(labels, predictions, n_classes);
}

}  // namespace llp
