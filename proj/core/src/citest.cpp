#include "llp/citest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "llp/errors.hpp"
#include "llp/parallel.hpp"
#include "llp/rng.hpp"
#include "llp/stats.hpp"

namespace llp {

TestOutcome chi_square_yb(const LLPInstance& inst, const std::vector<int>& labels,
                          double alpha) {
  const long L = inst.n_bags();
  const int C = inst.n_classes();
  if (labels.size() != inst.bag_ids.size()) throw Error("chi_square_yb: length mismatch");

  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(L, C);
  for (std::size_t i = 0; i < labels.size(); ++i) counts(inst.bag_ids[i], labels[i]) += 1.0;

  const double n = counts.sum();
  Eigen::VectorXd row_tot = counts.rowwise().sum();
  Eigen::VectorXd col_tot = counts.colwise().sum();
  for (long l = 0; l < L; ++l)
    if (row_tot[l] <= 0.0) throw Error("chi_square_yb: empty bag row");

  double stat = 0.0;
  for (long l = 0; l < L; ++l)
    for (int c = 0; c < C; ++c) {
      const double expected = row_tot[l] * col_tot[c] / n;
      if (expected <= 0.0)
        throw Error("chi_square_yb: zero expected count (degenerate marginal)");
      const double d = counts(l, c) - expected;
      stat += d * d / expected;
    }

  TestOutcome out;
  out.test_name = "Y_indep_B";
  out.statistic = stat;
  out.p_value = chi2_sf(stat, static_cast<double>((L - 1) * (C - 1)));
  out.decision = out.p_value < alpha ? CiDecision::Dependent : CiDecision::Independent;
  return out;
}

Eigen::MatrixXd one_hot(const std::vector<int>& values, int n_values) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<long>(values.size()), n_values);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0 || values[i] >= n_values) throw Error("one_hot: value out of range");
    m(static_cast<long>(i), values[i]) = 1.0;
  }
  return m;
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<long>& rows) {
  Eigen::MatrixXd out(static_cast<long>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<long>(i)) = m.row(rows[i]);
  return out;
}

Eigen::MatrixXd hcat(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() == 0) return b;
  if (b.cols() == 0) return a;
  Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

}  // namespace

TestOutcome predictive_ci_test(const Eigen::MatrixXd& target,
                               const Eigen::MatrixXd& predictors,
                               const Eigen::MatrixXd& conditioning, int n_splits,
                               std::uint64_t seed, double alpha, const CiTestOptions& opt) {
  const long n = target.rows();
  if (predictors.rows() != n || (conditioning.cols() > 0 && conditioning.rows() != n))
    throw Error("predictive_ci_test: length mismatch");
  if (n_splits < 8) throw Error("predictive_ci_test: n_splits must be >= 8");
  if (n < 8) throw Error("predictive_ci_test: too few items");
  {
    Eigen::RowVectorXd first = target.row(0);
    bool constant = true;
    for (long i = 1; i < n && constant; ++i)
      if ((target.row(i) - first).cwiseAbs().maxCoeff() > 0.0) constant = false;
    if (constant) throw Error("predictive_ci_test: constant target (test undefined)");
  }
  const bool unconditional = conditioning.cols() == 0;

  std::vector<double> diffs(static_cast<std::size_t>(n_splits), 0.0);
  parallel_for(static_cast<std::size_t>(n_splits), [&](std::size_t s) {
    Rng rng(derive_seed(seed, "ci-split", s));
    std::vector<long> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const long half = n / 2;
    std::vector<long> train(order.begin(), order.begin() + half);
    std::vector<long> eval(order.begin() + half, order.end());

    const Eigen::MatrixXd y_tr = take_rows(target, train);
    const Eigen::MatrixXd y_ev = take_rows(target, eval);

    Eigen::MatrixXd full_tr, full_ev, red_tr, red_ev;
    if (unconditional) {
      full_tr = take_rows(predictors, train);
      full_ev = take_rows(predictors, eval);
      // permutation surrogate: same model capacity, link broken
      std::vector<long> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm);
      Eigen::MatrixXd shuffled = take_rows(predictors, perm);
      red_tr = take_rows(shuffled, train);
      red_ev = take_rows(shuffled, eval);
    } else {
      const Eigen::MatrixXd c_tr = take_rows(conditioning, train);
      const Eigen::MatrixXd c_ev = take_rows(conditioning, eval);
      full_tr = hcat(c_tr, take_rows(predictors, train));
      full_ev = hcat(c_ev, take_rows(predictors, eval));
      red_tr = c_tr;
      red_ev = c_ev;
    }

    RegressionTree full_tree, red_tree;
    full_tree.fit(full_tr, y_tr, opt.tree);
    red_tree.fit(red_tr, y_tr, opt.tree);
    const double e_full = mse(y_ev, full_tree.predict(full_ev));
    const double e_reduced = mse(y_ev, red_tree.predict(red_ev));
    diffs[s] = e_reduced - e_full;
  });

  TTest t = paired_t_test_greater(diffs);
  TestOutcome out;
  out.statistic = t.statistic;
  out.p_value = t.p_value;
  out.decision = out.p_value < alpha ? CiDecision::Dependent : CiDecision::Independent;
  return out;
}

std::array<bool, 5> variant_pattern(Variant v) {
  // order: Y_B, X_B, X_Y|B, X_B|Y, Y_B|X; true = independent
  switch (v) {
    case Variant::Naive: return {true, true, false, true, true};
    case Variant::Simple: return {false, false, false, true, false};
    case Variant::Intermediate: return {false, false, false, false, true};
    case Variant::Hard: return {false, false, false, false, false};
  }
  throw Error("variant_pattern: unknown variant");
}

std::string VariantReport::inferred_name() const {
  return inferred_variant ? to_string(*inferred_variant) : "unrecognized";
}

VariantReport verify_variant(const LLPInstance& inst, const std::vector<int>& labels,
                             double alpha, std::uint64_t seed, const CiTestOptions& opt) {
  if (labels.size() != inst.bag_ids.size()) throw Error("verify_variant: length mismatch");
  const Eigen::MatrixXd& x = inst.base->features;
  const Eigen::MatrixXd y_enc = one_hot(labels, inst.n_classes());
  const Eigen::MatrixXd b_enc = one_hot(inst.bag_ids, static_cast<int>(inst.n_bags()));
  const Eigen::MatrixXd empty(x.rows(), 0);

  VariantReport report;
  report.alpha = alpha;
  report.outcomes[0] = chi_square_yb(inst, labels, alpha);

  auto run = [&](const char* name, const Eigen::MatrixXd& target,
                 const Eigen::MatrixXd& predictors, const Eigen::MatrixXd& conditioning,
                 std::size_t slot) {
    TestOutcome o = predictive_ci_test(target, predictors, conditioning, opt.n_splits,
                                       derive_seed(seed, name), alpha, opt);
    o.test_name = name;
    report.outcomes[slot] = std::move(o);
  };

  run("X_indep_B", b_enc, x, empty, 1);
  run("X_indep_Y_given_B", y_enc, x, b_enc, 2);
  run("X_indep_B_given_Y", b_enc, x, y_enc, 3);
  run("Y_indep_B_given_X", y_enc, b_enc, x, 4);

  std::array<bool, 5> observed;
  for (std::size_t i = 0; i < 5; ++i)
    observed[i] = report.outcomes[i].decision == CiDecision::Independent;
  for (Variant v :
       {Variant::Naive, Variant::Simple, Variant::Intermediate, Variant::Hard})
    if (observed == variant_pattern(v)) {
      report.inferred_variant = v;
      break;
    }
  return report;
}

std::string variant_report_json(const VariantReport& report) {
  nlohmann::ordered_json j;
  j["alpha"] = report.alpha;
  nlohmann::ordered_json tests = nlohmann::ordered_json::array();
  for (const auto& o : report.outcomes) {
    nlohmann::ordered_json t;
    t["name"] = o.test_name;
    t["p_value"] = o.p_value;
    t["statistic"] = o.statistic;
    t["decision"] = o.decision == CiDecision::Dependent ? "dependent" : "independent";
    tests.push_back(std::move(t));
  }
  j["tests"] = std::move(tests);
  j["inferred_variant"] = report.inferred_name();
  return j.dump(2) + "\n";
}

}  // namespace llp
