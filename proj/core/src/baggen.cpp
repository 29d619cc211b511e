#include "llp/baggen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "llp/errors.hpp"
#include "llp/rng.hpp"
#include "llp/rounding.hpp"

namespace llp {

double JointTable3D::total() const {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

Eigen::MatrixXd JointTable3D::zy_marginal() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(q, c);
  for (long z = 0; z < q; ++z)
    for (long y = 0; y < c; ++y)
      for (long b = 0; b < l; ++b) m(z, y) += at(z, y, b);
  return m;
}

Eigen::MatrixXd JointTable3D::yb_marginal() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(c, l);
  for (long z = 0; z < q; ++z)
    for (long y = 0; y < c; ++y)
      for (long b = 0; b < l; ++b) m(y, b) += at(z, y, b);
  return m;
}

void JointTable3D::validate(double tol) const {
  for (double v : values)
    if (v < -tol || !std::isfinite(v)) throw Error("joint table: bad entry");
  if (std::abs(total() - 1.0) > tol) throw Error("joint table: total mass != 1");
}

void AssignmentRule::validate(double tol) const {
  StochasticMatrix{table}.validate(tol);
}

// ---------------------------------------------------------------------------
// projected gradient descent (Intermediate variant solver)
// ---------------------------------------------------------------------------

double pgd_residual(const Eigen::MatrixXd& p_yz, const Eigen::MatrixXd& p_yb,
                    const Eigen::MatrixXd& a) {
  return (p_yb - p_yz * a).norm();
}

namespace {

Eigen::MatrixXd pgd_run(const Eigen::MatrixXd& p_yz, const Eigen::MatrixXd& p_yb,
                        const PgdOptions& opt, std::uint64_t seed) {
  const long q = p_yz.cols();
  const long l = p_yb.cols();
  Rng rng(seed);
  Eigen::MatrixXd a(q, l);
  for (long i = 0; i < q; ++i)
    for (long j = 0; j < l; ++j) a(i, j) = rng.next_double();

  const Eigen::MatrixXd gtg = p_yz.transpose() * p_yz;   // Q x Q
  const Eigen::MatrixXd gty = p_yz.transpose() * p_yb;   // Q x L
  Eigen::MatrixXd a_old = Eigen::MatrixXd::Constant(q, l, 1e5);

  for (long it = 0; it < opt.max_iter; ++it) {
    a -= opt.alpha * (2.0 * gtg * a - 2.0 * gty);
    // projection: clip to [0,1], renormalize rows
    a = a.cwiseMax(0.0).cwiseMin(1.0);
    for (long i = 0; i < q; ++i) {
      double row_sum = a.row(i).sum();
      a.row(i) /= row_sum;  // a zero row yields non-finite values, caught below
    }
    if (!a.allFinite())
      throw Error("pgd_solve: non-finite iterate (learning rate too large?)");
    if ((a - a_old).norm() / a.norm() <= opt.tol) break;
    a_old = a;
  }
  return a;
}

}  // namespace

StochasticMatrix pgd_solve(const Eigen::MatrixXd& p_yz, const Eigen::MatrixXd& p_yb,
                           const PgdOptions& opt, std::uint64_t seed,
                           double* residual_out) {
  if (p_yz.rows() != p_yb.rows()) throw Error("pgd_solve: class-dimension mismatch");
  if ((p_yz.array() < 0).any() || (p_yb.array() < 0).any())
    throw Error("pgd_solve: negative probability input");

  Eigen::MatrixXd best;
  double best_res = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, opt.restarts); ++r) {
    Eigen::MatrixXd a = pgd_run(p_yz, p_yb, opt, derive_seed(seed, "pgd-restart", r));
    double res = pgd_residual(p_yz, p_yb, a);
    if (res < best_res) {
      best_res = res;
      best = std::move(a);
    }
  }
  if (residual_out) *residual_out = best_res;
  StochasticMatrix out{std::move(best)};
  out.validate(1e-9);
  return out;
}

// ---------------------------------------------------------------------------
// iterative proportional fitting (Hard variant solver)
// ---------------------------------------------------------------------------

namespace {

double marginal_deviation(const JointTable3D& t, const Eigen::MatrixXd& mzy,
                          const Eigen::MatrixXd& myb) {
  double dev = (t.zy_marginal() - mzy).cwiseAbs().maxCoeff();
  return std::max(dev, (t.yb_marginal() - myb).cwiseAbs().maxCoeff());
}

}  // namespace

JointTable3D ipf_fit(const JointTable3D& init, const Eigen::MatrixXd& marginal_zy,
                     const Eigen::MatrixXd& marginal_yb, const Eigen::VectorXd& marginal_z,
                     const Eigen::VectorXd& marginal_y, const Eigen::VectorXd& marginal_b,
                     const IpfOptions& opt, double* max_dev_out) {
  const long q = init.q, c = init.c, l = init.l;
  if (marginal_zy.rows() != q || marginal_zy.cols() != c)
    throw Error("ipf_fit: (Z,Y) marginal shape mismatch");
  if (marginal_yb.rows() != c || marginal_yb.cols() != l)
    throw Error("ipf_fit: (Y,B) marginal shape mismatch");
  for (double v : init.values)
    if (v <= 0.0) throw Error("ipf_fit: init must be entrywise positive");

  // consistency of shared sub-marginals
  constexpr double kConsTol = 1e-6;
  for (long y = 0; y < c; ++y)
    if (std::abs(marginal_zy.col(y).sum() - marginal_yb.row(y).sum()) > kConsTol)
      throw Error("ipf_fit: (Z,Y) and (Y,B) marginals disagree on Pr(Y)");
  for (long z = 0; z < q; ++z)
    if (std::abs(marginal_zy.row(z).sum() - marginal_z[z]) > kConsTol)
      throw Error("ipf_fit: Pr(Z) inconsistent with (Z,Y) marginal");
  for (long y = 0; y < c; ++y)
    if (std::abs(marginal_yb.row(y).sum() - marginal_y[y]) > kConsTol)
      throw Error("ipf_fit: Pr(Y) inconsistent with (Y,B) marginal");
  for (long b = 0; b < l; ++b)
    if (std::abs(marginal_yb.col(b).sum() - marginal_b[b]) > kConsTol)
      throw Error("ipf_fit: Pr(B) inconsistent with (Y,B) marginal");

  JointTable3D t = init;
  double dev = marginal_deviation(t, marginal_zy, marginal_yb);
  for (long sweep = 0; sweep < opt.max_iter && dev > opt.tol; ++sweep) {
    // rescale (z,y) fibers
    for (long z = 0; z < q; ++z)
      for (long y = 0; y < c; ++y) {
        double cur = 0.0;
        for (long b = 0; b < l; ++b) cur += t.at(z, y, b);
        double target = marginal_zy(z, y);
        if (cur <= 0.0) {
          if (target > kConsTol)
            throw Error("ipf_fit: zero fiber against positive (Z,Y) target");
          continue;
        }
        double f = target / cur;
        for (long b = 0; b < l; ++b) t.at(z, y, b) *= f;
      }
    // rescale (y,b) fibers
    for (long y = 0; y < c; ++y)
      for (long b = 0; b < l; ++b) {
        double cur = 0.0;
        for (long z = 0; z < q; ++z) cur += t.at(z, y, b);
        double target = marginal_yb(y, b);
        if (cur <= 0.0) {
          if (target > kConsTol)
            throw Error("ipf_fit: zero fiber against positive (Y,B) target");
          continue;
        }
        double f = target / cur;
        for (long z = 0; z < q; ++z) t.at(z, y, b) *= f;
      }
    dev = marginal_deviation(t, marginal_zy, marginal_yb);
  }
  if (max_dev_out) *max_dev_out = dev;
  return t;
}

// ---------------------------------------------------------------------------
// generators
// ---------------------------------------------------------------------------

Eigen::MatrixXd target_yb(const GenSpec& spec) {
  const double n = static_cast<double>(spec.n_items());
  Eigen::MatrixXd t(spec.proportions.cols(), spec.n_bags);
  for (long l = 0; l < spec.n_bags; ++l)
    for (long y = 0; y < spec.proportions.cols(); ++y)
      t(y, l) = spec.proportions(l, y) * static_cast<double>(spec.bag_sizes[l]) / n;
  return t;
}

namespace {

// Cuts a shuffled index list into consecutive blocks of the given sizes.
void blocks_to_bags(const std::vector<long>& items, const std::vector<long>& block_sizes,
                    std::vector<int>& out) {
  long pos = 0;
  for (std::size_t b = 0; b < block_sizes.size(); ++b)
    for (long k = 0; k < block_sizes[b]; ++k) out[items[pos++]] = static_cast<int>(b);
}

std::vector<int> assign_exact_within(const std::vector<std::vector<long>>& strata,
                                     const Eigen::MatrixXd& rule_rows, long n_items,
                                     Rng& rng) {
  // strata[s] lists item indices; rule_rows.row(s) is Pr(B | stratum s)
  std::vector<int> bag_ids(n_items, -1);
  for (std::size_t s = 0; s < strata.size(); ++s) {
    if (strata[s].empty()) continue;
    std::vector<long> items = strata[s];
    rng.shuffle(items);
    std::vector<double> quotas(rule_rows.cols());
    for (long b = 0; b < rule_rows.cols(); ++b)
      quotas[b] = rule_rows(static_cast<long>(s), b) * static_cast<double>(items.size());
    std::vector<long> counts = largest_remainder(quotas, static_cast<long>(items.size()));
    blocks_to_bags(items, counts, bag_ids);
  }
  return bag_ids;
}

std::vector<int> assign_sampled(const std::vector<long>& stratum_of,
                                const Eigen::MatrixXd& rule_rows, Rng& rng) {
  std::vector<int> bag_ids(stratum_of.size(), -1);
  std::vector<double> row(rule_rows.cols());
  for (std::size_t i = 0; i < stratum_of.size(); ++i) {
    for (long b = 0; b < rule_rows.cols(); ++b) row[b] = rule_rows(stratum_of[i], b);
    bag_ids[i] = static_cast<int>(rng.categorical(row));
  }
  return bag_ids;
}

}  // namespace

LLPInstance generate_naive(std::shared_ptr<const BaseDataset> ds, const GenSpec& spec) {
  if (spec.variant != Variant::Naive) throw Error("generate_naive: wrong variant");
  spec.validate(ds->n_items(), ds->n_classes);
  const long n = ds->n_items();
  Rng rng(derive_seed(spec.seed, "naive"));

  // Pr(B) = s_l / N; the requested proportion matrix cannot be honored
  // here (it would couple Y and B) and is kept as advisory provenance only
  Eigen::MatrixXd rule(1, spec.n_bags);
  for (long b = 0; b < spec.n_bags; ++b)
    rule(0, b) = static_cast<double>(spec.bag_sizes[b]) / static_cast<double>(n);

  std::vector<int> bag_ids;
  if (spec.assignment_mode == AssignmentMode::Exact) {
    std::vector<long> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    bag_ids.assign(n, -1);
    blocks_to_bags(perm, spec.bag_sizes, bag_ids);
  } else {
    bag_ids = assign_sampled(std::vector<long>(n, 0), rule, rng);
  }
  return make_instance(std::move(ds), std::move(bag_ids), spec);
}

Eigen::MatrixXi simple_exact_targets(const GenSpec& spec,
                                     const std::vector<long>& class_counts) {
  const long L = spec.n_bags;
  const long C = static_cast<long>(class_counts.size());
  const double slack = 0.5 * static_cast<double>(L);

  Eigen::MatrixXi targets(L, C);
  for (long c = 0; c < C; ++c) {
    std::vector<double> quotas(L);
    double expected = 0.0;
    for (long l = 0; l < L; ++l) {
      quotas[l] = spec.proportions(l, c) * static_cast<double>(spec.bag_sizes[l]);
      expected += quotas[l];
    }
    if (std::abs(expected - static_cast<double>(class_counts[c])) > slack) {
      long worst = 0;
      double worst_q = -1.0;
      for (long l = 0; l < L; ++l)
        if (quotas[l] > worst_q) { worst_q = quotas[l]; worst = l; }
      throw InfeasibleError(
          "simple generation infeasible: class " + std::to_string(c) + " budget is " +
              std::to_string(class_counts[c]) + " items but proportions request " +
              std::to_string(expected) + " (bag " + std::to_string(worst) + ")",
          worst, c);
    }
    std::vector<long> col = largest_remainder(quotas, class_counts[c]);
    for (long l = 0; l < L; ++l) targets(l, c) = static_cast<int>(col[l]);
  }

  // repair row sums to the exact bag sizes, moving single units within a
  // class column from surplus rows to deficit rows (column sums preserved)
  for (;;) {
    long over = -1, under = -1;
    for (long l = 0; l < L; ++l) {
      long row_sum = targets.row(l).sum();
      if (row_sum > spec.bag_sizes[l] && over < 0) over = l;
      if (row_sum < spec.bag_sizes[l] && under < 0) under = l;
    }
    if (over < 0 && under < 0) break;
    if (over < 0 || under < 0)
      throw Error("simple_exact_targets: marginal repair failed");
    // pick the class whose move costs the least rounding error
    long best_c = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (long c = 0; c < C; ++c) {
      if (targets(over, c) == 0) continue;
      double ideal_over = spec.proportions(over, c) * spec.bag_sizes[over];
      double ideal_under = spec.proportions(under, c) * spec.bag_sizes[under];
      double cost = std::abs(targets(over, c) - 1 - ideal_over) +
                    std::abs(targets(under, c) + 1 - ideal_under) -
                    std::abs(targets(over, c) - ideal_over) -
                    std::abs(targets(under, c) - ideal_under);
      if (cost < best_cost) { best_cost = cost; best_c = c; }
    }
    if (best_c < 0) throw Error("simple_exact_targets: marginal repair failed");
    --targets(over, best_c);
    ++targets(under, best_c);
  }
  return targets;
}

LLPInstance generate_simple(std::shared_ptr<const BaseDataset> ds, const GenSpec& spec) {
  if (spec.variant != Variant::Simple) throw Error("generate_simple: wrong variant");
  spec.validate(ds->n_items(), ds->n_classes);
  const long n = ds->n_items();
  const long L = spec.n_bags;
  const int C = ds->n_classes;
  const std::vector<long> class_counts = ds->class_counts();
  Rng rng(derive_seed(spec.seed, "simple"));

  std::vector<std::vector<long>> by_class(C);
  for (long i = 0; i < n; ++i) by_class[ds->labels[i]].push_back(i);

  std::vector<int> bag_ids;
  if (spec.assignment_mode == AssignmentMode::Exact) {
    Eigen::MatrixXi targets = simple_exact_targets(spec, class_counts);
    bag_ids.assign(n, -1);
    for (int c = 0; c < C; ++c) {
      std::vector<long> items = by_class[c];
      rng.shuffle(items);
      std::vector<long> sizes(L);
      for (long l = 0; l < L; ++l) sizes[l] = targets(l, c);
      blocks_to_bags(items, sizes, bag_ids);
    }
  } else {
    // Pr(B=l | Y=c) = p[l][c] * (s_l/N) / Pr(Y=c), columns renormalized
    // within the rounding slack; invalid conditionals are infeasible
    Eigen::MatrixXd rule(C, L);
    for (int c = 0; c < C; ++c) {
      const double pr_y = static_cast<double>(class_counts[c]) / static_cast<double>(n);
      double col_sum = 0.0;
      for (long l = 0; l < L; ++l) {
        double v = spec.proportions(l, c) *
                   (static_cast<double>(spec.bag_sizes[l]) / static_cast<double>(n)) / pr_y;
        if (v < -1e-12)
          throw InfeasibleError("simple generation infeasible: Pr(B=" + std::to_string(l) +
                                    "|Y=" + std::to_string(c) + ") < 0",
                                l, c);
        rule(c, l) = std::max(0.0, v);
        col_sum += rule(c, l);
      }
      const double slack =
          std::max(1e-9, 0.5 * static_cast<double>(L) / static_cast<double>(class_counts[c]));
      if (std::abs(col_sum - 1.0) > slack) {
        long worst = 0;
        rule.row(c).maxCoeff(&worst);
        throw InfeasibleError("simple generation infeasible: Pr(B|Y=" + std::to_string(c) +
                                  ") sums to " + std::to_string(col_sum),
                              worst, c);
      }
      rule.row(c) /= col_sum;
    }
    std::vector<long> stratum_of(n);
    for (long i = 0; i < n; ++i) stratum_of[i] = ds->labels[i];
    bag_ids = assign_sampled(stratum_of, rule, rng);
  }
  return make_instance(std::move(ds), std::move(bag_ids), spec);
}

LLPInstance generate_intermediate(std::shared_ptr<const BaseDataset> ds, const GenSpec& spec,
                                  const Clustering& cl, const GenOptions& opt) {
  if (spec.variant != Variant::Intermediate)
    throw Error("generate_intermediate: wrong variant");
  spec.validate(ds->n_items(), ds->n_classes);
  if (cl.n_clusters() != spec.n_clusters)
    throw Error("generate_intermediate: clustering Q != spec.n_clusters");
  if (static_cast<long>(cl.assignments.size()) != ds->n_items())
    throw Error("generate_intermediate: clustering length mismatch");

  const Eigen::MatrixXd p_yz = cluster_label_joint(cl, *ds);
  const Eigen::MatrixXd p_yb = target_yb(spec);

  double residual = 0.0;
  StochasticMatrix a =
      pgd_solve(p_yz, p_yb, opt.pgd, derive_seed(spec.seed, "intermediate-pgd"), &residual);

  Rng rng(derive_seed(spec.seed, "intermediate"));
  const long n = ds->n_items();
  std::vector<int> bag_ids;
  if (spec.assignment_mode == AssignmentMode::Exact) {
    std::vector<std::vector<long>> strata(cl.n_clusters());
    for (long i = 0; i < n; ++i) strata[cl.assignments[i]].push_back(i);
    bag_ids = assign_exact_within(strata, a.entries, n, rng);
  } else {
    std::vector<long> stratum_of(n);
    for (long i = 0; i < n; ++i) stratum_of[i] = cl.assignments[i];
    bag_ids = assign_sampled(stratum_of, a.entries, rng);
  }

  LLPInstance inst = make_instance(std::move(ds), std::move(bag_ids), spec);
  inst.meta.pgd_residual = residual;
  if (residual > opt.residual_warn_threshold)
    inst.meta.warnings.push_back(
        "infeasible_residual: target proportions are outside the convex hull of the "
        "clusters' proportions (PGD residual " +
        std::to_string(residual) + " > " + std::to_string(opt.residual_warn_threshold) + ")");
  return inst;
}

LLPInstance generate_hard(std::shared_ptr<const BaseDataset> ds, const GenSpec& spec,
                          const Clustering& cl, const GenOptions& opt) {
  if (spec.variant != Variant::Hard) throw Error("generate_hard: wrong variant");
  spec.validate(ds->n_items(), ds->n_classes);
  if (cl.n_clusters() != spec.n_clusters)
    throw Error("generate_hard: clustering Q != spec.n_clusters");
  if (static_cast<long>(cl.assignments.size()) != ds->n_items())
    throw Error("generate_hard: clustering length mismatch");

  const long n = ds->n_items();
  const long Q = cl.n_clusters();
  const int C = ds->n_classes;
  const long L = spec.n_bags;

  // random positive init normalized to total mass 1: almost surely free of
  // any factorization, which IPF's fiber rescaling then preserves
  Rng rng(derive_seed(spec.seed, "hard"));
  JointTable3D init(Q, C, L);
  for (double& v : init.values) v = rng.uniform(0.5, 1.5);
  double mass = init.total();
  for (double& v : init.values) v /= mass;

  const Eigen::MatrixXd marginal_zy = cluster_label_joint(cl, *ds).transpose();  // Q x C
  const Eigen::MatrixXd marginal_yb = target_yb(spec);                           // C x L
  Eigen::VectorXd marginal_z = marginal_zy.rowwise().sum();
  Eigen::VectorXd marginal_y = marginal_yb.rowwise().sum();
  Eigen::VectorXd marginal_b = marginal_yb.colwise().sum();

  double max_dev = 0.0;
  JointTable3D fitted = ipf_fit(init, marginal_zy, marginal_yb, marginal_z, marginal_y,
                                marginal_b, opt.ipf, &max_dev);

  // Pr(B | Z=z, Y=y), row index z*C + y
  Eigen::MatrixXd rule = Eigen::MatrixXd::Zero(Q * C, L);
  std::vector<std::vector<long>> strata(static_cast<std::size_t>(Q * C));
  for (long i = 0; i < n; ++i)
    strata[cl.assignments[i] * C + ds->labels[i]].push_back(i);

  std::vector<std::string> warnings;
  for (long z = 0; z < Q; ++z)
    for (long y = 0; y < C; ++y) {
      const long row = z * C + y;
      double row_mass = 0.0;
      for (long b = 0; b < L; ++b) row_mass += fitted.at(z, y, b);
      if (strata[row].empty()) {
        if (row_mass > 1e-9)
          warnings.push_back("empty stratum (z=" + std::to_string(z) + ",y=" +
                             std::to_string(y) + ") holds mass " + std::to_string(row_mass) +
                             "; redistributed proportionally over populated strata");
        rule.row(row).setConstant(1.0 / static_cast<double>(L));  // unused
        continue;
      }
      if (row_mass <= 0.0)
        throw Error("generate_hard: populated stratum with zero fitted mass");
      for (long b = 0; b < L; ++b) rule(row, b) = fitted.at(z, y, b) / row_mass;
    }

  std::vector<int> bag_ids;
  if (spec.assignment_mode == AssignmentMode::Exact) {
    bag_ids = assign_exact_within(strata, rule, n, rng);
  } else {
    std::vector<long> stratum_of(n);
    for (long i = 0; i < n; ++i) stratum_of[i] = cl.assignments[i] * C + ds->labels[i];
    bag_ids = assign_sampled(stratum_of, rule, rng);
  }

  LLPInstance inst = make_instance(std::move(ds), std::move(bag_ids), spec);
  inst.meta.ipf_max_dev = max_dev;
  inst.meta.warnings = std::move(warnings);
  return inst;
}

LLPInstance generate(std::shared_ptr<const BaseDataset> ds, const GenSpec& spec,
                     const Clustering* cl, const GenOptions& opt) {
  switch (spec.variant) {
    case Variant::Naive: return generate_naive(std::move(ds), spec);
    case Variant::Simple: return generate_simple(std::move(ds), spec);
    case Variant::Intermediate:
      if (!cl) throw Error("generate: Intermediate requires a clustering");
      return generate_intermediate(std::move(ds), spec, *cl, opt);
    case Variant::Hard:
      if (!cl) throw Error("generate: Hard requires a clustering");
      return generate_hard(std::move(ds), spec, *cl, opt);
  }
  throw Error("generate: unknown variant");
}

}  // namespace llp
