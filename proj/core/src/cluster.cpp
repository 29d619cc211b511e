#include "llp/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include <json.hpp>

#include "llp/errors.hpp"
#include "llp/io.hpp"
#include "llp/parallel.hpp"
#include "llp/rng.hpp"

namespace llp {

std::vector<long> Clustering::cluster_sizes() const {
  std::vector<long> sizes(n_clusters(), 0);
  for (int z : assignments) ++sizes[z];
  return sizes;
}

namespace {

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& x, int q, Rng& rng) {
  const long n = x.rows();
  Eigen::MatrixXd centers(q, x.cols());
  std::vector<double> best_d2(n, std::numeric_limits<double>::max());

  long first = static_cast<long>(rng.next_below(static_cast<std::uint64_t>(n)));
  centers.row(0) = x.row(first);
  for (long i = 0; i < n; ++i)
    best_d2[i] = (x.row(i) - centers.row(0)).squaredNorm();

  for (int k = 1; k < q; ++k) {
    double total = 0.0;
    for (double d2 : best_d2) total += d2;
    long pick = -1;
    if (total <= 0.0) {
      // all mass at existing centers: take the lowest-index point that is
      // not already a center
      for (long i = 0; i < n && pick < 0; ++i) {
        bool dup = false;
        for (int c = 0; c < k; ++c)
          if ((x.row(i) - centers.row(c)).squaredNorm() == 0.0) { dup = true; break; }
        if (!dup) pick = i;
      }
      if (pick < 0) pick = static_cast<long>(rng.next_below(static_cast<std::uint64_t>(n)));
    } else {
      double u = rng.next_double() * total;
      double cum = 0.0;
      pick = n - 1;
      for (long i = 0; i < n; ++i) {
        cum += best_d2[i];
        if (u < cum) { pick = i; break; }
      }
    }
    centers.row(k) = x.row(pick);
    for (long i = 0; i < n; ++i)
      best_d2[i] = std::min(best_d2[i], (x.row(i) - centers.row(k)).squaredNorm());
  }
  return centers;
}

struct LloydResult {
  std::vector<int> assignments;
  Eigen::MatrixXd centroids;
  double inertia = 0.0;
  std::vector<double> trace;
};

LloydResult lloyd(const Eigen::MatrixXd& x, int q, std::uint64_t seed, int max_iter) {
  const long n = x.rows();
  Rng rng(seed);
  LloydResult r;
  r.centroids = kmeanspp_init(x, q, rng);
  r.assignments.assign(n, -1);
  std::vector<double> dist2(n, 0.0);

  auto assign_all = [&]() {
    bool changed = false;
    for (long i = 0; i < n; ++i) {
      int best = 0;
      double bd = (x.row(i) - r.centroids.row(0)).squaredNorm();
      for (int k = 1; k < q; ++k) {
        double d = (x.row(i) - r.centroids.row(k)).squaredNorm();
        if (d < bd) { bd = d; best = k; }
      }
      dist2[i] = bd;
      if (r.assignments[i] != best) { r.assignments[i] = best; changed = true; }
    }
    return changed;
  };

  for (int it = 0; it < max_iter; ++it) {
    bool changed = assign_all();

    // repair empty clusters: steal the globally farthest point
    std::vector<long> counts(q, 0);
    for (int a : r.assignments) ++counts[a];
    for (int k = 0; k < q; ++k) {
      while (counts[k] == 0) {
        long far = 0;
        double fd = -1.0;
        for (long i = 0; i < n; ++i)
          if (counts[r.assignments[i]] > 1 && dist2[i] > fd) { fd = dist2[i]; far = i; }
        --counts[r.assignments[far]];
        r.assignments[far] = k;
        ++counts[k];
        r.centroids.row(k) = x.row(far);
        dist2[far] = 0.0;
        changed = true;
      }
    }

    double inertia = 0.0;
    for (long i = 0; i < n; ++i)
      inertia += (x.row(i) - r.centroids.row(r.assignments[i])).squaredNorm();
    r.trace.push_back(inertia);

    // converged (assignments stable) or out of budget: state is consistent
    // here, so stop before touching the centroids again
    if ((!changed && it > 0) || it + 1 == max_iter) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(q, x.cols());
    for (long i = 0; i < n; ++i) sums.row(r.assignments[i]) += x.row(i);
    for (int k = 0; k < q; ++k) r.centroids.row(k) = sums.row(k) / counts[k];
  }

  r.inertia = r.trace.back();
  return r;
}

}  // namespace

Clustering kmeans(const BaseDataset& ds, int q, std::uint64_t seed, int n_init,
                  int max_iter) {
  const long n = ds.n_items();
  if (q < 1) throw Error("kmeans: q must be >= 1");
  if (q > n) throw Error("kmeans: q exceeds item count");
  if (n_init < 1) throw Error("kmeans: n_init must be >= 1");

  std::vector<LloydResult> results(n_init);
  parallel_for(static_cast<std::size_t>(n_init), [&](std::size_t r) {
    results[r] = lloyd(ds.features, q, derive_seed(seed, "kmeans-restart", r), max_iter);
  });

  std::size_t best = 0;
  for (std::size_t r = 1; r < results.size(); ++r)
    if (results[r].inertia < results[best].inertia) best = r;

  Clustering cl;
  cl.assignments = std::move(results[best].assignments);
  cl.centroids = std::move(results[best].centroids);
  cl.inertia = results[best].inertia;
  cl.inertia_trace = std::move(results[best].trace);
  return cl;
}

Eigen::MatrixXd cluster_label_joint(const Clustering& cl, const BaseDataset& ds) {
  if (cl.assignments.size() != ds.labels.size())
    throw Error("cluster_label_joint: length mismatch");
  const int q = cl.n_clusters();
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(ds.n_classes, q);
  for (std::size_t i = 0; i < cl.assignments.size(); ++i)
    joint(ds.labels[i], cl.assignments[i]) += 1.0;
  joint /= static_cast<double>(ds.n_items());
  return joint;
}

std::uint64_t dataset_fingerprint(const BaseDataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  mix(static_cast<std::uint64_t>(ds.n_items()));
  mix(static_cast<std::uint64_t>(ds.n_features()));
  for (long i = 0; i < ds.n_items(); ++i)
    for (long j = 0; j < ds.n_features(); ++j) {
      std::uint64_t bits;
      double v = ds.features(i, j);
      std::memcpy(&bits, &v, sizeof(bits));
      mix(bits);
    }
  return h;
}

Clustering kmeans_cached(const BaseDataset& ds, int q, std::uint64_t seed, int n_init,
                         int max_iter, const std::string& cache_dir) {
  std::uint64_t key = derive_seed(
      dataset_fingerprint(ds),
      {static_cast<std::uint64_t>(q), seed, static_cast<std::uint64_t>(n_init),
       static_cast<std::uint64_t>(max_iter)});
  char name[64];
  std::snprintf(name, sizeof(name), "kmeans_%016llx.json",
                static_cast<unsigned long long>(key));
  std::filesystem::path path = std::filesystem::path(cache_dir) / name;

  if (std::filesystem::exists(path)) {
    auto j = nlohmann::json::parse(read_text_file(path.string()));
    Clustering cl;
    cl.assignments = j.at("assignments").get<std::vector<int>>();
    cl.inertia = j.at("inertia").get<double>();
    auto cj = j.at("centroids");
    cl.centroids.resize(static_cast<long>(cj.size()), ds.n_features());
    for (long k = 0; k < cl.centroids.rows(); ++k)
      for (long d = 0; d < cl.centroids.cols(); ++d)
        cl.centroids(k, d) = cj.at(k).at(d).get<double>();
    return cl;
  }

  Clustering cl = kmeans(ds, q, seed, n_init, max_iter);
  nlohmann::ordered_json j;
  j["q"] = q;
  j["seed"] = seed;
  j["assignments"] = cl.assignments;
  j["inertia"] = cl.inertia;
  nlohmann::ordered_json cj = nlohmann::ordered_json::array();
  for (long k = 0; k < cl.centroids.rows(); ++k) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (long d = 0; d < cl.centroids.cols(); ++d) row.push_back(cl.centroids(k, d));
    cj.push_back(std::move(row));
  }
  j["centroids"] = std::move(cj);
  std::filesystem::create_directories(cache_dir);
  write_text_file(path.string(), j.dump() + "\n");
  return cl;
}

}  // namespace llp
