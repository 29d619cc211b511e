#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "llp/dataset.hpp"

namespace llp {

struct Clustering {
  std::vector<int> assignments;  // length N, values in {0..Q-1}
  Eigen::MatrixXd centroids;     // Q x d
  double inertia = 0.0;
  std::vector<double> inertia_trace;  // per-Lloyd-iteration, winning restart

  int n_clusters() const { return static_cast<int>(centroids.rows()); }
  std::vector<long> cluster_sizes() const;
};

// Lloyd's algorithm with k-means++ seeding; best of n_init restarts by
// inertia (ties broken by lowest restart index). Empty clusters are
// repaired by reseeding to the point farthest from its assigned centroid.
Clustering kmeans(const BaseDataset& ds, int q, std::uint64_t seed, int n_init = 10,
                  int max_iter = 300);

// Joint distribution Pr(Y = c, Z = z) as a C x Q matrix; entries sum to 1.
Eigen::MatrixXd cluster_label_joint(const Clustering& cl, const BaseDataset& ds);

// Order-independent fingerprint of the feature matrix, used as a cache key.
std::uint64_t dataset_fingerprint(const BaseDataset& ds);

// kmeans with a JSON file cache keyed by (dataset fingerprint, q, seed,
// n_init, max_iter). cache_dir must exist.
Clustering kmeans_cached(const BaseDataset& ds, int q, std::uint64_t seed,
                         int n_init, int max_iter, const std::string& cache_dir);

}  // namespace llp
