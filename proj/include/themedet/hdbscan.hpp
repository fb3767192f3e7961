#pragma once

#include <vector>

#include "themedet/kmeans.hpp"  // Matrix
#include "themedet/types.hpp"

namespace themedet {

struct MstEdge {
  int a = 0;
  int b = 0;
  double weight = 0.0;
};

struct HdbscanResult {
  std::vector<int> labels;  // cluster index per point, -1 for Noise
  int n_clusters = 0;
  int min_cluster_size = 0;
  int min_samples = 0;
  std::vector<double> core_distances;
  std::vector<MstEdge> mst;  // mutual-reachability MST, n-1 edges
};

// Core distances -> mutual reachability -> MST -> single-linkage hierarchy ->
// condensed tree (min_cluster_size) -> excess-of-mass cluster selection.
// Fewer points than min_cluster_size yields all Noise.
HdbscanResult hdbscan_fit(const Matrix& points, int min_cluster_size, int min_samples);

// max(core(a), core(b), d(a, b)); exposed for the property tests.
double mutual_reachability(const Matrix& points, const std::vector<double>& core_distances,
                           int a, int b);

}  // namespace themedet
