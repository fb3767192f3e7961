#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "themedet/kmeans.hpp"  // Matrix
#include "themedet/types.hpp"

namespace themedet {

// A fitted clustering plus the id-aligned assignment table; what evaluate
// needs, independent of the algorithm that produced it.
struct ClusterModel {
  std::string algorithm;  // "kmeans" | "hdbscan"
  std::uint64_t seed = 0;
  Matrix centroids;
  std::vector<std::string> ids;
  std::vector<int> assignments;  // -1 = Noise
  int iterations = 0;
  double distortion = 0.0;
  int min_cluster_size = 0;
  int min_samples = 0;

  int noise_count() const;
};

// Binary artifact: magic "TDM1", algorithm, params, centroid matrix (f32le,
// mirroring the embedding format), assignment table.
void save_cluster_model(const ClusterModel& model, const std::string& path);
ClusterModel load_cluster_model(const std::string& path);

// JSON summary: algorithm, k, dim, seed, distortion, iterations, noise count.
std::string cluster_model_summary_json(const ClusterModel& model);

}  // namespace themedet
