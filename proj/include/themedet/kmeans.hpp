#pragma once

#include <cstdint>
#include <vector>

#include "themedet/types.hpp"

namespace themedet {

using Matrix = std::vector<std::vector<double>>;

struct KMeansResult {
  Matrix centroids;              // k x dim
  std::vector<int> assignments;  // aligned with input points
  int iterations_run = 0;
  double distortion = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> distortion_history;  // one entry per Lloyd iteration
};

// Lloyd iteration with k-means++ seeding. Deterministic given seed; emptied
// clusters are reseeded with the point farthest from its centroid.
KMeansResult kmeans_fit(const Matrix& points, std::size_t k, std::uint64_t seed,
                        int max_iter = 300, double tol = 1e-9);

// Best-of-n restarts with seeds seed, seed+1, ...
KMeansResult kmeans_fit_restarts(const Matrix& points, std::size_t k, std::uint64_t seed,
                                 int restarts, int max_iter = 300, double tol = 1e-9);

// Sum of squared Euclidean distances from each point to its centroid.
double distortion(const Matrix& points, const Matrix& centroids,
                  const std::vector<int>& assignments);

struct ElbowResult {
  std::vector<int> k_grid;
  std::vector<std::vector<double>> distortions;  // [trial][grid index]
  std::vector<int> trial_inflections;
  int chosen_k = 0;
};

// Per trial, fits KMeans across the grid with seed+trial and takes the
// interior k maximizing the second difference d(k-step) - 2d(k) + d(k+step);
// chosen_k is the modal inflection across trials (ties -> smaller k).
ElbowResult elbow_select(const Matrix& points, int k_start, int k_step, int k_max, int trials,
                         std::uint64_t seed, int max_iter = 100, double tol = 1e-6);

// Inflection of a single distortion curve; exposed for the elbow tests.
int inflection_point(const std::vector<int>& k_grid, const std::vector<double>& distortions);

}  // namespace themedet
