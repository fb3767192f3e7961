#include "themedet/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

namespace themedet {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Uniform double in [0,1) from the top 53 bits; keeps seeding portable.
double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Matrix kmeanspp_init(const Matrix& points, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = points.size();
  Matrix centroids;
  centroids.reserve(k);
  centroids.push_back(points[rng() % n]);

  std::vector<double> min_sq(n);
  for (std::size_t i = 0; i < n; ++i) min_sq[i] = sq_dist(points[i], centroids[0]);

  while (centroids.size() < k) {
    double total = 0.0;
    for (double w : min_sq) total += w;
    std::size_t chosen = 0;
    if (total > 0.0) {
      const double target = next_unit(rng) * total;
      double acc = 0.0;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += min_sq[i];
        if (acc > target) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = rng() % n;  // all remaining mass on duplicates
    }
    centroids.push_back(points[chosen]);
    for (std::size_t i = 0; i < n; ++i)
      min_sq[i] = std::min(min_sq[i], sq_dist(points[i], centroids.back()));
  }
  return centroids;
}

// Hartigan-style refinement: single-point moves with count-weighted deltas,
// applied in index order until a full sweep makes no move. Strictly lowers
// the objective, so Lloyd's local optima get polished away.
void refine_single_moves(const Matrix& points, Matrix& centroids, std::vector<int>& assignments) {
  const std::size_t n = points.size();
  const std::size_t k = centroids.size();
  const std::size_t dim = points.front().size();
  std::vector<std::size_t> counts(k, 0);
  for (int a : assignments) ++counts[static_cast<std::size_t>(a)];

  bool moved = true;
  int sweeps = 0;
  while (moved && sweeps++ < 100) {
    moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = static_cast<std::size_t>(assignments[i]);
      if (counts[a] <= 1) continue;
      const double remove_gain = static_cast<double>(counts[a]) /
                                 static_cast<double>(counts[a] - 1) *
                                 sq_dist(points[i], centroids[a]);
      double best_delta = -1e-12;  // strict improvement only
      std::size_t best_c = a;
      for (std::size_t c = 0; c < k; ++c) {
        if (c == a) continue;
        const double add_cost = static_cast<double>(counts[c]) /
                                static_cast<double>(counts[c] + 1) *
                                sq_dist(points[i], centroids[c]);
        if (add_cost - remove_gain < best_delta) {
          best_delta = add_cost - remove_gain;
          best_c = c;
        }
      }
      if (best_c == a) continue;
      for (std::size_t d = 0; d < dim; ++d) {
        centroids[a][d] =
            (centroids[a][d] * static_cast<double>(counts[a]) - points[i][d]) /
            static_cast<double>(counts[a] - 1);
        centroids[best_c][d] =
            (centroids[best_c][d] * static_cast<double>(counts[best_c]) + points[i][d]) /
            static_cast<double>(counts[best_c] + 1);
      }
      --counts[a];
      ++counts[best_c];
      assignments[i] = static_cast<int>(best_c);
      moved = true;
    }
  }

  // Recompute exact means to clear incremental-update drift.
  Matrix means(k, std::vector<double>(dim, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    auto& m = means[static_cast<std::size_t>(assignments[i])];
    for (std::size_t d = 0; d < dim; ++d) m[d] += points[i][d];
  }
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t d = 0; d < dim; ++d) means[c][d] /= static_cast<double>(counts[c]);
  centroids = std::move(means);
}

std::vector<int> assign_nearest(const Matrix& points, const Matrix& centroids) {
  std::vector<int> assignments(points.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = sq_dist(points[i], centroids[c]);
      if (d < best) {
        best = d;
        best_c = static_cast<int>(c);
      }
    }
    assignments[i] = best_c;
  }
  return assignments;
}

}  // namespace

double distortion(const Matrix& points, const Matrix& centroids,
                  const std::vector<int>& assignments) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    total += sq_dist(points[i], centroids[static_cast<std::size_t>(assignments[i])]);
  return total;
}

KMeansResult kmeans_fit(const Matrix& points, std::size_t k, std::uint64_t seed, int max_iter,
                        double tol) {
  if (points.empty()) throw DataError("kmeans_fit: no points");
  const std::size_t dim = points.front().size();
  for (const auto& p : points)
    if (p.size() != dim) throw DataError("kmeans_fit: ragged input");

  std::set<std::vector<double>> distinct(points.begin(), points.end());
  if (k == 0 || k > distinct.size())
    throw DataError("kmeans_fit: k (" + std::to_string(k) + ") exceeds distinct points (" +
                    std::to_string(distinct.size()) + ")");

  std::mt19937_64 rng(seed);
  KMeansResult result;
  result.seed = seed;
  result.centroids = kmeanspp_init(points, k, rng);

  std::vector<int> assignments;
  for (int iter = 1; iter <= max_iter; ++iter) {
    assignments = assign_nearest(points, result.centroids);

    // Reseed emptied clusters with the point farthest from its centroid.
    std::vector<std::size_t> counts(k, 0);
    for (int a : assignments) ++counts[static_cast<std::size_t>(a)];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      double worst = -1.0;
      std::size_t worst_i = 0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (counts[static_cast<std::size_t>(assignments[i])] <= 1) continue;
        const double d = sq_dist(points[i], result.centroids[static_cast<std::size_t>(assignments[i])]);
        if (d > worst) {
          worst = d;
          worst_i = i;
        }
      }
      --counts[static_cast<std::size_t>(assignments[worst_i])];
      assignments[worst_i] = static_cast<int>(c);
      counts[c] = 1;
      result.centroids[c] = points[worst_i];
    }

    Matrix means(k, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto& m = means[static_cast<std::size_t>(assignments[i])];
      for (std::size_t d = 0; d < dim; ++d) m[d] += points[i][d];
    }
    double movement = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t d = 0; d < dim; ++d) means[c][d] /= static_cast<double>(counts[c]);
      movement = std::max(movement, sq_dist(means[c], result.centroids[c]));
    }
    result.centroids = std::move(means);
    result.iterations_run = iter;
    result.distortion_history.push_back(distortion(points, result.centroids, assignments));
    if (std::sqrt(movement) < tol) break;
  }

  refine_single_moves(points, result.centroids, assignments);
  result.distortion_history.push_back(distortion(points, result.centroids, assignments));

  result.assignments = std::move(assignments);
  result.distortion = result.distortion_history.back();
  return result;
}

KMeansResult kmeans_fit_restarts(const Matrix& points, std::size_t k, std::uint64_t seed,
                                 int restarts, int max_iter, double tol) {
  if (restarts < 1) throw ConfigError("kmeans_fit_restarts: restarts must be >= 1");
  KMeansResult best;
  bool have = false;
  for (int r = 0; r < restarts; ++r) {
    auto res = kmeans_fit(points, k, seed + static_cast<std::uint64_t>(r), max_iter, tol);
    if (!have || res.distortion < best.distortion) {
      best = std::move(res);
      have = true;
    }
  }
  return best;
}

int inflection_point(const std::vector<int>& k_grid, const std::vector<double>& distortions) {
  if (k_grid.size() < 3) throw ConfigError("inflection_point: need at least 3 grid points");
  double best = -std::numeric_limits<double>::infinity();
  int best_k = k_grid[1];
  for (std::size_t i = 1; i + 1 < k_grid.size(); ++i) {
    const double second_diff = distortions[i - 1] - 2.0 * distortions[i] + distortions[i + 1];
    if (second_diff > best) {
      best = second_diff;
      best_k = k_grid[i];
    }
  }
  return best_k;
}

ElbowResult elbow_select(const Matrix& points, int k_start, int k_step, int k_max, int trials,
                         std::uint64_t seed, int max_iter, double tol) {
  if (k_start < 1) throw ConfigError("elbow_select: k_start must be >= 1");
  if (k_step < 1) throw ConfigError("elbow_select: k_step must be >= 1");
  if (trials < 1) throw ConfigError("elbow_select: trials must be >= 1");

  ElbowResult result;
  for (int k = k_start; k <= k_max; k += k_step) result.k_grid.push_back(k);
  if (result.k_grid.size() < 3)
    throw ConfigError("elbow_select: grid has fewer than 3 points");

  for (int t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = seed + static_cast<std::uint64_t>(t);
    std::vector<double> curve;
    for (int k : result.k_grid)
      curve.push_back(
          kmeans_fit(points, static_cast<std::size_t>(k), trial_seed, max_iter, tol).distortion);
    result.trial_inflections.push_back(inflection_point(result.k_grid, curve));
    result.distortions.push_back(std::move(curve));
  }

  std::map<int, int> votes;
  for (int k : result.trial_inflections) ++votes[k];
  int best_count = 0;
  for (const auto& [k, count] : votes) {
    if (count > best_count) {  // map order makes ties resolve to the smaller k
      best_count = count;
      result.chosen_k = k;
    }
  }
  return result;
}

}  // namespace themedet
