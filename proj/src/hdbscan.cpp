#include "themedet/hdbscan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>

namespace themedet {

namespace {

double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// Distance to the min_samples-th nearest neighbor, the point itself included.
std::vector<double> core_distances_of(const Matrix& points, int min_samples) {
  const std::size_t n = points.size();
  std::vector<double> core(n, 0.0);
  std::vector<double> row(n);
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(min_samples), n) - 1;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) row[j] = euclid(points[i], points[j]);
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end());
    core[i] = row[k];
  }
  return core;
}

std::vector<MstEdge> prim_mst(const Matrix& points, const std::vector<double>& core) {
  const std::size_t n = points.size();
  std::vector<MstEdge> edges;
  if (n < 2) return edges;
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<int> best_from(n, 0);
  in_tree[0] = true;
  for (std::size_t j = 1; j < n; ++j) {
    best[j] = std::max({core[0], core[j], euclid(points[0], points[j])});
    best_from[j] = 0;
  }
  for (std::size_t added = 1; added < n; ++added) {
    std::size_t next = 0;
    double next_w = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (!in_tree[j] && best[j] < next_w) {
        next_w = best[j];
        next = j;
      }
    in_tree[next] = true;
    edges.push_back({best_from[next], static_cast<int>(next), next_w});
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double w = std::max({core[next], core[j], euclid(points[next], points[j])});
      if (w < best[j]) {
        best[j] = w;
        best_from[j] = static_cast<int>(next);
      }
    }
  }
  return edges;
}

struct DendroNode {
  int left = -1;
  int right = -1;
  double distance = 0.0;
  int size = 1;
};

// Single-linkage dendrogram over the MST; points are nodes 0..n-1, merges
// n..2n-2, root last.
std::vector<DendroNode> single_linkage(std::vector<MstEdge> mst, std::size_t n) {
  std::stable_sort(mst.begin(), mst.end(),
                   [](const MstEdge& a, const MstEdge& b) { return a.weight < b.weight; });
  std::vector<DendroNode> nodes(2 * n - 1);
  std::vector<int> find(2 * n - 1);
  for (std::size_t i = 0; i < find.size(); ++i) find[i] = static_cast<int>(i);
  std::vector<int> root_of(2 * n - 1);
  for (std::size_t i = 0; i < root_of.size(); ++i) root_of[i] = static_cast<int>(i);

  auto find_root = [&](int x) {
    while (root_of[x] != x) {
      root_of[x] = root_of[root_of[x]];
      x = root_of[x];
    }
    return x;
  };

  int next = static_cast<int>(n);
  for (const auto& e : mst) {
    const int ra = find_root(e.a);
    const int rb = find_root(e.b);
    DendroNode& nn = nodes[static_cast<std::size_t>(next)];
    nn.left = ra;
    nn.right = rb;
    nn.distance = e.weight;
    nn.size = nodes[static_cast<std::size_t>(ra)].size + nodes[static_cast<std::size_t>(rb)].size;
    root_of[ra] = next;
    root_of[rb] = next;
    ++next;
  }
  return nodes;
}

struct CondensedRow {
  int parent = 0;
  int child = 0;  // < n: point; >= n: cluster
  double lambda = 0.0;
  int size = 1;
};

void collect_leaves(const std::vector<DendroNode>& nodes, int node, std::size_t n,
                    std::vector<int>& out) {
  if (node < static_cast<int>(n)) {
    out.push_back(node);
    return;
  }
  collect_leaves(nodes, nodes[static_cast<std::size_t>(node)].left, n, out);
  collect_leaves(nodes, nodes[static_cast<std::size_t>(node)].right, n, out);
}

std::vector<CondensedRow> condense_tree(const std::vector<DendroNode>& nodes, std::size_t n,
                                        int min_cluster_size) {
  std::vector<CondensedRow> rows;
  const int root = static_cast<int>(2 * n - 2);
  std::vector<int> relabel(nodes.size(), -1);
  relabel[static_cast<std::size_t>(root)] = static_cast<int>(n);
  int next_label = static_cast<int>(n) + 1;

  std::queue<int> frontier;
  frontier.push(root);
  while (!frontier.empty()) {
    const int node = frontier.front();
    frontier.pop();
    if (node < static_cast<int>(n)) continue;
    const auto& d = nodes[static_cast<std::size_t>(node)];
    const int label = relabel[static_cast<std::size_t>(node)];
    const double lambda =
        d.distance > 0.0 ? 1.0 / d.distance : std::numeric_limits<double>::infinity();
    const int left_size = nodes[static_cast<std::size_t>(d.left)].size;
    const int right_size = nodes[static_cast<std::size_t>(d.right)].size;
    const bool keep_left = left_size >= min_cluster_size;
    const bool keep_right = right_size >= min_cluster_size;

    if (keep_left && keep_right) {
      relabel[static_cast<std::size_t>(d.left)] = next_label++;
      rows.push_back({label, relabel[static_cast<std::size_t>(d.left)], lambda, left_size});
      relabel[static_cast<std::size_t>(d.right)] = next_label++;
      rows.push_back({label, relabel[static_cast<std::size_t>(d.right)], lambda, right_size});
      frontier.push(d.left);
      frontier.push(d.right);
    } else if (!keep_left && !keep_right) {
      std::vector<int> leaves;
      collect_leaves(nodes, d.left, n, leaves);
      collect_leaves(nodes, d.right, n, leaves);
      for (int leaf : leaves) rows.push_back({label, leaf, lambda, 1});
    } else {
      const int falling = keep_left ? d.right : d.left;
      const int surviving = keep_left ? d.left : d.right;
      std::vector<int> leaves;
      collect_leaves(nodes, falling, n, leaves);
      for (int leaf : leaves) rows.push_back({label, leaf, lambda, 1});
      relabel[static_cast<std::size_t>(surviving)] = label;
      frontier.push(surviving);
    }
  }
  return rows;
}

}  // namespace

double mutual_reachability(const Matrix& points, const std::vector<double>& core_distances,
                           int a, int b) {
  return std::max({core_distances[static_cast<std::size_t>(a)],
                   core_distances[static_cast<std::size_t>(b)],
                   euclid(points[static_cast<std::size_t>(a)], points[static_cast<std::size_t>(b)])});
}

HdbscanResult hdbscan_fit(const Matrix& points, int min_cluster_size, int min_samples) {
  if (min_cluster_size < 2) throw ConfigError("hdbscan_fit: min_cluster_size must be >= 2");
  if (min_samples < 1) throw ConfigError("hdbscan_fit: min_samples must be >= 1");

  HdbscanResult result;
  result.min_cluster_size = min_cluster_size;
  result.min_samples = min_samples;
  const std::size_t n = points.size();
  result.labels.assign(n, -1);
  if (n < static_cast<std::size_t>(min_cluster_size)) return result;

  result.core_distances = core_distances_of(points, min_samples);
  result.mst = prim_mst(points, result.core_distances);
  const auto dendro = single_linkage(result.mst, n);
  const auto condensed = condense_tree(dendro, n, min_cluster_size);

  // Excess-of-mass stability per condensed cluster.
  std::map<int, double> births;
  for (const auto& row : condensed)
    if (row.child >= static_cast<int>(n)) births[row.child] = row.lambda;
  std::map<int, double> stability;
  std::map<int, std::vector<int>> cluster_children;
  std::map<int, int> cluster_parent;
  stability[static_cast<int>(n)] = 0.0;
  for (const auto& row : condensed) {
    const double birth = births.count(row.parent) ? births[row.parent] : 0.0;
    const double lambda = std::isinf(row.lambda) ? 0.0 : row.lambda;  // guard degenerate zero-dist merges
    stability[row.parent] += (std::isinf(row.lambda) ? 0.0 : (lambda - birth)) *
                             static_cast<double>(row.size);
    if (row.child >= static_cast<int>(n)) {
      cluster_children[row.parent].push_back(row.child);
      cluster_parent[row.child] = row.parent;
      if (!stability.count(row.child)) stability[row.child] = 0.0;
    }
  }

  // Select clusters leaves-first; the root is never selected.
  std::vector<int> cluster_ids;
  for (const auto& [c, s] : stability)
    if (c != static_cast<int>(n)) cluster_ids.push_back(c);
  std::sort(cluster_ids.rbegin(), cluster_ids.rend());

  std::map<int, bool> selected;
  for (int c : cluster_ids) {
    double child_sum = 0.0;
    for (int ch : cluster_children[c]) child_sum += stability[ch];
    if (cluster_children[c].empty() || stability[c] >= child_sum) {
      selected[c] = true;
      // Deselect all descendants.
      std::queue<int> q;
      for (int ch : cluster_children[c]) q.push(ch);
      while (!q.empty()) {
        const int d = q.front();
        q.pop();
        selected[d] = false;
        for (int ch : cluster_children[d]) q.push(ch);
      }
    } else {
      selected[c] = false;
      stability[c] = child_sum;
    }
  }

  std::map<int, int> label_of;
  for (int c : cluster_ids)
    if (selected[c]) {
      const int next = static_cast<int>(label_of.size());
      label_of[c] = next;
    }
  // Renumber in ascending cluster-id order for stable output.
  {
    std::vector<int> sel;
    for (const auto& [c, l] : label_of) sel.push_back(c);
    std::sort(sel.begin(), sel.end());
    label_of.clear();
    for (std::size_t i = 0; i < sel.size(); ++i) label_of[sel[i]] = static_cast<int>(i);
  }
  result.n_clusters = static_cast<int>(label_of.size());

  for (const auto& row : condensed) {
    if (row.child >= static_cast<int>(n)) continue;
    int cur = row.parent;
    int label = -1;
    while (true) {
      if (label_of.count(cur)) {
        label = label_of[cur];
        break;
      }
      auto it = cluster_parent.find(cur);
      if (it == cluster_parent.end()) break;
      cur = it->second;
    }
    result.labels[static_cast<std::size_t>(row.child)] = label;
  }
  return result;
}

}  // namespace themedet
