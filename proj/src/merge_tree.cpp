#include "mis/merge_tree.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <tuple>

#include "mis/errors.hpp"

namespace mis {

double ward_cost(std::uint64_t size_a, std::span<const double> centroid_a,
                 std::uint64_t size_b, std::span<const double> centroid_b) {
  if (size_a == 0 || size_b == 0) {
    throw ArgumentError("ward_cost: cluster sizes must be positive");
  }
  if (centroid_a.size() != centroid_b.size()) {
    throw ArgumentError("ward_cost: centroid dimension mismatch");
  }
  double dist2 = 0.0;
  for (std::size_t i = 0; i < centroid_a.size(); ++i) {
    const double d = centroid_a[i] - centroid_b[i];
    dist2 += d * d;
  }
  const double sa = static_cast<double>(size_a);
  const double sb = static_cast<double>(size_b);
  return (sa * sb) / (sa + sb) * dist2;
}

MergedCluster merge_centroid(std::uint64_t size_a,
                             std::span<const double> centroid_a,
                             std::uint64_t size_b,
                             std::span<const double> centroid_b) {
  if (size_a == 0 || size_b == 0) {
    throw ArgumentError("merge_centroid: cluster sizes must be positive");
  }
  if (centroid_a.size() != centroid_b.size()) {
    throw ArgumentError("merge_centroid: centroid dimension mismatch");
  }
  const double sa = static_cast<double>(size_a);
  const double sb = static_cast<double>(size_b);
  MergedCluster out{size_a + size_b, std::vector<double>(centroid_a.size())};
  for (std::size_t i = 0; i < centroid_a.size(); ++i) {
    out.centroid[i] = (sa * centroid_a[i] + sb * centroid_b[i]) / (sa + sb);
  }
  return out;
}

// ---------------------------------------------------------------------------
// RegionAdjacency

RegionAdjacency::RegionAdjacency(std::size_t n_leaves)
    : neighbors_(n_leaves == 0 ? 0 : 2 * n_leaves - 1),
      live_(neighbors_.size(), false),
      live_count_(n_leaves) {
  std::fill(live_.begin(), live_.begin() + static_cast<std::ptrdiff_t>(n_leaves), true);
}

bool RegionAdjacency::connected(NodeId a, NodeId b) const {
  const auto& list = neighbors(a);
  return std::binary_search(list.begin(), list.end(), b);
}

void RegionAdjacency::add_edge(NodeId a, NodeId b) {
  if (a == b || !is_live(a) || !is_live(b)) {
    throw ArgumentError("add_edge: endpoints must be distinct live nodes");
  }
  auto insert_sorted = [](std::vector<NodeId>& list, NodeId id) {
    auto it = std::lower_bound(list.begin(), list.end(), id);
    if (it != list.end() && *it == id) return false;
    list.insert(it, id);
    return true;
  };
  if (insert_sorted(neighbors_[static_cast<std::size_t>(a)], b)) {
    insert_sorted(neighbors_[static_cast<std::size_t>(b)], a);
    ++edge_count_;
  }
}

const std::vector<NodeId>& RegionAdjacency::merge(NodeId a, NodeId b,
                                                  NodeId merged) {
  auto& list_a = neighbors_[static_cast<std::size_t>(a)];
  auto& list_b = neighbors_[static_cast<std::size_t>(b)];
  auto& out = neighbors_[static_cast<std::size_t>(merged)];
  out.clear();
  std::set_union(list_a.begin(), list_a.end(), list_b.begin(), list_b.end(),
                 std::back_inserter(out));
  std::erase_if(out, [&](NodeId id) { return id == a || id == b; });

  const bool joined = std::binary_search(list_a.begin(), list_a.end(), b);
  edge_count_ -= list_a.size() + list_b.size() - (joined ? 1 : 0);
  edge_count_ += out.size();

  for (NodeId m : out) {
    auto& list = neighbors_[static_cast<std::size_t>(m)];
    std::erase_if(list, [&](NodeId id) { return id == a || id == b; });
    // `merged` exceeds every existing id, so appending keeps the list sorted.
    list.push_back(merged);
  }
  list_a.clear();
  list_b.clear();
  live_[static_cast<std::size_t>(a)] = false;
  live_[static_cast<std::size_t>(b)] = false;
  live_[static_cast<std::size_t>(merged)] = true;
  --live_count_;
  return out;
}

std::vector<NodeId> RegionAdjacency::live_nodes() const {
  std::vector<NodeId> out;
  out.reserve(live_count_);
  for (std::size_t i = 0; i < live_.size(); ++i) {
    if (live_[i]) out.push_back(static_cast<NodeId>(i));
  }
  return out;
}

std::vector<std::pair<NodeId, NodeId>> RegionAdjacency::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(edge_count_);
  for (std::size_t i = 0; i < neighbors_.size(); ++i) {
    for (NodeId j : neighbors_[i]) {
      if (static_cast<NodeId>(i) < j) out.emplace_back(static_cast<NodeId>(i), j);
    }
  }
  return out;
}

RegionAdjacency build_adjacency(std::uint32_t height_patches,
                                std::uint32_t width_patches) {
  if (height_patches == 0 || width_patches == 0) {
    throw ArgumentError("build_adjacency: grid dimensions must be positive");
  }
  const std::size_t n = static_cast<std::size_t>(height_patches) * width_patches;
  RegionAdjacency adjacency(n);
  for (std::uint32_t r = 0; r < height_patches; ++r) {
    for (std::uint32_t c = 0; c < width_patches; ++c) {
      const auto id = static_cast<NodeId>(r * width_patches + c);
      if (c + 1 < width_patches) adjacency.add_edge(id, id + 1);
      if (r + 1 < height_patches) {
        adjacency.add_edge(id, id + static_cast<NodeId>(width_patches));
      }
    }
  }
  return adjacency;
}

std::array<NodeId, 2> ordered_children(NodeId a, NodeId b,
                                       std::span<const std::uint32_t> sizes) {
  const auto sa = sizes[static_cast<std::size_t>(a)];
  const auto sb = sizes[static_cast<std::size_t>(b)];
  if (sa != sb) return sa > sb ? std::array{a, b} : std::array{b, a};
  return a < b ? std::array{a, b} : std::array{b, a};
}

// ---------------------------------------------------------------------------
// bottom_up_merge

namespace {

// A candidate merge keyed by (cost, lo, hi). Lexicographic order on this
// triple is the selection rule shared with the brute-force reference.
struct Candidate {
  double cost;
  NodeId lo;
  NodeId hi;

  friend bool operator<(const Candidate& x, const Candidate& y) {
    return std::tie(x.cost, x.lo, x.hi) < std::tie(y.cost, y.lo, y.hi);
  }
  friend bool operator>(const Candidate& x, const Candidate& y) { return y < x; }
};

Candidate make_candidate(double cost, NodeId a, NodeId b) {
  if (std::isnan(cost)) {
    throw InternalError("NaN merge cost between nodes " + std::to_string(a) +
                        " and " + std::to_string(b));
  }
  return {cost, std::min(a, b), std::max(a, b)};
}

// Cluster statistics shared by both search strategies.
class ClusterTable {
 public:
  explicit ClusterTable(const FeatureGrid& grid)
      : n_(grid.num_patches()), sizes_(2 * n_ - 1, 0), centroids_(2 * n_ - 1) {
    for (std::size_t i = 0; i < n_; ++i) {
      sizes_[i] = 1;
      const auto feature = grid.patch(i);
      centroids_[i].assign(feature.begin(), feature.end());
    }
  }

  double cost(NodeId a, NodeId b) const {
    return ward_cost(sizes_[idx(a)], centroids_[idx(a)], sizes_[idx(b)],
                     centroids_[idx(b)]);
  }

  void merge(NodeId a, NodeId b, NodeId merged) {
    auto cluster = merge_centroid(sizes_[idx(a)], centroids_[idx(a)],
                                  sizes_[idx(b)], centroids_[idx(b)]);
    sizes_[idx(merged)] = static_cast<std::uint32_t>(cluster.size);
    centroids_[idx(merged)] = std::move(cluster.centroid);
  }

  std::span<const std::uint32_t> sizes() const { return sizes_; }

  MergeTree finish(const FeatureGrid& grid, bool use_connectivity,
                   std::vector<std::array<NodeId, 2>> rows,
                   std::vector<double> costs) && {
    MergeTree tree;
    tree.n_leaves = static_cast<std::uint32_t>(n_);
    tree.rows = std::move(rows);
    tree.sizes = std::move(sizes_);
    tree.centroids = std::move(centroids_);
    tree.costs = std::move(costs);
    tree.height_patches = grid.height_patches();
    tree.width_patches = grid.width_patches();
    tree.patch_stride = grid.patch_stride();
    tree.connectivity_used = use_connectivity;
    return tree;
  }

 private:
  static std::size_t idx(NodeId id) { return static_cast<std::size_t>(id); }

  std::size_t n_;
  std::vector<std::uint32_t> sizes_;
  std::vector<std::vector<double>> centroids_;
};

// Constrained search: lazy-deletion heap over adjacency edges. Costs between
// two live nodes never change, so an entry is current exactly when both of
// its endpoints are still live.
void merge_constrained(const FeatureGrid& grid, ClusterTable& clusters,
                       std::vector<std::array<NodeId, 2>>& rows,
                       std::vector<double>& costs) {
  const auto n = static_cast<NodeId>(grid.num_patches());
  RegionAdjacency adjacency =
      build_adjacency(grid.height_patches(), grid.width_patches());

  std::vector<Candidate> initial;
  initial.reserve(adjacency.edge_count());
  for (const auto& [a, b] : adjacency.edges()) {
    initial.push_back(make_candidate(clusters.cost(a, b), a, b));
  }
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap(
      std::greater<>{}, std::move(initial));

  for (NodeId k = 0; k < n - 1; ++k) {
    while (!heap.empty() &&
           !(adjacency.is_live(heap.top().lo) && adjacency.is_live(heap.top().hi))) {
      heap.pop();
    }
    if (heap.empty()) {
      throw InternalError("region graph disconnected before the root was formed");
    }
    const Candidate best = heap.top();
    heap.pop();

    const NodeId merged = n + k;
    rows.push_back(ordered_children(best.lo, best.hi, clusters.sizes()));
    costs.push_back(best.cost);
    clusters.merge(best.lo, best.hi, merged);
    for (NodeId m : adjacency.merge(best.lo, best.hi, merged)) {
      heap.push(make_candidate(clusters.cost(merged, m), merged, m));
    }
  }
}

// Unconstrained search: every live node caches its best partner. After a
// merge only nodes whose cached partner died need a rescan; the rest just
// compare against the new node.
void merge_unconstrained(const FeatureGrid& grid, ClusterTable& clusters,
                         std::vector<std::array<NodeId, 2>>& rows,
                         std::vector<double>& costs) {
  const auto n = static_cast<NodeId>(grid.num_patches());
  constexpr Candidate kNone{INFINITY, INT32_MAX, INT32_MAX};
  std::vector<Candidate> best(2 * static_cast<std::size_t>(n) - 1, kNone);
  std::vector<NodeId> live(static_cast<std::size_t>(n));
  for (NodeId i = 0; i < n; ++i) live[static_cast<std::size_t>(i)] = i;

  auto slot = [&](NodeId id) -> Candidate& { return best[static_cast<std::size_t>(id)]; };
  auto rescan = [&](NodeId m) {
    Candidate b = kNone;
    for (NodeId other : live) {
      if (other == m) continue;
      b = std::min(b, make_candidate(clusters.cost(m, other), m, other));
    }
    slot(m) = b;
  };

  for (std::size_t i = 0; i < live.size(); ++i) {
    for (std::size_t j = i + 1; j < live.size(); ++j) {
      const Candidate c = make_candidate(clusters.cost(live[i], live[j]), live[i], live[j]);
      slot(live[i]) = std::min(slot(live[i]), c);
      slot(live[j]) = std::min(slot(live[j]), c);
    }
  }

  std::vector<NodeId> stale;
  for (NodeId k = 0; k < n - 1; ++k) {
    Candidate chosen = kNone;
    for (NodeId m : live) chosen = std::min(chosen, slot(m));
    if (chosen.lo == INT32_MAX) {
      throw InternalError("no merge candidate among live nodes");
    }

    const NodeId merged = n + k;
    rows.push_back(ordered_children(chosen.lo, chosen.hi, clusters.sizes()));
    costs.push_back(chosen.cost);
    clusters.merge(chosen.lo, chosen.hi, merged);
    std::erase_if(live, [&](NodeId id) { return id == chosen.lo || id == chosen.hi; });

    stale.clear();
    Candidate merged_best = kNone;
    for (NodeId m : live) {
      const Candidate c = make_candidate(clusters.cost(merged, m), merged, m);
      merged_best = std::min(merged_best, c);
      const Candidate& cached = slot(m);
      const bool partner_died = cached.lo == chosen.lo || cached.lo == chosen.hi ||
                                cached.hi == chosen.lo || cached.hi == chosen.hi;
      if (partner_died) {
        stale.push_back(m);
      } else if (c < cached) {
        slot(m) = c;
      }
    }
    live.push_back(merged);
    slot(merged) = merged_best;
    for (NodeId m : stale) rescan(m);
  }
}

}  // namespace

MergeTree bottom_up_merge(const FeatureGrid& grid, bool use_connectivity) {
  const std::size_t n = grid.num_patches();
  if (n < 2) {
    throw ArgumentError("bottom_up_merge needs at least two patches");
  }
  ClusterTable clusters(grid);
  std::vector<std::array<NodeId, 2>> rows;
  std::vector<double> costs;
  rows.reserve(n - 1);
  costs.reserve(n - 1);
  if (use_connectivity) {
    merge_constrained(grid, clusters, rows, costs);
  } else {
    merge_unconstrained(grid, clusters, rows, costs);
  }
  return std::move(clusters).finish(grid, use_connectivity, std::move(rows),
                                    std::move(costs));
}

// ---------------------------------------------------------------------------
// Tree queries and validation

std::vector<NodeId> parent_table(const MergeTree& tree) {
  std::vector<NodeId> parent(tree.num_nodes(), -1);
  for (std::size_t k = 0; k < tree.rows.size(); ++k) {
    const auto node = static_cast<NodeId>(tree.n_leaves + k);
    for (NodeId child : tree.rows[k]) {
      parent[static_cast<std::size_t>(child)] = node;
    }
  }
  return parent;
}

std::vector<std::uint32_t> node_depths(const MergeTree& tree) {
  std::vector<std::uint32_t> depth(tree.num_nodes(), 0);
  // Parents always have larger ids than their children, so a descending sweep
  // visits every parent first.
  for (std::size_t k = tree.rows.size(); k-- > 0;) {
    const auto node = tree.n_leaves + k;
    for (NodeId child : tree.rows[k]) {
      depth[static_cast<std::size_t>(child)] = depth[node] + 1;
    }
  }
  return depth;
}

std::vector<NodeId> subtree_leaves(const MergeTree& tree, NodeId node) {
  if (node < 0 || static_cast<std::size_t>(node) >= tree.num_nodes()) {
    throw ArgumentError("node id " + std::to_string(node) + " out of range");
  }
  std::vector<NodeId> leaves;
  std::vector<NodeId> stack{node};
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    if (tree.is_leaf(id)) {
      leaves.push_back(id);
    } else {
      const auto& kids = tree.children(id);
      stack.push_back(kids[0]);
      stack.push_back(kids[1]);
    }
  }
  std::sort(leaves.begin(), leaves.end());
  return leaves;
}

void validate_tree(const MergeTree& tree) {
  const std::size_t n = tree.n_leaves;
  if (n < 2) {
    throw ValidationError("tree needs at least two leaves");
  }
  if (static_cast<std::size_t>(tree.height_patches) * tree.width_patches != n) {
    throw ValidationError("grid_dims do not multiply to n_leaves");
  }
  if (tree.patch_stride == 0) {
    throw ValidationError("patch_stride must be positive");
  }
  if (tree.rows.size() != n - 1 || tree.costs.size() != n - 1) {
    throw ValidationError("tree must record exactly n-1 merges");
  }
  if (tree.sizes.size() != 2 * n - 1) {
    throw ValidationError("sizes must have 2n-1 entries");
  }

  std::vector<bool> seen(2 * n - 1, false);
  for (std::size_t k = 0; k < n - 1; ++k) {
    const auto node = n + k;
    for (NodeId child : tree.rows[k]) {
      if (child < 0 || static_cast<std::size_t>(child) >= node) {
        throw ValidationError("row " + std::to_string(k) + " references node " +
                              std::to_string(child) + " before it exists");
      }
      if (seen[static_cast<std::size_t>(child)]) {
        throw ValidationError("node " + std::to_string(child) +
                              " appears more than once as a child");
      }
      seen[static_cast<std::size_t>(child)] = true;
    }
    if (!std::isfinite(tree.costs[k]) || tree.costs[k] < 0.0) {
      throw ValidationError("merge cost " + std::to_string(k) +
                            " is negative or non-finite");
    }
  }
  // n-1 rows with 2(n-1) distinct children drawn from 0..2n-3 cover them all.

  for (std::size_t i = 0; i < n; ++i) {
    if (tree.sizes[i] != 1) {
      throw ValidationError("leaf " + std::to_string(i) + " must have size 1");
    }
  }
  for (std::size_t k = 0; k < n - 1; ++k) {
    const auto& [a, b] = tree.rows[k];
    const auto expected = static_cast<std::uint64_t>(tree.sizes[static_cast<std::size_t>(a)]) +
                          tree.sizes[static_cast<std::size_t>(b)];
    if (tree.sizes[n + k] != expected) {
      throw ValidationError("size of node " + std::to_string(n + k) +
                            " is not the sum of its children");
    }
  }
  if (tree.sizes.back() != n) {
    throw ValidationError("root size must equal n_leaves");
  }

  if (tree.has_centroids()) {
    if (tree.centroids.size() != 2 * n - 1) {
      throw ValidationError("centroids must have 2n-1 entries");
    }
    const std::size_t dim = tree.centroids.front().size();
    for (const auto& c : tree.centroids) {
      if (c.size() != dim || dim == 0) {
        throw ValidationError("centroids have inconsistent dimension");
      }
      for (double v : c) {
        if (!std::isfinite(v)) throw ValidationError("non-finite centroid");
      }
    }
    for (std::size_t k = 0; k < n - 1; ++k) {
      const auto& [a, b] = tree.rows[k];
      const auto expect = merge_centroid(
          tree.sizes[static_cast<std::size_t>(a)], tree.centroids[static_cast<std::size_t>(a)],
          tree.sizes[static_cast<std::size_t>(b)], tree.centroids[static_cast<std::size_t>(b)]);
      for (std::size_t d = 0; d < dim; ++d) {
        const double got = tree.centroids[n + k][d];
        const double tol = 1e-9 * std::max(1.0, std::abs(expect.centroid[d]));
        if (std::abs(got - expect.centroid[d]) > tol) {
          throw ValidationError("centroid of node " + std::to_string(n + k) +
                                " disagrees with its children");
        }
      }
    }
  }
}

bool nodes_are_connected(const MergeTree& tree) {
  const std::size_t n = tree.n_leaves;
  const std::uint32_t width = tree.width_patches;
  const std::uint32_t height = tree.height_patches;
  // Label every patch with its current ancestor while replaying the merges,
  // then flood fill each newly formed node from one of its patches.
  std::vector<NodeId> owner(n);
  for (std::size_t i = 0; i < n; ++i) owner[i] = static_cast<NodeId>(i);
  std::vector<std::vector<std::uint32_t>> members(2 * n - 1);
  for (std::size_t i = 0; i < n; ++i) members[i] = {static_cast<std::uint32_t>(i)};

  std::vector<std::uint32_t> stack;
  std::vector<bool> visited(n, false);
  for (std::size_t k = 0; k < n - 1; ++k) {
    const auto node = static_cast<NodeId>(n + k);
    auto& mine = members[n + k];
    for (NodeId child : tree.rows[k]) {
      auto& theirs = members[static_cast<std::size_t>(child)];
      mine.insert(mine.end(), theirs.begin(), theirs.end());
      theirs.clear();
      theirs.shrink_to_fit();
    }
    for (std::uint32_t p : mine) owner[p] = node;

    std::size_t reached = 0;
    stack.assign(1, mine.front());
    visited[mine.front()] = true;
    while (!stack.empty()) {
      const std::uint32_t p = stack.back();
      stack.pop_back();
      ++reached;
      const std::uint32_t r = p / width;
      const std::uint32_t c = p % width;
      auto visit = [&](std::uint32_t q) {
        if (!visited[q] && owner[q] == node) {
          visited[q] = true;
          stack.push_back(q);
        }
      };
      if (r > 0) visit(p - width);
      if (r + 1 < height) visit(p + width);
      if (c > 0) visit(p - 1);
      if (c + 1 < width) visit(p + 1);
    }
    for (std::uint32_t p : mine) visited[p] = false;
    if (reached != mine.size()) return false;
  }
  return true;
}

void recompute_centroids(MergeTree& tree, const FeatureGrid& grid) {
  if (grid.num_patches() != tree.n_leaves ||
      grid.height_patches() != tree.height_patches ||
      grid.width_patches() != tree.width_patches) {
    throw ArgumentError("feature grid does not match the tree's grid_dims");
  }
  const std::size_t n = tree.n_leaves;
  tree.centroids.assign(2 * n - 1, {});
  for (std::size_t i = 0; i < n; ++i) {
    const auto feature = grid.patch(i);
    tree.centroids[i].assign(feature.begin(), feature.end());
  }
  for (std::size_t k = 0; k < tree.rows.size(); ++k) {
    const auto& [a, b] = tree.rows[k];
    tree.centroids[n + k] =
        merge_centroid(tree.sizes[static_cast<std::size_t>(a)], tree.centroids[static_cast<std::size_t>(a)],
                       tree.sizes[static_cast<std::size_t>(b)], tree.centroids[static_cast<std::size_t>(b)])
            .centroid;
  }
}

}  // namespace mis
