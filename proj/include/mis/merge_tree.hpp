#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "mis/feature_io.hpp"

namespace mis {

// Node ids are 0-based: leaves are patches 0..n-1 in row-major order, merge
// row k creates node n+k, and the root is 2n-2.
using NodeId = std::int32_t;

struct MergeTree {
  std::uint32_t n_leaves = 0;
  // rows[k] holds the children of node n+k. The larger region comes first;
  // equal sizes are ordered by id.
  std::vector<std::array<NodeId, 2>> rows;
  std::vector<std::uint32_t> sizes;            // 2n-1 entries
  std::vector<std::vector<double>> centroids;  // 2n-1 entries, or empty
  std::vector<double> costs;                   // n-1 entries
  std::uint32_t height_patches = 0;
  std::uint32_t width_patches = 0;
  std::uint32_t patch_stride = 1;
  bool connectivity_used = false;

  std::size_t num_nodes() const { return 2 * static_cast<std::size_t>(n_leaves) - 1; }
  NodeId root() const { return static_cast<NodeId>(num_nodes() - 1); }
  bool is_leaf(NodeId id) const {
    return id >= 0 && static_cast<std::uint32_t>(id) < n_leaves;
  }
  const std::array<NodeId, 2>& children(NodeId internal) const {
    return rows[static_cast<std::size_t>(internal) - n_leaves];
  }
  bool has_centroids() const { return !centroids.empty(); }

  friend bool operator==(const MergeTree&, const MergeTree&) = default;
};

// Ward increment of merging two clusters: sa*sb/(sa+sb) * |mu_a - mu_b|^2.
// Bitwise symmetric in its two arguments.
double ward_cost(std::uint64_t size_a, std::span<const double> centroid_a,
                 std::uint64_t size_b, std::span<const double> centroid_b);

struct MergedCluster {
  std::uint64_t size = 0;
  std::vector<double> centroid;
};

// Size-weighted mean of two centroids.
MergedCluster merge_centroid(std::uint64_t size_a,
                             std::span<const double> centroid_a,
                             std::uint64_t size_b,
                             std::span<const double> centroid_b);

// Live region graph used by the constrained merge. Neighbor lists are kept
// sorted so iteration order never depends on insertion history.
class RegionAdjacency {
 public:
  // Capacity for every node a tree over `n_leaves` patches can create; only
  // the leaves start live.
  explicit RegionAdjacency(std::size_t n_leaves);

  bool is_live(NodeId id) const { return live_[static_cast<std::size_t>(id)]; }
  bool connected(NodeId a, NodeId b) const;
  const std::vector<NodeId>& neighbors(NodeId id) const {
    return neighbors_[static_cast<std::size_t>(id)];
  }

  void add_edge(NodeId a, NodeId b);

  // Retires a and b and makes `merged` live with the union of their
  // neighborhoods minus {a, b}.
  const std::vector<NodeId>& merge(NodeId a, NodeId b, NodeId merged);

  std::size_t live_count() const { return live_count_; }
  std::vector<NodeId> live_nodes() const;
  std::size_t edge_count() const { return edge_count_; }
  // All edges as (min, max), sorted.
  std::vector<std::pair<NodeId, NodeId>> edges() const;

 private:
  std::vector<std::vector<NodeId>> neighbors_;
  std::vector<bool> live_;
  std::size_t live_count_ = 0;
  std::size_t edge_count_ = 0;
};

// 4-adjacency of an H x W patch lattice: 2HW - H - W edges.
RegionAdjacency build_adjacency(std::uint32_t height_patches,
                                std::uint32_t width_patches);

// Greedy Ward agglomeration. Each step merges the live pair with the least
// cost (restricted to adjacent regions when use_connectivity is set); ties go
// to the lexicographically smallest (min id, max id) pair.
MergeTree bottom_up_merge(const FeatureGrid& grid, bool use_connectivity);

// Reference implementation that rescans every live pair each step and decides
// adjacency from the patch lattice directly. O(n^3); meant for n <= 64.
MergeTree brute_force_merge(const FeatureGrid& grid, bool use_connectivity);

// Child order for a new row: larger region first, then smaller id.
std::array<NodeId, 2> ordered_children(NodeId a, NodeId b,
                                       std::span<const std::uint32_t> sizes);

// Throws ValidationError when any structural invariant fails: row count,
// child ranges and uniqueness, size additivity, root size, cost finiteness,
// grid dims, and (when present) centroid consistency with the merge rule.
void validate_tree(const MergeTree& tree);

// parent[id] for every node; the root maps to -1.
std::vector<NodeId> parent_table(const MergeTree& tree);

// Number of descents from the root to every node.
std::vector<std::uint32_t> node_depths(const MergeTree& tree);

// Leaf ids under `node`, ascending.
std::vector<NodeId> subtree_leaves(const MergeTree& tree, NodeId node);

// True when every node's patch set forms one 4-connected component.
bool nodes_are_connected(const MergeTree& tree);

// Fills centroids from leaf features using the incremental merge rule.
void recompute_centroids(MergeTree& tree, const FeatureGrid& grid);

// Text record (JSON). Field names: format, version, n_leaves, grid_dims,
// patch_stride, connectivity_used, rows, sizes, costs, has_centroids and,
// when has_centroids is true, centroids.
void serialize_tree(const MergeTree& tree, const std::filesystem::path& path,
                    bool include_centroids = true);
MergeTree deserialize_tree(const std::filesystem::path& path);
std::string tree_to_text(const MergeTree& tree, bool include_centroids = true);
MergeTree tree_from_text(const std::string& text);

}  // namespace mis
