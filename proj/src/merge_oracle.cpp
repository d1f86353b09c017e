#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <tuple>

#include "mis/errors.hpp"
#include "mis/merge_tree.hpp"

namespace mis {

MergeTree brute_force_merge(const FeatureGrid& grid, bool use_connectivity) {
  const std::size_t n = grid.num_patches();
  if (n < 2) {
    throw ArgumentError("brute_force_merge needs at least two patches");
  }
  const std::uint32_t height = grid.height_patches();
  const std::uint32_t width = grid.width_patches();

  MergeTree tree;
  tree.n_leaves = static_cast<std::uint32_t>(n);
  tree.height_patches = height;
  tree.width_patches = width;
  tree.patch_stride = grid.patch_stride();
  tree.connectivity_used = use_connectivity;
  tree.sizes.assign(2 * n - 1, 0);
  tree.centroids.assign(2 * n - 1, {});
  for (std::size_t i = 0; i < n; ++i) {
    tree.sizes[i] = 1;
    const auto f = grid.patch(i);
    tree.centroids[i].assign(f.begin(), f.end());
  }

  // label[p]: live node that currently owns patch p.
  std::vector<NodeId> label(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = static_cast<NodeId>(i);
  std::set<NodeId> live;
  for (std::size_t i = 0; i < n; ++i) live.insert(static_cast<NodeId>(i));

  for (std::size_t k = 0; k + 1 < n; ++k) {
    // Candidate pairs as (lo, hi).
    std::set<std::pair<NodeId, NodeId>> pairs;
    if (use_connectivity) {
      for (std::uint32_t r = 0; r < height; ++r) {
        for (std::uint32_t c = 0; c < width; ++c) {
          const std::size_t p = static_cast<std::size_t>(r) * width + c;
          auto consider = [&](std::size_t q) {
            const NodeId a = label[p];
            const NodeId b = label[q];
            if (a != b) pairs.emplace(std::min(a, b), std::max(a, b));
          };
          if (c + 1 < width) consider(p + 1);
          if (r + 1 < height) consider(p + width);
        }
      }
    } else {
      for (auto i = live.begin(); i != live.end(); ++i) {
        for (auto j = std::next(i); j != live.end(); ++j) pairs.emplace(*i, *j);
      }
    }

    bool found = false;
    double best_cost = 0.0;
    std::pair<NodeId, NodeId> best_pair;
    for (const auto& [a, b] : pairs) {
      const auto ia = static_cast<std::size_t>(a);
      const auto ib = static_cast<std::size_t>(b);
      const double cost = ward_cost(tree.sizes[ia], tree.centroids[ia],
                                    tree.sizes[ib], tree.centroids[ib]);
      if (std::isnan(cost)) {
        throw InternalError("NaN merge cost");
      }
      if (!found || std::tie(cost, a, b) <
                        std::tie(best_cost, best_pair.first, best_pair.second)) {
        found = true;
        best_cost = cost;
        best_pair = {a, b};
      }
    }
    if (!found) {
      throw InternalError("no candidate pair");
    }

    const auto [a, b] = best_pair;
    const auto merged = static_cast<NodeId>(n + k);
    tree.rows.push_back(ordered_children(a, b, tree.sizes));
    tree.costs.push_back(best_cost);
    auto cluster = merge_centroid(tree.sizes[static_cast<std::size_t>(a)],
                                  tree.centroids[static_cast<std::size_t>(a)],
                                  tree.sizes[static_cast<std::size_t>(b)],
                                  tree.centroids[static_cast<std::size_t>(b)]);
    tree.sizes[n + k] = static_cast<std::uint32_t>(cluster.size);
    tree.centroids[n + k] = std::move(cluster.centroid);
    for (auto& l : label) {
      if (l == a || l == b) l = merged;
    }
    live.erase(a);
    live.erase(b);
    live.insert(merged);
  }
  return tree;
}

}  // namespace mis
