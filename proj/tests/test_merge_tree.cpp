#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "mis/errors.hpp"
#include "mis/merge_tree.hpp"
#include "test_util.hpp"

namespace mis {
namespace {

using testing::TempDir;

FeatureGrid line_grid(std::vector<float> values) {
  const auto n = static_cast<std::uint32_t>(values.size());
  return FeatureGrid(1, n, 1, std::move(values));
}

TEST(WardCost, IdenticalCentroidsCostNothing) {
  const std::vector<double> a{1.5, -2.0, 3.25};
  EXPECT_EQ(ward_cost(4, a, 7, a), 0.0);
}

TEST(WardCost, MatchesSseIncrement) {
  const FeatureGrid grid = line_grid({1.0f, 3.0f, 6.0f});
  const std::vector<double> one{1.0}, three{3.0}, two{2.0}, six{6.0};
  EXPECT_DOUBLE_EQ(ward_cost(1, one, 1, three), 2.0);
  EXPECT_DOUBLE_EQ(ward_cost(1, one, 1, three),
                   testing::raw_sse(grid, {0, 1}) - testing::raw_sse(grid, {0}) -
                       testing::raw_sse(grid, {1}));
  EXPECT_NEAR(ward_cost(2, two, 1, six), 32.0 / 3.0, 1e-12);
  EXPECT_NEAR(ward_cost(2, two, 1, six),
              testing::raw_sse(grid, {0, 1, 2}) - testing::raw_sse(grid, {0, 1}), 1e-12);
}

TEST(WardCost, BitwiseSymmetric) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(5), b(5);
    for (auto& v : a) v = normal(gen);
    for (auto& v : b) v = normal(gen);
    const std::uint64_t sa = gen() % 50 + 1, sb = gen() % 50 + 1;
    EXPECT_EQ(ward_cost(sa, a, sb, b), ward_cost(sb, b, sa, a));
  }
}

TEST(WardCost, RejectsBadArguments) {
  const std::vector<double> a{1.0}, b{1.0, 2.0};
  EXPECT_THROW(ward_cost(0, a, 1, a), ArgumentError);
  EXPECT_THROW(ward_cost(1, a, 1, b), ArgumentError);
}

TEST(MergeCentroid, SizeWeightedMean) {
  const std::vector<double> a{0.0, 0.0}, b{3.0, 4.0}, c{2.0, 2.0}, d{5.0, 6.0};
  const MergedCluster ab = merge_centroid(1, a, 1, b);
  EXPECT_EQ(ab.size, 2u);
  EXPECT_EQ(ab.centroid, (std::vector<double>{1.5, 2.0}));
  const MergedCluster cd = merge_centroid(2, c, 1, d);
  EXPECT_EQ(cd.size, 3u);
  EXPECT_NEAR(cd.centroid[0], 3.0, 1e-15);
  EXPECT_NEAR(cd.centroid[1], 10.0 / 3.0, 1e-15);
}

TEST(Adjacency, LatticeEdgeCounts) {
  EXPECT_EQ(build_adjacency(1, 2).edges(), (std::vector<std::pair<NodeId, NodeId>>{{0, 1}}));
  EXPECT_EQ(build_adjacency(2, 2).edge_count(), 4u);
  EXPECT_EQ(build_adjacency(3, 3).edge_count(), 12u);
  for (std::uint32_t h = 1; h <= 6; ++h) {
    for (std::uint32_t w = 1; w <= 6; ++w) {
      EXPECT_EQ(build_adjacency(h, w).edge_count(), 2 * h * w - h - w) << h << "x" << w;
    }
  }
}

TEST(Adjacency, MergeUnitesNeighborhoods) {
  RegionAdjacency adj = build_adjacency(2, 2);  // 0-1, 0-2, 1-3, 2-3
  const auto& merged = adj.merge(0, 1, 4);
  EXPECT_EQ(merged, (std::vector<NodeId>{2, 3}));
  EXPECT_FALSE(adj.is_live(0));
  EXPECT_FALSE(adj.is_live(1));
  EXPECT_EQ(adj.live_nodes(), (std::vector<NodeId>{2, 3, 4}));
  EXPECT_EQ(adj.edges(), (std::vector<std::pair<NodeId, NodeId>>{{2, 3}, {2, 4}, {3, 4}}));
  EXPECT_EQ(adj.neighbors(2), (std::vector<NodeId>{3, 4}));
  EXPECT_TRUE(adj.connected(3, 4));
  EXPECT_FALSE(adj.connected(0, 2));
}

TEST(BottomUpMerge, TwoPatches) {
  for (bool conn : {true, false}) {
    const MergeTree tree = bottom_up_merge(line_grid({0.0f, 2.0f}), conn);
    ASSERT_EQ(tree.rows.size(), 1u);
    EXPECT_EQ(tree.rows[0], (std::array<NodeId, 2>{0, 1}));
    EXPECT_EQ(tree.root(), 2);
    EXPECT_DOUBLE_EQ(tree.costs[0], 2.0);
  }
}

TEST(BottomUpMerge, ThreePatchLine) {
  for (bool conn : {true, false}) {
    const MergeTree tree = bottom_up_merge(line_grid({0.0f, 1.0f, 10.0f}), conn);
    EXPECT_EQ(tree.rows,
              (std::vector<std::array<NodeId, 2>>{{0, 1}, {3, 2}}));
    EXPECT_DOUBLE_EQ(tree.costs[0], 0.5);
    EXPECT_NEAR(tree.costs[1], 2.0 / 3.0 * 90.25, 1e-12);
    EXPECT_NEAR(tree.costs[1], 60.1667, 1e-4);
    EXPECT_EQ(tree.sizes, (std::vector<std::uint32_t>{1, 1, 1, 2, 3}));
  }
}

TEST(BottomUpMerge, TiesGoToSmallestPair) {
  const FeatureGrid grid(2, 2, 1, {5.0f, 5.0f, 5.0f, 5.0f});
  for (bool conn : {true, false}) {
    const MergeTree tree = bottom_up_merge(grid, conn);
    EXPECT_EQ(tree.rows,
              (std::vector<std::array<NodeId, 2>>{{0, 1}, {2, 3}, {4, 5}}));
    EXPECT_EQ(tree.costs, (std::vector<double>{0.0, 0.0, 0.0}));
  }
}

TEST(BottomUpMerge, ConnectivityForbidsDistantPairs) {
  // 0 and 2 are identical but not adjacent.
  const FeatureGrid grid = line_grid({0.0f, 5.0f, 0.0f});
  const MergeTree constrained = bottom_up_merge(grid, true);
  EXPECT_EQ(constrained.rows[0], (std::array<NodeId, 2>{0, 1}));
  const MergeTree free = bottom_up_merge(grid, false);
  EXPECT_EQ(free.rows[0], (std::array<NodeId, 2>{0, 2}));
}

TEST(BottomUpMerge, RejectsTooSmallGrids) {
  EXPECT_THROW(bottom_up_merge(FeatureGrid(1, 1, 1, {1.0f}), true), ArgumentError);
}

TEST(BottomUpMerge, MatchesBruteForceOracle) {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 120; ++trial) {
    const auto h = static_cast<std::uint32_t>(gen() % 6 + 1);
    const auto w = static_cast<std::uint32_t>(gen() % 6 + 1);
    if (h * w < 2) continue;
    const auto c = static_cast<std::uint32_t>(gen() % 4 + 1);
    const FeatureGrid grid = testing::random_grid(h, w, c, gen(), trial % 2 == 0);
    for (bool conn : {true, false}) {
      ASSERT_EQ(bottom_up_merge(grid, conn), brute_force_merge(grid, conn))
          << "trial " << trial << " conn " << conn;
    }
  }
}

TEST(BottomUpMerge, Deterministic) {
  const FeatureGrid grid = testing::random_grid(12, 12, 6, 77, false);
  EXPECT_EQ(bottom_up_merge(grid, true), bottom_up_merge(grid, true));
  EXPECT_EQ(bottom_up_merge(grid, false), bottom_up_merge(grid, false));
}

TEST(BottomUpMerge, CostsAreSseIncrements) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const FeatureGrid grid = testing::random_grid(5, 6, 3, gen(), false);
    const MergeTree tree = bottom_up_merge(grid, trial % 2 == 0);
    for (std::size_t k = 0; k < tree.rows.size(); ++k) {
      const auto node = static_cast<NodeId>(tree.n_leaves + k);
      const double expected = testing::raw_sse(grid, subtree_leaves(tree, node)) -
                              testing::raw_sse(grid, subtree_leaves(tree, tree.rows[k][0])) -
                              testing::raw_sse(grid, subtree_leaves(tree, tree.rows[k][1]));
      EXPECT_NEAR(tree.costs[k], expected, 1e-9 * std::max(1.0, std::abs(expected)));
    }
  }
}

TEST(BottomUpMerge, TreeInvariants) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 20; ++trial) {
    const FeatureGrid grid = testing::random_grid(6, 7, 2, gen(), trial % 3 == 0);
    for (bool conn : {true, false}) {
      const MergeTree tree = bottom_up_merge(grid, conn);
      EXPECT_NO_THROW(validate_tree(tree));
      EXPECT_EQ(tree.sizes[static_cast<std::size_t>(tree.root())], 42u);
      std::vector<int> seen(tree.num_nodes(), 0);
      for (const auto& row : tree.rows) {
        ++seen[static_cast<std::size_t>(row[0])];
        ++seen[static_cast<std::size_t>(row[1])];
      }
      for (std::size_t id = 0; id + 1 < tree.num_nodes(); ++id) EXPECT_EQ(seen[id], 1);
      EXPECT_EQ(seen.back(), 0);
      if (conn) {
        EXPECT_TRUE(nodes_are_connected(tree));
      } else {
        // Global Ward merging never lowers its cost from one step to the next.
        for (std::size_t k = 1; k < tree.costs.size(); ++k) {
          EXPECT_GE(tree.costs[k], tree.costs[k - 1] - 1e-12 * std::max(1.0, tree.costs[k - 1]));
        }
      }
    }
  }
}

TEST(BottomUpMerge, UnconstrainedTreesCanBeDisconnected) {
  const MergeTree tree = bottom_up_merge(line_grid({0.0f, 5.0f, 0.0f}), false);
  EXPECT_FALSE(nodes_are_connected(tree));
}

TEST(TreeQueries, ParentsDepthsLeaves) {
  const MergeTree tree = bottom_up_merge(line_grid({0.0f, 1.0f, 10.0f}), true);
  EXPECT_EQ(parent_table(tree), (std::vector<NodeId>{3, 3, 4, 4, -1}));
  EXPECT_EQ(node_depths(tree), (std::vector<std::uint32_t>{2, 2, 1, 1, 0}));
  EXPECT_EQ(subtree_leaves(tree, 3), (std::vector<NodeId>{0, 1}));
  EXPECT_EQ(subtree_leaves(tree, 4), (std::vector<NodeId>{0, 1, 2}));
}

TEST(TreeIo, RoundTrip) {
  TempDir dir;
  const MergeTree tree = bottom_up_merge(testing::random_grid(4, 5, 3, 8, false), true);
  serialize_tree(tree, dir / "t.json");
  EXPECT_EQ(deserialize_tree(dir / "t.json"), tree);
}

TEST(TreeIo, ExampleRoundTrip) {
  const MergeTree tree = bottom_up_merge(line_grid({0.0f, 1.0f, 10.0f}), true);
  const MergeTree back = tree_from_text(tree_to_text(tree));
  EXPECT_EQ(back.rows, tree.rows);
  EXPECT_EQ(back.sizes, tree.sizes);
  EXPECT_EQ(back.costs, tree.costs);
}

TEST(TreeIo, OmittedCentroidsCanBeRecomputed) {
  TempDir dir;
  const FeatureGrid grid = testing::random_grid(5, 5, 4, 13, false);
  const MergeTree tree = bottom_up_merge(grid, true);
  serialize_tree(tree, dir / "t.json", false);
  MergeTree back = deserialize_tree(dir / "t.json");
  EXPECT_FALSE(back.has_centroids());
  EXPECT_EQ(back.rows, tree.rows);
  recompute_centroids(back, grid);
  ASSERT_EQ(back.centroids.size(), tree.centroids.size());
  for (std::size_t id = 0; id < tree.centroids.size(); ++id) {
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(back.centroids[id][k], tree.centroids[id][k], 1e-6);
    }
  }
}

TEST(TreeIo, DuplicateChildIsValidationError) {
  MergeTree tree = bottom_up_merge(line_grid({0.0f, 1.0f, 10.0f}), true);
  tree.centroids.clear();
  tree.rows[1] = {3, 3};
  EXPECT_THROW(validate_tree(tree), ValidationError);
  EXPECT_THROW(tree_from_text(tree_to_text(tree)), ValidationError);
}

TEST(TreeIo, BrokenInvariantsAreValidationErrors) {
  const MergeTree good = bottom_up_merge(line_grid({0.0f, 1.0f, 10.0f, 3.0f}), true);
  auto expect_invalid = [](MergeTree t) { EXPECT_THROW(validate_tree(t), ValidationError); };
  MergeTree t = good;
  t.sizes[4] = 3;
  expect_invalid(t);
  t = good;
  t.rows[0][0] = 6;  // child not yet created
  expect_invalid(t);
  t = good;
  t.costs[0] = std::nan("");
  expect_invalid(t);
  t = good;
  t.centroids[4][0] += 1.0;
  expect_invalid(t);
  t = good;
  t.width_patches = 5;
  expect_invalid(t);
}

TEST(TreeIo, MalformedTextIsFormatError) {
  EXPECT_THROW(tree_from_text("not json"), FormatError);
  EXPECT_THROW(tree_from_text("{\"format\": \"other\"}"), FormatError);
  const MergeTree tree = bottom_up_merge(line_grid({0.0f, 1.0f}), true);
  std::string text = tree_to_text(tree);
  text.replace(text.find("\"version\": 1"), 12, "\"version\": 9");
  EXPECT_THROW(tree_from_text(text), FormatError);
  EXPECT_THROW(deserialize_tree("/nonexistent-dir/t.json"), IoError);
}

}  // namespace
}  // namespace mis
