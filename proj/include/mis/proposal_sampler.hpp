#pragma once

#include <cstdint>

#include "mis/binary_mask.hpp"
#include "mis/merge_tree.hpp"
#include "mis/random.hpp"

namespace mis {

struct Proposal {
  NodeId node_id = 0;
  BinaryMask patch_mask;      // height_patches x width_patches
  double area_fraction = 0.0; // patches in node / n
  std::uint32_t depth = 0;    // descents from the root
};

struct SamplerConfig {
  double alpha = 0.9;              // per-descent decay of the continue probability
  double min_area_fraction = 0.05; // proposals below this share of the image are redrawn
  std::uint32_t max_retries = 100;
  std::uint64_t seed = 0;
};

void validate_config(const SamplerConfig& cfg);

// Walks down from the root: while a fresh uniform draw is below p and the
// current node has children, step to one child picked by a second draw
// (< 0.5 picks the first child) and multiply p by alpha.
NodeId top_down_sample(const MergeTree& tree, double alpha, RandomStream& rng);

// Patch-resolution mask of the leaves under `node_id`.
BinaryMask rasterize_node(const MergeTree& tree, NodeId node_id);

Proposal make_proposal(const MergeTree& tree, NodeId node_id);

// Redraws until the area filter passes, giving up after max_retries draws and
// returning the root proposal instead.
Proposal sample_proposal(const MergeTree& tree, const SamplerConfig& cfg,
                         RandomStream& rng);

}  // namespace mis
