#include "mis/proposal_sampler.hpp"

#include <string>

#include "mis/errors.hpp"

namespace mis {

void validate_config(const SamplerConfig& cfg) {
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) {
    throw ArgumentError("alpha must lie in [0, 1]");
  }
  if (!(cfg.min_area_fraction >= 0.0 && cfg.min_area_fraction < 1.0)) {
    throw ArgumentError("min_area_fraction must lie in [0, 1)");
  }
  if (cfg.max_retries == 0) {
    throw ArgumentError("max_retries must be positive");
  }
}

NodeId top_down_sample(const MergeTree& tree, double alpha, RandomStream& rng) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ArgumentError("alpha must lie in [0, 1]");
  }
  double p = 1.0;
  NodeId node = tree.root();
  // The continue draw is taken before the leaf test, matching the loop
  // condition order; a leaf still consumes one draw.
  while (rng.uniform() < p && !tree.is_leaf(node)) {
    const auto& kids = tree.children(node);
    node = rng.uniform() < 0.5 ? kids[0] : kids[1];
    p *= alpha;
  }
  return node;
}

BinaryMask rasterize_node(const MergeTree& tree, NodeId node_id) {
  BinaryMask mask(tree.height_patches, tree.width_patches);
  for (NodeId leaf : subtree_leaves(tree, node_id)) {
    mask.set_index(static_cast<std::size_t>(leaf));
  }
  return mask;
}

Proposal make_proposal(const MergeTree& tree, NodeId node_id) {
  Proposal proposal;
  proposal.node_id = node_id;
  proposal.patch_mask = rasterize_node(tree, node_id);
  proposal.area_fraction = static_cast<double>(proposal.patch_mask.count()) /
                           static_cast<double>(tree.n_leaves);
  std::uint32_t depth = 0;
  const auto parent = parent_table(tree);
  for (NodeId id = node_id; parent[static_cast<std::size_t>(id)] >= 0;
       id = parent[static_cast<std::size_t>(id)]) {
    ++depth;
  }
  proposal.depth = depth;
  return proposal;
}

Proposal sample_proposal(const MergeTree& tree, const SamplerConfig& cfg,
                         RandomStream& rng) {
  validate_config(cfg);
  const double n = static_cast<double>(tree.n_leaves);
  for (std::uint32_t attempt = 0; attempt < cfg.max_retries; ++attempt) {
    const NodeId node = top_down_sample(tree, cfg.alpha, rng);
    const double area = tree.sizes[static_cast<std::size_t>(node)] / n;
    if (area >= cfg.min_area_fraction) {
      return make_proposal(tree, node);
    }
  }
  return make_proposal(tree, tree.root());
}

}  // namespace mis
