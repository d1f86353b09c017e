#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mis/binary_mask.hpp"
#include "mis/interaction_sim.hpp"
#include "mis/merge_tree.hpp"

namespace mis {

// One evaluation item. `tree` is optional context for tree-driven segmenters;
// its grid times patch_stride must match the ground-truth size.
struct EvalSample {
  std::string id;
  BinaryMask gt;
  std::shared_ptr<const MergeTree> tree;
};

struct SegmenterRequest {
  const EvalSample& sample;
  std::span<const Click> clicks;
  const ClickMap& click_map;
  const BinaryMask& previous;
};

// Prediction callback driven by the harness. Implementations must return a
// mask of the ground-truth size and be deterministic in their inputs.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual BinaryMask predict(const SegmenterRequest& request) const = 0;
};

// Returns the ground truth. Test tool only: it is the one segmenter allowed
// to read sample.gt.
class OracleSegmenter final : public Segmenter {
 public:
  BinaryMask predict(const SegmenterRequest& request) const override;
};

class EmptySegmenter final : public Segmenter {
 public:
  BinaryMask predict(const SegmenterRequest& request) const override;
};

class TreeSegmenter final : public Segmenter {
 public:
  BinaryMask predict(const SegmenterRequest& request) const override;
};

// Union, over positive clicks, of the largest tree node that contains the
// click's patch and no negative click's patch, at pixel resolution. When the
// click's own patch also holds a negative click, that single patch is used.
BinaryMask tree_segmenter(const MergeTree& tree, std::span<const Click> clicks,
                          std::uint32_t patch_stride);

struct EvalConfig {
  std::vector<double> targets{0.85, 0.90};
  std::uint32_t max_clicks = 20;
  std::uint32_t disk_radius = kDefaultDiskRadius;
};

struct SampleTrace {
  std::string id;
  std::vector<Click> clicks;
  std::vector<double> ious;                    // IoU after each click
  std::vector<std::uint32_t> clicks_to_target; // per target; max_clicks on failure
  std::vector<bool> reached;                   // per target
};

struct EvalResult {
  std::vector<double> targets;
  std::uint32_t max_clicks = 0;
  std::vector<SampleTrace> samples;
  std::vector<double> noc;                   // per target, failures counted at max_clicks
  std::vector<std::uint32_t> failure_count;  // per target
  std::vector<double> curve;                 // mean IoU after click 1..max_clicks

  double noc_at(double target) const;
  std::uint32_t failures_at(double target) const;
};

// Standard clicker loop. Each sample starts from an empty prediction; every
// round places the next corrective click, asks the segmenter for a mask and
// records its IoU, until all targets are met or max_clicks is used. A sample
// also stops early when the clicker would repeat an earlier click. Samples
// that stop early carry their last IoU forward in the curve.
EvalResult run_noc_eval(std::span<const EvalSample> dataset, const Segmenter& segmenter,
                        const EvalConfig& config = {});

// `sample_id,click_index,iou`
void write_iou_csv(const EvalResult& result, std::ostream& out);
// `click_index,mean_iou`
void write_curve_csv(const EvalResult& result, std::ostream& out);
// key = value lines: samples, max_clicks, NoC@T, failures@T.
void write_summary(const EvalResult& result, std::ostream& out);

struct SyntheticSceneOptions {
  std::uint32_t min_side = 6;   // patches
  std::uint32_t max_side = 10;
  std::uint32_t channels = 8;
  std::uint32_t patch_stride = 4;
  double center_scale = 3.0;
  double noise_sigma = 0.3;
};

// Seeded scenes split into two rectangles along a random row or column. The
// ground truth is one of the halves at pixel resolution; the tree is the
// constrained merge tree of the scene's features.
std::vector<EvalSample> synthetic_two_region_dataset(std::uint32_t count, std::uint64_t seed,
                                                     const SyntheticSceneOptions& options = {});

}  // namespace mis
