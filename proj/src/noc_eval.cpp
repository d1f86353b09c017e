#include "mis/noc_eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mis/errors.hpp"
#include "mis/feature_io.hpp"

namespace mis {

BinaryMask OracleSegmenter::predict(const SegmenterRequest& request) const {
  return request.sample.gt;
}

BinaryMask EmptySegmenter::predict(const SegmenterRequest& request) const {
  return BinaryMask(request.sample.gt.height(), request.sample.gt.width());
}

BinaryMask TreeSegmenter::predict(const SegmenterRequest& request) const {
  if (!request.sample.tree) {
    throw ContractError("tree segmenter needs a merge tree for sample " + request.sample.id);
  }
  const MergeTree& tree = *request.sample.tree;
  return tree_segmenter(tree, request.clicks, tree.patch_stride);
}

BinaryMask tree_segmenter(const MergeTree& tree, std::span<const Click> clicks,
                          std::uint32_t patch_stride) {
  if (patch_stride == 0) throw ArgumentError("patch_stride must be positive");
  const std::uint32_t height = tree.height_patches * patch_stride;
  const std::uint32_t width = tree.width_patches * patch_stride;
  auto patch_of = [&](const Click& click) {
    if (click.row >= height || click.col >= width) {
      throw ArgumentError("click lies outside the tree's image");
    }
    return static_cast<NodeId>((click.row / patch_stride) * tree.width_patches +
                               click.col / patch_stride);
  };

  const auto parent = parent_table(tree);
  // Every ancestor of a negative patch is off limits.
  std::vector<bool> blocked(tree.num_nodes(), false);
  bool any_positive = false;
  for (const Click& click : clicks) {
    if (click.positive) {
      any_positive = true;
      continue;
    }
    for (NodeId id = patch_of(click); id >= 0 && !blocked[static_cast<std::size_t>(id)];
         id = parent[static_cast<std::size_t>(id)]) {
      blocked[static_cast<std::size_t>(id)] = true;
    }
  }
  if (!any_positive) throw ArgumentError("tree_segmenter needs at least one positive click");

  BinaryMask patches(tree.height_patches, tree.width_patches);
  for (const Click& click : clicks) {
    if (!click.positive) continue;
    NodeId node = patch_of(click);
    if (!blocked[static_cast<std::size_t>(node)]) {
      while (parent[static_cast<std::size_t>(node)] >= 0 &&
             !blocked[static_cast<std::size_t>(parent[static_cast<std::size_t>(node)])]) {
        node = parent[static_cast<std::size_t>(node)];
      }
    }
    for (NodeId leaf : subtree_leaves(tree, node)) patches.set_index(static_cast<std::size_t>(leaf));
  }
  return patches.upsample(patch_stride);
}

namespace {

std::size_t target_index(const std::vector<double>& targets, double target) {
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (std::abs(targets[i] - target) < 1e-12) return i;
  }
  throw ArgumentError("target IoU " + std::to_string(target) + " was not evaluated");
}

SampleTrace evaluate_sample(const EvalSample& sample, const Segmenter& segmenter,
                            const EvalConfig& config) {
  const std::size_t n_targets = config.targets.size();
  SampleTrace trace;
  trace.id = sample.id;
  trace.clicks_to_target.assign(n_targets, config.max_clicks);
  trace.reached.assign(n_targets, false);

  BinaryMask pred(sample.gt.height(), sample.gt.width());
  for (std::uint32_t click_index = 1; click_index <= config.max_clicks; ++click_index) {
    auto click = next_click_center(sample.gt, pred);
    if (!click) break;
    const bool repeated = std::any_of(trace.clicks.begin(), trace.clicks.end(), [&](const Click& c) {
      return c.row == click->row && c.col == click->col;
    });
    if (repeated) break;
    click->order = static_cast<std::uint32_t>(trace.clicks.size());
    trace.clicks.push_back(*click);

    const ClickMap map = encode_click_map(trace.clicks, sample.gt.height(), sample.gt.width(),
                                          config.disk_radius);
    BinaryMask next = segmenter.predict(SegmenterRequest{sample, trace.clicks, map, pred});
    if (!next.same_shape(sample.gt)) {
      throw ContractError("segmenter returned a " + std::to_string(next.height()) + "x" +
                          std::to_string(next.width()) + " mask for sample " + sample.id);
    }
    pred = std::move(next);
    const double score = iou(sample.gt, pred);
    trace.ious.push_back(score);

    bool all_met = true;
    for (std::size_t t = 0; t < n_targets; ++t) {
      if (!trace.reached[t] && score >= config.targets[t]) {
        trace.reached[t] = true;
        trace.clicks_to_target[t] = click_index;
      }
      all_met = all_met && trace.reached[t];
    }
    if (all_met) break;
  }
  return trace;
}

}  // namespace

double EvalResult::noc_at(double target) const { return noc[target_index(targets, target)]; }

std::uint32_t EvalResult::failures_at(double target) const {
  return failure_count[target_index(targets, target)];
}

EvalResult run_noc_eval(std::span<const EvalSample> dataset, const Segmenter& segmenter,
                        const EvalConfig& config) {
  if (config.max_clicks == 0) throw ArgumentError("max_clicks must be at least 1");
  if (config.targets.empty()) throw ArgumentError("at least one target IoU is required");
  for (double t : config.targets) {
    if (!(t > 0.0 && t <= 1.0)) throw ArgumentError("target IoU must lie in (0, 1]");
  }
  for (const EvalSample& sample : dataset) {
    if (sample.gt.empty_foreground()) {
      throw ArgumentError("sample " + sample.id + " has an empty ground truth");
    }
  }

  EvalResult result;
  result.targets = config.targets;
  result.max_clicks = config.max_clicks;
  result.samples.reserve(dataset.size());
  for (const EvalSample& sample : dataset) {
    result.samples.push_back(evaluate_sample(sample, segmenter, config));
  }

  const std::size_t n_targets = config.targets.size();
  result.noc.assign(n_targets, 0.0);
  result.failure_count.assign(n_targets, 0);
  result.curve.assign(config.max_clicks, 0.0);
  if (result.samples.empty()) return result;

  for (const SampleTrace& trace : result.samples) {
    for (std::size_t t = 0; t < n_targets; ++t) {
      result.noc[t] += trace.clicks_to_target[t];
      result.failure_count[t] += trace.reached[t] ? 0 : 1;
    }
    for (std::uint32_t k = 0; k < config.max_clicks; ++k) {
      const std::size_t at = std::min<std::size_t>(k, trace.ious.size() - 1);
      result.curve[k] += trace.ious[at];
    }
  }
  const double count = static_cast<double>(result.samples.size());
  for (double& v : result.noc) v /= count;
  for (double& v : result.curve) v /= count;
  return result;
}

namespace {

std::string target_label(double target) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << target;
  return out.str();
}

}  // namespace

void write_iou_csv(const EvalResult& result, std::ostream& out) {
  out << "sample_id,click_index,iou\n" << std::fixed << std::setprecision(6);
  for (const SampleTrace& trace : result.samples) {
    for (std::size_t k = 0; k < trace.ious.size(); ++k) {
      out << trace.id << ',' << k + 1 << ',' << trace.ious[k] << '\n';
    }
  }
}

void write_curve_csv(const EvalResult& result, std::ostream& out) {
  out << "click_index,mean_iou\n" << std::fixed << std::setprecision(6);
  for (std::size_t k = 0; k < result.curve.size(); ++k) {
    out << k + 1 << ',' << result.curve[k] << '\n';
  }
}

void write_summary(const EvalResult& result, std::ostream& out) {
  out << "samples = " << result.samples.size() << '\n';
  out << "max_clicks = " << result.max_clicks << '\n';
  out << std::fixed << std::setprecision(4);
  for (std::size_t t = 0; t < result.targets.size(); ++t) {
    const std::string label = target_label(result.targets[t]);
    out << "NoC@" << label << " = " << result.noc[t] << '\n';
    out << "failures@" << label << " = " << result.failure_count[t] << '\n';
  }
}

std::vector<EvalSample> synthetic_two_region_dataset(std::uint32_t count, std::uint64_t seed,
                                                     const SyntheticSceneOptions& options) {
  if (options.min_side < 2 || options.max_side < options.min_side) {
    throw ArgumentError("synthetic scene sides must satisfy 2 <= min_side <= max_side");
  }
  RandomStream rng(seed);
  std::vector<EvalSample> dataset;
  dataset.reserve(count);
  for (std::uint32_t s = 0; s < count; ++s) {
    SceneDescriptor scene;
    scene.height_patches = static_cast<std::uint32_t>(rng.uniform_int(options.min_side, options.max_side));
    scene.width_patches = static_cast<std::uint32_t>(rng.uniform_int(options.min_side, options.max_side));
    scene.channels = options.channels;
    scene.patch_stride = options.patch_stride;

    const bool split_rows = rng.uniform() < 0.5;
    const std::uint32_t side = split_rows ? scene.height_patches : scene.width_patches;
    const auto cut = static_cast<std::uint32_t>(rng.uniform_int(1, side - 1));
    SceneRegion first, second;
    if (split_rows) {
      first = {0, 0, cut, scene.width_patches, {}, options.noise_sigma};
      second = {cut, 0, scene.height_patches - cut, scene.width_patches, {}, options.noise_sigma};
    } else {
      first = {0, 0, scene.height_patches, cut, {}, options.noise_sigma};
      second = {0, cut, scene.height_patches, scene.width_patches - cut, {}, options.noise_sigma};
    }
    for (SceneRegion* region : {&first, &second}) {
      region->center.resize(options.channels);
      for (float& v : region->center) {
        v = static_cast<float>(rng.gaussian(0.0, options.center_scale));
      }
    }
    scene.regions = {first, second};
    const FeatureGrid grid = synth_features(scene, rng.engine()());

    const std::uint32_t target = rng.uniform() < 0.5 ? 0 : 1;
    const auto labels = scene_labels(scene);
    BinaryMask patches(scene.height_patches, scene.width_patches);
    for (std::size_t i = 0; i < labels.size(); ++i) patches.set_index(i, labels[i] == target);

    EvalSample sample;
    sample.id = "scene" + std::to_string(s);
    sample.gt = patches.upsample(scene.patch_stride);
    sample.tree = std::make_shared<const MergeTree>(bottom_up_merge(grid, true));
    dataset.push_back(std::move(sample));
  }
  return dataset;
}

}  // namespace mis
