#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mis/bench.hpp"
#include "mis/errors.hpp"
#include "mis/feature_io.hpp"
#include "mis/interaction_sim.hpp"
#include "mis/losses.hpp"
#include "mis/merge_tree.hpp"
#include "mis/noc_eval.hpp"
#include "mis/proposal_sampler.hpp"

namespace mis::cli {

namespace fs = std::filesystem;

namespace {

// Raised after parsing when flag combinations are invalid.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) parts.push_back(part);
  return parts;
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError("cannot parse " + what + " value '" + text + "'");
  }
}

std::uint32_t parse_u32(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(text, &used);
    if (used != text.size() || v > UINT32_MAX) throw std::invalid_argument(text);
    return static_cast<std::uint32_t>(v);
  } catch (const std::exception&) {
    throw UsageError("cannot parse " + what + " value '" + text + "'");
  }
}

BilateralSigmas parse_sigmas(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 3) throw UsageError("--sigmas takes three comma-separated values");
  BilateralSigmas s{parse_double(parts[0], "--sigmas"), parse_double(parts[1], "--sigmas"),
                    parse_double(parts[2], "--sigmas")};
  if (!(s.spatial > 0 && s.luma > 0 && s.chroma > 0)) throw UsageError("--sigmas must be positive");
  return s;
}

// ROW,COL,ROWS,COLS,SIGMA,V0[,V1,...]; a single value is broadcast over channels.
SceneRegion parse_region(const std::string& text, std::uint32_t channels) {
  const auto parts = split(text, ',');
  if (parts.size() < 6) throw UsageError("--region needs ROW,COL,ROWS,COLS,SIGMA,CENTER...");
  SceneRegion region;
  region.row = parse_u32(parts[0], "--region");
  region.col = parse_u32(parts[1], "--region");
  region.rows = parse_u32(parts[2], "--region");
  region.cols = parse_u32(parts[3], "--region");
  region.noise_sigma = parse_double(parts[4], "--region");
  for (std::size_t i = 5; i < parts.size(); ++i) {
    region.center.push_back(static_cast<float>(parse_double(parts[i], "--region")));
  }
  if (region.center.size() == 1 && channels > 1) region.center.assign(channels, region.center[0]);
  return region;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

std::string numbered(const std::string& stem, std::uint32_t index, const std::string& suffix) {
  std::ostringstream name;
  name << stem << '_' << std::setw(3) << std::setfill('0') << index << suffix;
  return name.str();
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::uint32_t height = 8;
  std::uint32_t width = 8;
  std::uint32_t channels = 1;
  std::uint32_t stride = 8;
  std::vector<std::string> regions;
  std::uint64_t seed = 0;
  std::string gt_out;
  std::uint32_t gt_region = 0;
};

void run_synth(const SynthArgs& a, std::ostream& out) {
  SceneDescriptor scene;
  scene.height_patches = a.height;
  scene.width_patches = a.width;
  scene.channels = a.channels;
  scene.patch_stride = a.stride;
  for (const auto& text : a.regions) scene.regions.push_back(parse_region(text, a.channels));
  if (!a.gt_out.empty() && a.gt_region >= scene.regions.size()) {
    throw UsageError("--gt-region out of range");
  }
  const FeatureGrid grid = synth_features(scene, a.seed);
  write_features(grid, a.out);
  if (!a.gt_out.empty()) {
    const auto labels = scene_labels(scene);
    BinaryMask mask(a.height, a.width);
    for (std::size_t i = 0; i < labels.size(); ++i) mask.set_index(i, labels[i] == a.gt_region);
    write_pgm(mask.upsample(a.stride), a.gt_out);
  }
  out << "wrote " << a.out << " (" << a.height << "x" << a.width << "x" << a.channels << ")\n";
}

struct BuildArgs {
  std::string features;
  std::string out;
  bool no_connectivity = false;
  bool omit_centroids = false;
};

void run_build(const BuildArgs& a, std::ostream& out) {
  const FeatureGrid grid = read_features(a.features);
  const MergeTree tree = bottom_up_merge(grid, !a.no_connectivity);
  serialize_tree(tree, a.out, !a.omit_centroids);
  out << "wrote " << a.out << " (" << tree.n_leaves << " leaves, "
      << (tree.connectivity_used ? "constrained" : "unconstrained") << ")\n";
}

struct SampleArgs {
  std::string tree;
  std::string out;
  double alpha = 0.9;
  double min_area = 0.05;
  std::uint32_t max_retries = 100;
  std::uint32_t count = 1;
  std::uint64_t seed = 0;
  bool pixel = false;
};

void run_sample(const SampleArgs& a, std::ostream& out) {
  const MergeTree tree = deserialize_tree(a.tree);
  SamplerConfig cfg{a.alpha, a.min_area, a.max_retries, a.seed};
  validate_config(cfg);
  ensure_directory(a.out);
  RandomStream rng(a.seed);
  std::ostringstream index;
  index << "index,node_id,depth,area_fraction\n" << std::fixed << std::setprecision(6);
  for (std::uint32_t i = 0; i < a.count; ++i) {
    const Proposal p = sample_proposal(tree, cfg, rng);
    write_pgm(p.patch_mask, fs::path(a.out) / numbered("proposal", i, ".pgm"));
    if (a.pixel) {
      write_pgm(p.patch_mask.upsample(tree.patch_stride),
                fs::path(a.out) / numbered("proposal", i, "_px.pgm"));
    }
    index << i << ',' << p.node_id << ',' << p.depth << ',' << p.area_fraction << '\n';
  }
  write_text(fs::path(a.out) / "proposals.csv", index.str());
  out << index.str();
}

struct ClicksArgs {
  std::string target;
  std::string pred;
  std::string out;
  std::string map_out;
  std::uint32_t max_pos = 3;
  std::uint32_t max_neg = 3;
  std::uint32_t margin = kDefaultClickMargin;
  std::uint32_t radius = kDefaultDiskRadius;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void run_clicks(const ClicksArgs& a, std::ostream& out) {
  const BinaryMask target = read_pgm(a.target);
  std::vector<Click> clicks;
  if (!a.pred.empty()) {
    const auto click = next_click_center(target, read_pgm(a.pred));
    if (!click) throw Error("prediction already matches the target; no corrective click");
    clicks.push_back(*click);
  } else {
    if (!a.seed_given) throw UsageError("random click sampling requires --seed");
    RandomStream rng(a.seed);
    clicks = sample_random_clicks(target, a.max_pos, a.max_neg, a.margin, rng);
  }
  if (!a.out.empty()) {
    write_clicks_csv(clicks, fs::path(a.out));
  } else {
    write_clicks_csv(clicks, out);
  }
  if (!a.map_out.empty()) {
    const ClickMap map = encode_click_map(clicks, target.height(), target.width(), a.radius);
    write_pgm(map.positive, a.map_out + "_pos.pgm");
    write_pgm(map.negative, a.map_out + "_neg.pgm");
  }
}

struct LossArgs {
  std::string target;
  std::string pred;
  std::string image;
  std::string grad_out;
  double lambda = kDefaultSmoothnessWeight;
  std::string sigmas = "8,8,4";
};

void run_loss(const LossArgs& a, std::ostream& out) {
  const BilateralSigmas sigmas = parse_sigmas(a.sigmas);
  const BinaryMask target = read_pgm(a.target);
  const FeatureGrid pred_grid = read_features(a.pred);
  const FeatureGrid image = read_features(a.image);
  if (pred_grid.channels() != 1) throw ValidationError("prediction MISF must have 1 channel");
  if (image.channels() != 3) throw ValidationError("image MISF must have 3 (RGB) channels");
  if (image.height_patches() != pred_grid.height_patches() ||
      image.width_patches() != pred_grid.width_patches()) {
    throw ValidationError("image and prediction sizes differ");
  }
  const auto raw = pred_grid.data();
  const PredictionField q(pred_grid.height_patches(), pred_grid.width_patches(),
                          std::vector<double>(raw.begin(), raw.end()));
  const auto features =
      PixelFeatures::from_rgb(image.height_patches(), image.width_patches(), image.data());
  const AffinityField w = bilateral_affinity(features, sigmas);
  const TotalLoss loss = total_loss(target, q, w, a.lambda);
  out << "bce,smooth,total\n" << std::setprecision(10) << loss.bce << ',' << loss.smooth << ','
      << loss.total << '\n';
  if (!a.grad_out.empty()) {
    std::vector<float> grad(loss.gradient.begin(), loss.gradient.end());
    write_features(FeatureGrid(q.height(), q.width(), 1, std::move(grad)), a.grad_out);
  }
}

struct EvalArgs {
  std::string segmenter = "builtin:tree";
  std::vector<std::string> trees;
  std::vector<std::string> gts;
  std::uint32_t synthetic = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::uint32_t max_clicks = 20;
  std::vector<double> targets{0.85, 0.90};
  std::uint32_t radius = kDefaultDiskRadius;
  std::string out;
};

void run_eval(const EvalArgs& a, std::ostream& out) {
  std::unique_ptr<Segmenter> segmenter;
  if (a.segmenter == "builtin:oracle") {
    segmenter = std::make_unique<OracleSegmenter>();
  } else if (a.segmenter == "builtin:empty") {
    segmenter = std::make_unique<EmptySegmenter>();
  } else if (a.segmenter == "builtin:tree") {
    segmenter = std::make_unique<TreeSegmenter>();
  } else {
    throw UsageError("unknown segmenter '" + a.segmenter +
                     "' (expected builtin:oracle, builtin:empty or builtin:tree)");
  }
  if (a.trees.size() != a.gts.size()) throw UsageError("--tree and --gt must be given in pairs");
  if (a.synthetic == 0 && a.gts.empty()) throw UsageError("no samples: use --synthetic or --tree/--gt");
  if (a.synthetic > 0 && !a.seed_given) throw UsageError("--synthetic requires --seed");

  std::vector<EvalSample> dataset;
  if (a.synthetic > 0) dataset = synthetic_two_region_dataset(a.synthetic, a.seed);
  for (std::size_t i = 0; i < a.gts.size(); ++i) {
    EvalSample sample;
    sample.id = fs::path(a.gts[i]).stem().string();
    sample.gt = read_pgm(a.gts[i]);
    sample.tree = std::make_shared<const MergeTree>(deserialize_tree(a.trees[i]));
    dataset.push_back(std::move(sample));
  }

  EvalConfig config{a.targets, a.max_clicks, a.radius};
  const EvalResult result = run_noc_eval(dataset, *segmenter, config);
  std::ostringstream summary;
  write_summary(result, summary);
  out << summary.str();
  if (!a.out.empty()) {
    ensure_directory(a.out);
    std::ostringstream ious, curve;
    write_iou_csv(result, ious);
    write_curve_csv(result, curve);
    write_text(fs::path(a.out) / "ious.csv", ious.str());
    write_text(fs::path(a.out) / "curve.csv", curve.str());
    write_text(fs::path(a.out) / "summary.txt", summary.str());
  }
}

struct BenchArgs {
  std::uint32_t grid_size = 48;
  std::uint32_t channels = 32;
  std::uint32_t repeats = 5;
  std::uint64_t seed = 0;
};

void run_bench(const BenchArgs& a, std::ostream& out) {
  write_bench_report(bench_connectivity(a.grid_size, a.channels, a.repeats, a.seed), out);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-granularity interaction simulation engine", "mis"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic MISF feature grid");
  synth_cmd->add_option("--out", synth.out, "Output MISF path")->required();
  synth_cmd->add_option("--height", synth.height, "Patch rows")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--width", synth.width, "Patch columns")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--channels", synth.channels, "Feature channels")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--stride", synth.stride, "Patch stride in pixels")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--region", synth.regions,
                        "ROW,COL,ROWS,COLS,SIGMA,CENTER... (repeatable; must tile the grid)")
      ->required();
  synth_cmd->add_option("--seed", synth.seed, "Noise seed")->required();
  synth_cmd->add_option("--gt-out", synth.gt_out, "Optional PGM of one region at pixel resolution");
  synth_cmd->add_option("--gt-region", synth.gt_region, "Region index written by --gt-out");

  BuildArgs build;
  auto* build_cmd = app.add_subcommand("build-tree", "Build the Ward merge tree of a feature grid");
  build_cmd->add_option("--features", build.features, "Input MISF")->required()->check(CLI::ExistingFile);
  build_cmd->add_option("--out", build.out, "Output tree record")->required();
  build_cmd->add_flag("--no-connectivity", build.no_connectivity, "Allow merging non-adjacent regions");
  build_cmd->add_flag("--omit-centroids", build.omit_centroids, "Store the tree without centroids");

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample", "Draw top-down proposals from a tree");
  sample_cmd->add_option("--tree", sample.tree, "Tree record")->required()->check(CLI::ExistingFile);
  sample_cmd->add_option("--out", sample.out, "Output directory")->required();
  sample_cmd->add_option("--alpha", sample.alpha, "Decay coefficient")->check(CLI::Range(0.0, 1.0));
  sample_cmd->add_option("--min-area", sample.min_area, "Minimum area fraction")
      ->check(CLI::Range(0.0, 1.0));
  sample_cmd->add_option("--max-retries", sample.max_retries, "Draws before falling back to the root")
      ->check(CLI::PositiveNumber);
  sample_cmd->add_option("--count", sample.count, "Number of proposals");
  sample_cmd->add_option("--seed", sample.seed, "Sampling seed")->required();
  sample_cmd->add_flag("--pixel", sample.pixel, "Also write pixel-resolution masks");

  ClicksArgs clicks;
  auto* clicks_cmd = app.add_subcommand("clicks", "Simulate clicks on a target mask");
  clicks_cmd->add_option("--target", clicks.target, "Target mask (PGM)")->required()->check(CLI::ExistingFile);
  clicks_cmd->add_option("--pred", clicks.pred, "Prediction mask; emits the corrective click")
      ->check(CLI::ExistingFile);
  clicks_cmd->add_option("--out", clicks.out, "Click CSV (default: stdout)");
  clicks_cmd->add_option("--map-out", clicks.map_out, "Prefix for the two click-map PGMs");
  clicks_cmd->add_option("--max-pos", clicks.max_pos, "Maximum positive clicks")->check(CLI::PositiveNumber);
  clicks_cmd->add_option("--max-neg", clicks.max_neg, "Maximum negative clicks");
  clicks_cmd->add_option("--margin", clicks.margin, "Click margin in pixels");
  clicks_cmd->add_option("--radius", clicks.radius, "Click disk radius in pixels");
  auto* clicks_seed = clicks_cmd->add_option("--seed", clicks.seed, "Seed (required for random clicks)");

  LossArgs loss;
  auto* loss_cmd = app.add_subcommand("loss", "Evaluate BCE, smoothness and total loss");
  loss_cmd->add_option("--target", loss.target, "Pseudo-label mask (PGM)")->required()->check(CLI::ExistingFile);
  loss_cmd->add_option("--pred", loss.pred, "Prediction field (MISF, 1 channel)")->required()->check(CLI::ExistingFile);
  loss_cmd->add_option("--image", loss.image, "RGB image (MISF, 3 channels, 0-255)")->required()->check(CLI::ExistingFile);
  loss_cmd->add_option("--lambda", loss.lambda, "Smoothness weight")->check(CLI::NonNegativeNumber);
  loss_cmd->add_option("--sigmas", loss.sigmas, "Spatial,luma,chroma sigmas");
  loss_cmd->add_option("--grad-out", loss.grad_out, "Optional MISF of dL/dQ");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Run the NoC evaluation loop");
  eval_cmd->add_option("--segmenter", eval.segmenter, "builtin:oracle | builtin:empty | builtin:tree");
  eval_cmd->add_option("--tree", eval.trees, "Tree record per sample (repeatable)")->check(CLI::ExistingFile);
  eval_cmd->add_option("--gt", eval.gts, "Ground-truth PGM per sample (repeatable)")->check(CLI::ExistingFile);
  eval_cmd->add_option("--synthetic", eval.synthetic, "Generate this many two-region scenes");
  auto* eval_seed = eval_cmd->add_option("--seed", eval.seed, "Seed for --synthetic");
  eval_cmd->add_option("--max-clicks", eval.max_clicks, "Click budget per sample")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--target-iou", eval.targets, "Target IoU (repeatable)")
      ->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--radius", eval.radius, "Click disk radius in pixels");
  eval_cmd->add_option("--out", eval.out, "Directory for ious.csv, curve.csv, summary.txt");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time constrained vs unconstrained merging");
  bench_cmd->add_option("--grid-size", bench.grid_size, "Grid side in patches")->check(CLI::Range(8u, 4096u));
  bench_cmd->add_option("--channels", bench.channels, "Feature channels")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--repeats", bench.repeats, "Timed repeats")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "Grid seed")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    const auto parsed = app.get_subcommands();
    err << (parsed.empty() ? app.help() : parsed.front()->help());
    return kExitUsage;
  }

  try {
    if (app.got_subcommand(synth_cmd)) {
      run_synth(synth, out);
    } else if (app.got_subcommand(build_cmd)) {
      run_build(build, out);
    } else if (app.got_subcommand(sample_cmd)) {
      run_sample(sample, out);
    } else if (app.got_subcommand(clicks_cmd)) {
      clicks.seed_given = clicks_seed->count() > 0;
      run_clicks(clicks, out);
    } else if (app.got_subcommand(loss_cmd)) {
      run_loss(loss, out);
    } else if (app.got_subcommand(eval_cmd)) {
      eval.seed_given = eval_seed->count() > 0;
      run_eval(eval, out);
    } else if (app.got_subcommand(bench_cmd)) {
      run_bench(bench, out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    const auto parsed = app.get_subcommands();
    if (!parsed.empty()) err << parsed.front()->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace mis::cli
