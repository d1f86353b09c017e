#include "mis/bench.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>

#include "mis/errors.hpp"
#include "mis/merge_tree.hpp"

namespace mis {

FeatureGrid random_feature_grid(std::uint32_t height, std::uint32_t width,
                                std::uint32_t channels, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<float> data(static_cast<std::size_t>(height) * width * channels);
  for (float& v : data) v = static_cast<float>(rng.gaussian(0.0, 1.0));
  return FeatureGrid(height, width, channels, std::move(data));
}

namespace {

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

double mean(const std::vector<double>& values) {
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace

BenchReport bench_connectivity(std::uint32_t grid_size, std::uint32_t channels,
                               std::uint32_t repeats, std::uint64_t seed) {
  if (static_cast<std::uint64_t>(grid_size) * grid_size < 64) {
    throw ArgumentError("bench grid must hold at least 64 patches");
  }
  if (repeats == 0 || channels == 0) {
    throw ArgumentError("repeats and channels must be positive");
  }
  const FeatureGrid grid = random_feature_grid(grid_size, grid_size, channels, seed);
  BenchReport report;
  report.grid_size = grid_size;
  report.channels = channels;

  std::optional<MergeTree> first_constrained, first_unconstrained;
  using Clock = std::chrono::steady_clock;
  for (std::uint32_t r = 0; r < repeats; ++r) {
    for (bool constrained : {true, false}) {
      const auto start = Clock::now();
      MergeTree tree = bottom_up_merge(grid, constrained);
      const std::chrono::duration<double> elapsed = Clock::now() - start;
      (constrained ? report.constrained_seconds : report.unconstrained_seconds)
          .push_back(elapsed.count());
      auto& first = constrained ? first_constrained : first_unconstrained;
      if (!first) {
        first = std::move(tree);
      } else if (!(*first == tree)) {
        report.trees_stable = false;
      }
    }
  }
  report.mean_constrained = mean(report.constrained_seconds);
  report.mean_unconstrained = mean(report.unconstrained_seconds);
  report.median_constrained = median(report.constrained_seconds);
  report.median_unconstrained = median(report.unconstrained_seconds);
  report.speedup = report.median_unconstrained / report.median_constrained;
  return report;
}

void write_bench_report(const BenchReport& report, std::ostream& out) {
  out << "grid = " << report.grid_size << "x" << report.grid_size << "x" << report.channels << '\n';
  out << "repeats = " << report.constrained_seconds.size() << '\n';
  out << std::fixed << std::setprecision(6);
  out << "constrained_mean_s = " << report.mean_constrained << '\n';
  out << "constrained_median_s = " << report.median_constrained << '\n';
  out << "unconstrained_mean_s = " << report.mean_unconstrained << '\n';
  out << "unconstrained_median_s = " << report.median_unconstrained << '\n';
  out << "constrained_images_per_s = " << 1.0 / report.mean_constrained << '\n';
  out << "unconstrained_images_per_s = " << 1.0 / report.mean_unconstrained << '\n';
  out << std::setprecision(2) << "speedup = " << report.speedup << "x\n";
  out << "trees_stable = " << (report.trees_stable ? "true" : "false") << '\n';
}

}  // namespace mis
