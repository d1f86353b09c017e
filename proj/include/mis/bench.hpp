#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mis/feature_io.hpp"

namespace mis {

struct BenchReport {
  std::uint32_t grid_size = 0;
  std::uint32_t channels = 0;
  std::vector<double> constrained_seconds;
  std::vector<double> unconstrained_seconds;
  double mean_constrained = 0.0;
  double mean_unconstrained = 0.0;
  double median_constrained = 0.0;
  double median_unconstrained = 0.0;
  double speedup = 0.0;  // median unconstrained / median constrained
  bool trees_stable = true;  // every repeat rebuilt identical trees
};

// grid_size x grid_size x channels features with N(0, 1) entries.
FeatureGrid random_feature_grid(std::uint32_t height, std::uint32_t width,
                                std::uint32_t channels, std::uint64_t seed);

// Times bottom_up_merge with and without the connectivity constraint on the
// same random grid, `repeats` times each.
BenchReport bench_connectivity(std::uint32_t grid_size, std::uint32_t channels,
                               std::uint32_t repeats, std::uint64_t seed);

void write_bench_report(const BenchReport& report, std::ostream& out);

}  // namespace mis
