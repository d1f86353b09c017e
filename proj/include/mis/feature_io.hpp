#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mis/random.hpp"

namespace mis {

// H x W x C lattice of patch feature vectors, row-major and channel-last.
// Immutable once constructed; the constructor enforces every invariant.
class FeatureGrid {
 public:
  FeatureGrid(std::uint32_t height_patches, std::uint32_t width_patches,
              std::uint32_t channels, std::vector<float> data,
              std::uint32_t patch_stride = 1);

  std::uint32_t height_patches() const { return height_; }
  std::uint32_t width_patches() const { return width_; }
  std::uint32_t channels() const { return channels_; }
  std::uint32_t patch_stride() const { return stride_; }
  std::size_t num_patches() const {
    return static_cast<std::size_t>(height_) * width_;
  }

  std::size_t flat_index(std::uint32_t row, std::uint32_t col,
                         std::uint32_t ch) const {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + ch;
  }
  float at(std::uint32_t row, std::uint32_t col, std::uint32_t ch) const {
    return data_[flat_index(row, col, ch)];
  }

  // Feature vector of patch `index` (row-major patch order).
  std::span<const float> patch(std::size_t index) const {
    return {data_.data() + index * channels_, channels_};
  }
  std::span<const float> data() const { return data_; }

  friend bool operator==(const FeatureGrid&, const FeatureGrid&) = default;

 private:
  std::uint32_t height_;
  std::uint32_t width_;
  std::uint32_t channels_;
  std::uint32_t stride_;
  std::vector<float> data_;
};

// MISF on-disk layout, little-endian:
//   "MISF" | u32 version=1 | u32 height | u32 width | u32 channels |
//   u32 patch_stride | height*width*channels f32 payload.
inline constexpr char kMisfMagic[4] = {'M', 'I', 'S', 'F'};
inline constexpr std::uint32_t kMisfVersion = 1;
inline constexpr std::size_t kMisfHeaderBytes = 24;

FeatureGrid read_features(const std::filesystem::path& path);
void write_features(const FeatureGrid& grid, const std::filesystem::path& path);

// In-memory forms of the same format.
std::vector<std::uint8_t> encode_misf(const FeatureGrid& grid);
FeatureGrid decode_misf(std::span<const std::uint8_t> bytes);

// Raw-value check used by write paths that bypass FeatureGrid's constructor.
void validate_finite(std::span<const float> values);

struct SceneRegion {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  std::uint32_t rows = 1;
  std::uint32_t cols = 1;
  std::vector<float> center;
  double noise_sigma = 0.0;
};

// Axis-aligned rectangles that must tile the grid exactly (no overlap, no
// uncovered patch).
struct SceneDescriptor {
  std::uint32_t height_patches = 1;
  std::uint32_t width_patches = 1;
  std::uint32_t channels = 1;
  std::uint32_t patch_stride = 1;
  std::vector<SceneRegion> regions;
};

FeatureGrid synth_features(const SceneDescriptor& scene, std::uint64_t seed);

// Patch -> region index for a validated descriptor.
std::vector<std::uint32_t> scene_labels(const SceneDescriptor& scene);

}  // namespace mis
