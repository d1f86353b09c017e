#include "mis/feature_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "mis/errors.hpp"

namespace mis {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t value) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<std::uint8_t>(value >> shift));
  }
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t value = 0;
  for (int i = 3; i >= 0; --i) {
    value = (value << 8) | bytes[offset + i];
  }
  return value;
}

}  // namespace

void validate_finite(std::span<const float> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ValidationError("non-finite feature value at flat index " +
                            std::to_string(i));
    }
  }
}

FeatureGrid::FeatureGrid(std::uint32_t height_patches,
                         std::uint32_t width_patches, std::uint32_t channels,
                         std::vector<float> data, std::uint32_t patch_stride)
    : height_(height_patches),
      width_(width_patches),
      channels_(channels),
      stride_(patch_stride),
      data_(std::move(data)) {
  if (height_ == 0 || width_ == 0 || channels_ == 0 || stride_ == 0) {
    throw ValidationError("feature grid dimensions and stride must be positive");
  }
  const std::size_t expected =
      static_cast<std::size_t>(height_) * width_ * channels_;
  if (data_.size() != expected) {
    throw ValidationError("feature payload has " + std::to_string(data_.size()) +
                          " values, expected " + std::to_string(expected));
  }
  validate_finite(data_);
}

std::vector<std::uint8_t> encode_misf(const FeatureGrid& grid) {
  std::vector<std::uint8_t> out;
  out.reserve(kMisfHeaderBytes + grid.data().size() * 4);
  out.insert(out.end(), std::begin(kMisfMagic), std::end(kMisfMagic));
  put_u32(out, kMisfVersion);
  put_u32(out, grid.height_patches());
  put_u32(out, grid.width_patches());
  put_u32(out, grid.channels());
  put_u32(out, grid.patch_stride());
  for (float v : grid.data()) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

FeatureGrid decode_misf(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 ||
      std::memcmp(bytes.data(), kMisfMagic, sizeof(kMisfMagic)) != 0) {
    throw FormatError("missing MISF magic");
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kMisfVersion) {
    throw FormatError("unsupported MISF version " + std::to_string(version));
  }
  if (bytes.size() < kMisfHeaderBytes) {
    throw TruncationError("MISF header truncated");
  }
  const std::uint32_t height = get_u32(bytes, 8);
  const std::uint32_t width = get_u32(bytes, 12);
  const std::uint32_t channels = get_u32(bytes, 16);
  const std::uint32_t stride = get_u32(bytes, 20);
  if (height == 0 || width == 0 || channels == 0 || stride == 0) {
    throw FormatError("MISF header declares a zero dimension");
  }
  const std::uint64_t count =
      static_cast<std::uint64_t>(height) * width * channels;
  const std::uint64_t payload = bytes.size() - kMisfHeaderBytes;
  if (payload < count * 4) {
    throw TruncationError("MISF payload truncated: " + std::to_string(payload) +
                          " of " + std::to_string(count * 4) + " bytes");
  }
  if (payload > count * 4) {
    throw FormatError("trailing bytes after MISF payload");
  }
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes, kMisfHeaderBytes + 4 * i));
  }
  return FeatureGrid(height, width, channels, std::move(data), stride);
}

FeatureGrid read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_misf(bytes);
}

void write_features(const FeatureGrid& grid,
                    const std::filesystem::path& path) {
  // FeatureGrid cannot hold NaN, but re-check: a grid is the last line of
  // defense before bytes hit disk.
  validate_finite(grid.data());
  const auto bytes = encode_misf(grid);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw IoError("short write to " + path.string());
  }
}

std::vector<std::uint32_t> scene_labels(const SceneDescriptor& scene) {
  if (scene.height_patches == 0 || scene.width_patches == 0 ||
      scene.channels == 0 || scene.patch_stride == 0) {
    throw DescriptorError("scene dimensions must be positive");
  }
  if (scene.regions.empty()) {
    throw DescriptorError("scene needs at least one region");
  }
  constexpr std::uint32_t kUnset = UINT32_MAX;
  std::vector<std::uint32_t> labels(
      static_cast<std::size_t>(scene.height_patches) * scene.width_patches,
      kUnset);
  for (std::uint32_t k = 0; k < scene.regions.size(); ++k) {
    const SceneRegion& region = scene.regions[k];
    if (region.rows == 0 || region.cols == 0 ||
        region.row + region.rows > scene.height_patches ||
        region.col + region.cols > scene.width_patches) {
      throw DescriptorError("region " + std::to_string(k) +
                            " lies outside the grid");
    }
    if (region.center.size() != scene.channels) {
      throw DescriptorError("region " + std::to_string(k) +
                            " center has wrong dimension");
    }
    if (!(region.noise_sigma >= 0.0) || !std::isfinite(region.noise_sigma)) {
      throw DescriptorError("region " + std::to_string(k) +
                            " noise sigma must be finite and >= 0");
    }
    for (std::uint32_t r = region.row; r < region.row + region.rows; ++r) {
      for (std::uint32_t c = region.col; c < region.col + region.cols; ++c) {
        auto& label = labels[static_cast<std::size_t>(r) * scene.width_patches + c];
        if (label != kUnset) {
          throw DescriptorError("regions " + std::to_string(label) + " and " +
                                std::to_string(k) + " overlap");
        }
        label = k;
      }
    }
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kUnset) {
      throw DescriptorError("patch " + std::to_string(i) +
                            " is not covered by any region");
    }
  }
  return labels;
}

FeatureGrid synth_features(const SceneDescriptor& scene, std::uint64_t seed) {
  const auto labels = scene_labels(scene);
  RandomStream rng(seed);
  std::vector<float> data;
  data.reserve(labels.size() * scene.channels);
  for (std::uint32_t label : labels) {
    const SceneRegion& region = scene.regions[label];
    for (std::uint32_t ch = 0; ch < scene.channels; ++ch) {
      double value = region.center[ch];
      if (region.noise_sigma > 0.0) {
        value += rng.gaussian(0.0, region.noise_sigma);
      }
      data.push_back(static_cast<float>(value));
    }
  }
  return FeatureGrid(scene.height_patches, scene.width_patches, scene.channels,
                     std::move(data), scene.patch_stride);
}

}  // namespace mis
