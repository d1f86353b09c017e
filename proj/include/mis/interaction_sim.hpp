#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mis/binary_mask.hpp"
#include "mis/random.hpp"

namespace mis {

struct Click {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  bool positive = true;
  std::uint32_t order = 0;

  friend bool operator==(const Click&, const Click&) = default;
};

// Two disk-stamped rasters, one per click sign.
struct ClickMap {
  BinaryMask positive;
  BinaryMask negative;
  std::uint32_t disk_radius = 0;
};

inline constexpr std::uint32_t kDefaultDiskRadius = 5;
inline constexpr std::uint32_t kDefaultClickMargin = 5;

// |a & b| / |a | b|, and 1 when both are empty.
double iou(const BinaryMask& a, const BinaryMask& b);

// Squared Euclidean distance from every pixel to the nearest pixel flagged in
// `sources` (exact, separable lower-envelope transform). Pixels get +inf when
// no source exists.
std::vector<double> squared_distance_transform(std::span<const std::uint8_t> sources,
                                               std::uint32_t height,
                                               std::uint32_t width);

// Random positive clicks on the foreground shrunk by `margin` and negative
// clicks on background pixels whose distance to the foreground lies in
// [margin, 4 * margin]. Either pool falls back to its raw region when empty.
// Positives come first; orders are 0, 1, 2, ...
std::vector<Click> sample_random_clicks(const BinaryMask& target,
                                        std::uint32_t max_pos,
                                        std::uint32_t max_neg,
                                        std::uint32_t margin,
                                        RandomStream& rng);

// Corrective click for the largest 4-connected error region between gt and
// pred, placed at the pixel deepest inside that region (the image border
// counts as outside). Returns nullopt when the masks agree.
//
// Region choice: larger area, then false negative over false positive, then
// the region whose first pixel in row-major order comes earlier. Pixel ties
// go to the smallest (row, col).
std::optional<Click> next_click_center(const BinaryMask& gt, const BinaryMask& pred);

ClickMap encode_click_map(std::span<const Click> clicks, std::uint32_t height,
                          std::uint32_t width, std::uint32_t disk_radius);

// CSV with header `order,row,col,sign`, sign being '+' or '-'.
void write_clicks_csv(std::span<const Click> clicks, std::ostream& out);
void write_clicks_csv(std::span<const Click> clicks, const std::filesystem::path& path);
std::vector<Click> read_clicks_csv(const std::filesystem::path& path);

}  // namespace mis
