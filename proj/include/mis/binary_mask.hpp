#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mis {

// Row-major binary raster used for proposals, ground truth and predictions.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::uint32_t height, std::uint32_t width, bool fill = false)
      : height_(height), width_(width),
        bits_(static_cast<std::size_t>(height) * width, fill ? 1 : 0) {}

  std::uint32_t height() const { return height_; }
  std::uint32_t width() const { return width_; }
  std::size_t size() const { return bits_.size(); }

  bool get(std::uint32_t row, std::uint32_t col) const {
    return bits_[static_cast<std::size_t>(row) * width_ + col] != 0;
  }
  void set(std::uint32_t row, std::uint32_t col, bool value = true) {
    bits_[static_cast<std::size_t>(row) * width_ + col] = value ? 1 : 0;
  }
  bool operator[](std::size_t index) const { return bits_[index] != 0; }
  void set_index(std::size_t index, bool value = true) { bits_[index] = value ? 1 : 0; }

  std::size_t count() const;
  bool empty_foreground() const { return count() == 0; }
  bool same_shape(const BinaryMask& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  // Nearest-neighbor enlargement: each cell becomes a factor x factor block.
  BinaryMask upsample(std::uint32_t factor) const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::uint32_t height_ = 0;
  std::uint32_t width_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Binary PGM (P5, maxval 255): 0 background, 255 foreground. Reading treats
// any value >= half of maxval as foreground.
void write_pgm(const BinaryMask& mask, const std::filesystem::path& path);
BinaryMask read_pgm(const std::filesystem::path& path);

}  // namespace mis
