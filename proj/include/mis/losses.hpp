#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mis/binary_mask.hpp"

namespace mis {

// Per-pixel foreground probability, row-major, every value in [0, 1].
class PredictionField {
 public:
  PredictionField(std::uint32_t height, std::uint32_t width, std::vector<double> values);
  static PredictionField constant(std::uint32_t height, std::uint32_t width, double value);

  std::uint32_t height() const { return height_; }
  std::uint32_t width() const { return width_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::uint32_t height_;
  std::uint32_t width_;
  std::vector<double> values_;
};

// Position (x = column, y = row) and luma/chroma of every pixel.
struct PixelFeatures {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<double> luma;       // Y
  std::vector<std::array<double, 2>> chroma;  // (U, V)

  // 8-bit RGB triples, row-major, converted with BT.601 full-range:
  //   Y =  0.299    R + 0.587    G + 0.114    B
  //   U = -0.168736 R - 0.331264 G + 0.5      B + 128
  //   V =  0.5      R - 0.418688 G - 0.081312 B + 128
  static PixelFeatures from_rgb(std::uint32_t height, std::uint32_t width,
                                std::span<const float> rgb);
};

struct BilateralSigmas {
  double spatial = 8.0;
  double luma = 8.0;
  double chroma = 4.0;
};

// Local 5x5 bilateral weights. Every pixel has 24 slots, one per offset in
// window_offsets(); slots falling outside the image hold 0 and are not part
// of the pixel's neighborhood.
class AffinityField {
 public:
  static constexpr int kRadius = 2;
  static constexpr std::size_t kSlots = 24;

  // (d_row, d_col) for each slot, row-major over the window, centre skipped.
  static const std::array<std::array<int, 2>, kSlots>& window_offsets();

  // Explicit weights, height*width*24 entries. In-image slots must be in (0, 1].
  AffinityField(std::uint32_t height, std::uint32_t width, std::vector<double> weights,
                BilateralSigmas sigmas = {});

  std::uint32_t height() const { return height_; }
  std::uint32_t width() const { return width_; }
  const BilateralSigmas& sigmas() const { return sigmas_; }

  bool in_window(std::uint32_t row, std::uint32_t col, std::size_t slot) const;
  double weight(std::size_t pixel, std::size_t slot) const {
    return weights_[pixel * kSlots + slot];
  }
  // Number of in-image neighbors of the pixel (|N_i|).
  std::uint32_t neighbor_count(std::uint32_t row, std::uint32_t col) const;

 private:
  std::uint32_t height_;
  std::uint32_t width_;
  std::vector<double> weights_;
  BilateralSigmas sigmas_;
};

// exp(-|dxy|^2 / 2 s_xy^2 - dl^2 / 2 s_l^2 - |duv|^2 / 2 s_uv^2), floored at
// the smallest normal double.
double bilateral_weight(double squared_offset, double luma_delta, double squared_chroma_delta,
                        const BilateralSigmas& sigmas);

// bilateral_weight for every in-image slot of every pixel.
AffinityField bilateral_affinity(const PixelFeatures& features, const BilateralSigmas& sigmas);

struct LossValue {
  double value = 0.0;
  std::vector<double> gradient;  // dL/dQ per pixel
};

// sum_i 1/|N_i| sum_{j in N_i} W_ij (Q_i - Q_j)^2 over the 5x5 window.
LossValue smoothness_loss(const PredictionField& q, const AffinityField& w);

inline constexpr double kBceEpsilon = 1e-7;

// Mean binary cross entropy with Q clamped to [eps, 1 - eps]. The gradient is
// zero where the clamp is active.
LossValue bce_loss(const BinaryMask& target, const PredictionField& q);

inline constexpr double kDefaultSmoothnessWeight = 10.0;

struct TotalLoss {
  double bce = 0.0;
  double smooth = 0.0;
  double total = 0.0;
  std::vector<double> gradient;
};

// bce + lambda * smooth.
TotalLoss total_loss(const BinaryMask& target, const PredictionField& q, const AffinityField& w,
                     double lambda = kDefaultSmoothnessWeight);

}  // namespace mis
