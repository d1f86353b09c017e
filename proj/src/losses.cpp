#include "mis/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mis/errors.hpp"

namespace mis {

PredictionField::PredictionField(std::uint32_t height, std::uint32_t width,
                                 std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(height_) * width_) {
    throw ArgumentError("prediction field size does not match its dimensions");
  }
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError("prediction values must lie in [0, 1]");
    }
  }
}

PredictionField PredictionField::constant(std::uint32_t height, std::uint32_t width,
                                          double value) {
  return PredictionField(height, width,
                         std::vector<double>(static_cast<std::size_t>(height) * width, value));
}

PixelFeatures PixelFeatures::from_rgb(std::uint32_t height, std::uint32_t width,
                                      std::span<const float> rgb) {
  const std::size_t n = static_cast<std::size_t>(height) * width;
  if (rgb.size() != 3 * n) throw ArgumentError("RGB buffer size mismatch");
  PixelFeatures out;
  out.height = height;
  out.width = width;
  out.luma.resize(n);
  out.chroma.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = rgb[3 * i];
    const double g = rgb[3 * i + 1];
    const double b = rgb[3 * i + 2];
    out.luma[i] = 0.299 * r + 0.587 * g + 0.114 * b;
    out.chroma[i] = {-0.168736 * r - 0.331264 * g + 0.5 * b + 128.0,
                     0.5 * r - 0.418688 * g - 0.081312 * b + 128.0};
  }
  return out;
}

const std::array<std::array<int, 2>, AffinityField::kSlots>& AffinityField::window_offsets() {
  static const auto offsets = [] {
    std::array<std::array<int, 2>, kSlots> out{};
    std::size_t k = 0;
    for (int dr = -kRadius; dr <= kRadius; ++dr) {
      for (int dc = -kRadius; dc <= kRadius; ++dc) {
        if (dr == 0 && dc == 0) continue;
        out[k++] = {dr, dc};
      }
    }
    return out;
  }();
  return offsets;
}

AffinityField::AffinityField(std::uint32_t height, std::uint32_t width,
                             std::vector<double> weights, BilateralSigmas sigmas)
    : height_(height), width_(width), weights_(std::move(weights)), sigmas_(sigmas) {
  if (weights_.size() != static_cast<std::size_t>(height_) * width_ * kSlots) {
    throw ArgumentError("affinity weights must hold 24 entries per pixel");
  }
  for (std::uint32_t r = 0; r < height_; ++r) {
    for (std::uint32_t c = 0; c < width_; ++c) {
      for (std::size_t s = 0; s < kSlots; ++s) {
        const double w = weights_[(static_cast<std::size_t>(r) * width_ + c) * kSlots + s];
        if (in_window(r, c, s) ? !(w > 0.0 && w <= 1.0) : w != 0.0) {
          throw ValidationError("affinity weight out of range at pixel (" +
                                std::to_string(r) + ", " + std::to_string(c) + ")");
        }
      }
    }
  }
}

bool AffinityField::in_window(std::uint32_t row, std::uint32_t col, std::size_t slot) const {
  const auto& [dr, dc] = window_offsets()[slot];
  const std::int64_t r = static_cast<std::int64_t>(row) + dr;
  const std::int64_t c = static_cast<std::int64_t>(col) + dc;
  return r >= 0 && r < height_ && c >= 0 && c < width_;
}

std::uint32_t AffinityField::neighbor_count(std::uint32_t row, std::uint32_t col) const {
  std::uint32_t count = 0;
  for (std::size_t s = 0; s < kSlots; ++s) count += in_window(row, col, s) ? 1 : 0;
  return count;
}

double bilateral_weight(double squared_offset, double luma_delta, double squared_chroma_delta,
                        const BilateralSigmas& sigmas) {
  const double exponent = squared_offset / (2.0 * sigmas.spatial * sigmas.spatial) +
                          luma_delta * luma_delta / (2.0 * sigmas.luma * sigmas.luma) +
                          squared_chroma_delta / (2.0 * sigmas.chroma * sigmas.chroma);
  // Clamp keeps far-apart colors strictly positive instead of underflowing to 0.
  return std::max(std::exp(-exponent), std::numeric_limits<double>::min());
}

AffinityField bilateral_affinity(const PixelFeatures& features, const BilateralSigmas& sigmas) {
  if (!(sigmas.spatial > 0.0 && sigmas.luma > 0.0 && sigmas.chroma > 0.0)) {
    throw ArgumentError("bilateral sigmas must be positive");
  }
  const std::uint32_t height = features.height;
  const std::uint32_t width = features.width;
  const std::size_t n = static_cast<std::size_t>(height) * width;
  if (features.luma.size() != n || features.chroma.size() != n) {
    throw ArgumentError("pixel features do not match their dimensions");
  }
  const auto& offsets = AffinityField::window_offsets();

  std::vector<double> weights(n * AffinityField::kSlots, 0.0);
  for (std::uint32_t r = 0; r < height; ++r) {
    for (std::uint32_t c = 0; c < width; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * width + c;
      for (std::size_t s = 0; s < AffinityField::kSlots; ++s) {
        const auto& [dr, dc] = offsets[s];
        const std::int64_t rr = static_cast<std::int64_t>(r) + dr;
        const std::int64_t cc = static_cast<std::int64_t>(c) + dc;
        if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
        const std::size_t j = static_cast<std::size_t>(rr) * width + static_cast<std::size_t>(cc);
        // Squared differences are order-independent, so W_ij == W_ji exactly.
        const double du = features.chroma[i][0] - features.chroma[j][0];
        const double dv = features.chroma[i][1] - features.chroma[j][1];
        weights[i * AffinityField::kSlots + s] =
            bilateral_weight(static_cast<double>(dr * dr + dc * dc),
                             features.luma[i] - features.luma[j], du * du + dv * dv, sigmas);
      }
    }
  }
  return AffinityField(height, width, std::move(weights), sigmas);
}

LossValue smoothness_loss(const PredictionField& q, const AffinityField& w) {
  if (q.height() != w.height() || q.width() != w.width()) {
    throw ArgumentError("smoothness_loss: prediction and affinity dimensions differ");
  }
  const std::uint32_t height = q.height();
  const std::uint32_t width = q.width();
  const auto& offsets = AffinityField::window_offsets();
  LossValue out{0.0, std::vector<double>(static_cast<std::size_t>(height) * width, 0.0)};

  for (std::uint32_t r = 0; r < height; ++r) {
    for (std::uint32_t c = 0; c < width; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * width + c;
      const std::uint32_t neighbors = w.neighbor_count(r, c);
      if (neighbors == 0) continue;
      const double inv = 1.0 / neighbors;
      double sum = 0.0;
      for (std::size_t s = 0; s < AffinityField::kSlots; ++s) {
        if (!w.in_window(r, c, s)) continue;
        const auto& [dr, dc] = offsets[s];
        const std::size_t j = static_cast<std::size_t>(static_cast<std::int64_t>(r) + dr) * width +
                              static_cast<std::size_t>(static_cast<std::int64_t>(c) + dc);
        const double weight = w.weight(i, s);
        const double diff = q[i] - q[j];
        sum += weight * diff * diff;
        const double g = 2.0 * weight * diff * inv;
        out.gradient[i] += g;
        out.gradient[j] -= g;
      }
      out.value += sum * inv;
    }
  }
  return out;
}

LossValue bce_loss(const BinaryMask& target, const PredictionField& q) {
  if (target.height() != q.height() || target.width() != q.width()) {
    throw ArgumentError("bce_loss: target and prediction dimensions differ");
  }
  const std::size_t n = target.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  LossValue out{0.0, std::vector<double>(n, 0.0)};
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double raw = q[i];
    const double p = std::clamp(raw, kBceEpsilon, 1.0 - kBceEpsilon);
    const bool clamped = raw < kBceEpsilon || raw > 1.0 - kBceEpsilon;
    if (target[i]) {
      sum -= std::log(p);
      if (!clamped) out.gradient[i] = -inv_n / p;
    } else {
      sum -= std::log(1.0 - p);
      if (!clamped) out.gradient[i] = inv_n / (1.0 - p);
    }
  }
  out.value = sum * inv_n;
  return out;
}

TotalLoss total_loss(const BinaryMask& target, const PredictionField& q, const AffinityField& w,
                     double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ArgumentError("smoothness weight must be finite and non-negative");
  }
  auto pseudo = bce_loss(target, q);
  const auto smooth = smoothness_loss(q, w);
  TotalLoss out;
  out.bce = pseudo.value;
  out.smooth = smooth.value;
  out.total = pseudo.value + lambda * smooth.value;
  out.gradient = std::move(pseudo.gradient);
  for (std::size_t i = 0; i < out.gradient.size(); ++i) {
    out.gradient[i] += lambda * smooth.gradient[i];
  }
  return out;
}

}  // namespace mis
