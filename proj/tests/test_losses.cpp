#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mis/errors.hpp"
#include "mis/losses.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace mis {
namespace {

using testing::central_differences;
using testing::inside;
using testing::kOffsets;
using testing::random_affinity;
using testing::random_field;
using testing::reference_smoothness;

BinaryMask random_target(std::uint32_t h, std::uint32_t w, std::mt19937_64& gen) {
  BinaryMask mask(h, w);
  for (std::size_t i = 0; i < mask.size(); ++i) mask.set_index(i, gen() % 2 == 0);
  return mask;
}

TEST(WindowOffsets, RowMajorWithoutCentre) {
  const auto& offsets = AffinityField::window_offsets();
  for (int s = 0; s < 24; ++s) {
    EXPECT_EQ(offsets[static_cast<std::size_t>(s)][0], kOffsets[s][0]);
    EXPECT_EQ(offsets[static_cast<std::size_t>(s)][1], kOffsets[s][1]);
  }
}

TEST(BilateralWeight, Examples) {
  BilateralSigmas unit_xy{1.0, 8.0, 4.0};
  EXPECT_NEAR(bilateral_weight(1.0, 0.0, 0.0, unit_xy), std::exp(-0.5), 1e-15);
  BilateralSigmas five_xy{5.0, 8.0, 4.0};
  EXPECT_NEAR(bilateral_weight(9.0 + 16.0, 0.0, 0.0, five_xy), std::exp(-0.5), 1e-15);
  EXPECT_EQ(bilateral_weight(0.0, 0.0, 0.0, {}), 1.0);
  EXPECT_GT(bilateral_weight(8.0, 1e6, 1e6, {}), 0.0);
}

TEST(BilateralAffinity, NeighborOffsetWithIdenticalColor) {
  const std::vector<float> rgb(2 * 3, 100.0f);
  const auto features = PixelFeatures::from_rgb(1, 2, rgb);
  const AffinityField w = bilateral_affinity(features, {1.0, 8.0, 4.0});
  // Slot 12 is offset (0, +1).
  EXPECT_NEAR(w.weight(0, 12), std::exp(-0.5), 1e-15);
  EXPECT_EQ(w.weight(0, 11), 0.0);
  EXPECT_EQ(w.neighbor_count(0, 0), 1u);
}

TEST(BilateralAffinity, RangeAndExactSymmetry) {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<float> byte(0.0f, 255.0f);
  const std::uint32_t h = 7, width = 9;
  std::vector<float> rgb(h * width * 3);
  for (float& v : rgb) v = byte(gen);
  const AffinityField w = bilateral_affinity(PixelFeatures::from_rgb(h, width, rgb), {2.0, 3.0, 1.0});
  for (std::uint32_t r = 0; r < h; ++r) {
    for (std::uint32_t c = 0; c < width; ++c) {
      for (int s = 0; s < 24; ++s) {
        const std::size_t i = r * width + c;
        const double wij = w.weight(i, static_cast<std::size_t>(s));
        if (!inside(h, width, r, c, s)) {
          EXPECT_EQ(wij, 0.0);
          continue;
        }
        EXPECT_GT(wij, 0.0);
        EXPECT_LE(wij, 1.0);
        const std::size_t j = (r + kOffsets[s][0]) * width + (c + kOffsets[s][1]);
        EXPECT_EQ(wij, w.weight(j, static_cast<std::size_t>(23 - s)));
      }
    }
  }
}

TEST(BilateralAffinity, YuvConversion) {
  const std::vector<float> rgb{255.0f, 0.0f, 0.0f};
  const auto f = PixelFeatures::from_rgb(1, 1, rgb);
  EXPECT_NEAR(f.luma[0], 0.299 * 255.0, 1e-9);
  EXPECT_NEAR(f.chroma[0][0], -0.168736 * 255.0 + 128.0, 1e-9);
  EXPECT_NEAR(f.chroma[0][1], 0.5 * 255.0 + 128.0, 1e-9);
}

TEST(BilateralAffinity, RejectsZeroSigma) {
  const auto features = PixelFeatures::from_rgb(1, 2, std::vector<float>(6, 1.0f));
  EXPECT_THROW(bilateral_affinity(features, {0.0, 8.0, 4.0}), ArgumentError);
  EXPECT_THROW(bilateral_affinity(features, {8.0, 8.0, -1.0}), ArgumentError);
}

TEST(AffinityField, RejectsOutOfRangeWeights) {
  std::vector<double> weights(2 * 24, 0.0);
  weights[12] = 1.0;
  weights[24 + 11] = 1.0;
  EXPECT_NO_THROW(AffinityField(1, 2, weights));
  weights[12] = 0.0;
  EXPECT_THROW(AffinityField(1, 2, weights), ValidationError);
  weights[12] = 1.5;
  EXPECT_THROW(AffinityField(1, 2, weights), ValidationError);
  weights[12] = 1.0;
  weights[13] = 0.5;  // outside the image
  EXPECT_THROW(AffinityField(1, 2, weights), ValidationError);
  EXPECT_THROW(AffinityField(1, 2, std::vector<double>(10, 1.0)), ArgumentError);
}

TEST(SmoothnessLoss, ConstantFieldIsFlat) {
  std::mt19937_64 gen(1);
  const AffinityField w = random_affinity(8, 8, gen);
  const LossValue loss = smoothness_loss(PredictionField::constant(8, 8, 0.37), w);
  EXPECT_EQ(loss.value, 0.0);
  for (double g : loss.gradient) EXPECT_EQ(g, 0.0);
}

TEST(SmoothnessLoss, TwoPixelExample) {
  std::vector<double> weights(2 * 24, 0.0);
  weights[12] = 1.0;
  weights[24 + 11] = 1.0;
  const AffinityField w(1, 2, weights);
  const LossValue loss = smoothness_loss(PredictionField(1, 2, {0.0, 1.0}), w);
  EXPECT_DOUBLE_EQ(loss.value, 2.0);
}

TEST(SmoothnessLoss, MatchesDirectSum) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto h = static_cast<std::uint32_t>(gen() % 9 + 1);
    const auto width = static_cast<std::uint32_t>(gen() % 9 + 1);
    const AffinityField w = random_affinity(h, width, gen);
    const PredictionField q = random_field(h, width, gen, 0.0, 1.0);
    EXPECT_NEAR(smoothness_loss(q, w).value, reference_smoothness(q, w), 1e-12);
  }
}

TEST(SmoothnessLoss, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 gen(seed);
    const AffinityField w = random_affinity(8, 8, gen);
    const PredictionField q = random_field(8, 8, gen, 0.0, 1.0);
    const auto analytic = smoothness_loss(q, w).gradient;
    const auto numeric = central_differences(
        q, [&](const PredictionField& p) { return reference_smoothness(p, w); }, 1e-4);
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      ASSERT_NEAR(analytic[i], numeric[i], 1e-4) << "seed " << seed << " pixel " << i;
    }
  }
}

TEST(SmoothnessLoss, ShiftInvariant) {
  std::mt19937_64 gen(3);
  const AffinityField w = random_affinity(6, 6, gen);
  // Dyadic values keep Q + c exact, so the differences match bit for bit.
  std::vector<double> base(36), shifted(36);
  for (std::size_t i = 0; i < 36; ++i) {
    base[i] = static_cast<double>(gen() % 57) / 64.0;
    shifted[i] = base[i] + 0.125;
  }
  EXPECT_EQ(smoothness_loss(PredictionField(6, 6, base), w).value,
            smoothness_loss(PredictionField(6, 6, shifted), w).value);

  const PredictionField q = random_field(6, 6, gen, 0.0, 0.7);
  std::vector<double> moved(q.values().begin(), q.values().end());
  for (double& v : moved) v += 0.3;
  const double a = smoothness_loss(q, w).value;
  EXPECT_NEAR(smoothness_loss(PredictionField(6, 6, moved), w).value, a, 1e-12 * std::max(1.0, a));
}

TEST(SmoothnessLoss, NonNegative) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 20; ++trial) {
    const AffinityField w = random_affinity(5, 7, gen);
    EXPECT_GE(smoothness_loss(random_field(5, 7, gen, 0.0, 1.0), w).value, 0.0);
  }
}

TEST(SmoothnessLoss, DimensionMismatch) {
  std::mt19937_64 gen(5);
  EXPECT_THROW(smoothness_loss(PredictionField::constant(3, 3, 0.5), random_affinity(3, 4, gen)),
               ArgumentError);
}

TEST(BceLoss, Examples) {
  BinaryMask one(1, 1, true);
  EXPECT_NEAR(bce_loss(one, PredictionField::constant(1, 1, 0.5)).value, std::log(2.0), 1e-15);
  const double near_zero = bce_loss(one, PredictionField::constant(1, 1, 1.0)).value;
  EXPECT_GE(near_zero, 0.0);
  EXPECT_LT(near_zero, 1e-6);
  EXPECT_NEAR(bce_loss(BinaryMask(1, 1), PredictionField::constant(1, 1, 1.0)).value,
              -std::log(kBceEpsilon), 1e-6);
}

TEST(BceLoss, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 gen(seed);
    const BinaryMask target = random_target(8, 8, gen);
    const PredictionField q = random_field(8, 8, gen, 0.05, 0.95);
    const auto analytic = bce_loss(target, q).gradient;
    const auto numeric = central_differences(
        q, [&](const PredictionField& p) { return bce_loss(target, p).value; }, 1e-4);
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      ASSERT_NEAR(analytic[i], numeric[i], 1e-4) << "seed " << seed << " pixel " << i;
    }
  }
}

TEST(BceLoss, ClampedPixelsHaveNoGradient) {
  const BinaryMask target(1, 2, true);
  const auto loss = bce_loss(target, PredictionField(1, 2, {0.0, 1.0}));
  EXPECT_EQ(loss.gradient[0], 0.0);
  EXPECT_EQ(loss.gradient[1], 0.0);
}

TEST(BceLoss, DimensionMismatch) {
  EXPECT_THROW(bce_loss(BinaryMask(2, 2), PredictionField::constant(2, 3, 0.5)), ArgumentError);
}

TEST(TotalLoss, CombinesTerms) {
  std::mt19937_64 gen(6);
  const AffinityField w = random_affinity(8, 8, gen);
  const BinaryMask target = random_target(8, 8, gen);
  const PredictionField q = random_field(8, 8, gen, 0.05, 0.95);
  const double bce = bce_loss(target, q).value;
  const double smooth = smoothness_loss(q, w).value;

  const TotalLoss zero = total_loss(target, q, w, 0.0);
  EXPECT_EQ(zero.total, bce);
  const TotalLoss dflt = total_loss(target, q, w);
  EXPECT_EQ(dflt.bce, bce);
  EXPECT_EQ(dflt.smooth, smooth);
  EXPECT_NEAR(dflt.total, bce + 10.0 * smooth, 1e-12 * dflt.total);

  const PredictionField flat = PredictionField::constant(8, 8, 0.4);
  EXPECT_EQ(total_loss(target, flat, w).total, bce_loss(target, flat).value);
  EXPECT_THROW(total_loss(target, q, w, -1.0), ArgumentError);
}

TEST(TotalLoss, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 gen(100 + seed);
    const AffinityField w = random_affinity(8, 8, gen);
    const BinaryMask target = random_target(8, 8, gen);
    const PredictionField q = random_field(8, 8, gen, 0.05, 0.95);
    const auto analytic = total_loss(target, q, w, 2.5).gradient;
    const auto numeric = central_differences(
        q,
        [&](const PredictionField& p) {
          return bce_loss(target, p).value + 2.5 * reference_smoothness(p, w);
        },
        1e-4);
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      ASSERT_NEAR(analytic[i], numeric[i], 1e-4) << "seed " << seed << " pixel " << i;
    }
  }
}

TEST(PredictionField, RejectsOutOfRangeValues) {
  EXPECT_THROW(PredictionField(1, 1, {1.5}), ValidationError);
  EXPECT_THROW(PredictionField(1, 1, {std::nan("")}), ValidationError);
  EXPECT_THROW(PredictionField(1, 2, {0.5}), ArgumentError);
}

}  // namespace
}  // namespace mis
