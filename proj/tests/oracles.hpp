#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "mis/binary_mask.hpp"
#include "mis/interaction_sim.hpp"
#include "mis/losses.hpp"

// Reference implementations shared by the unit tests and the acceptance run.
namespace mis::testing {

// Brute-force reference for the corrective clicker: union-find labelling,
// explicit region ranking and an all-pairs distance search against the
// region complement on a grid padded by one pixel.
inline std::optional<Click> reference_click(const BinaryMask& gt, const BinaryMask& pred) {
  const std::uint32_t h = gt.height(), w = gt.width();
  const std::size_t n = gt.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto kind = [&](std::size_t i) { return gt[i] && !pred[i] ? 1 : (!gt[i] && pred[i] ? 2 : 0); };
  for (std::size_t i = 0; i < n; ++i) {
    if (kind(i) == 0) continue;
    const std::size_t r = i / w, c = i % w;
    if (c + 1 < w && kind(i + 1) == kind(i)) parent[find(i + 1)] = find(i);
    if (r + 1 < h && kind(i + w) == kind(i)) parent[find(i + w)] = find(i);
  }
  struct Region {
    std::size_t area = 0;
    int kind = 0;
    std::size_t first = 0;
  };
  std::map<std::size_t, Region> regions;
  for (std::size_t i = 0; i < n; ++i) {
    if (kind(i) == 0) continue;
    Region& reg = regions[find(i)];
    if (reg.area == 0) {
      reg.kind = kind(i);
      reg.first = i;
    }
    ++reg.area;
  }
  if (regions.empty()) return std::nullopt;
  std::size_t best_root = 0;
  const Region* best = nullptr;
  for (const auto& [root, reg] : regions) {
    const bool better = !best || reg.area > best->area ||
                        (reg.area == best->area && reg.kind < best->kind) ||
                        (reg.area == best->area && reg.kind == best->kind && reg.first < best->first);
    if (better) {
      best = &reg;
      best_root = root;
    }
  }
  auto inside = [&](long r, long c) {
    if (r < 0 || c < 0 || r >= h || c >= w) return false;
    const std::size_t i = static_cast<std::size_t>(r) * w + static_cast<std::size_t>(c);
    return kind(i) != 0 && find(i) == best_root;
  };
  double best_d = -1.0;
  Click click;
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      if (!inside(r, c)) continue;
      double d = std::numeric_limits<double>::infinity();
      for (long qr = -1; qr <= static_cast<long>(h); ++qr) {
        for (long qc = -1; qc <= static_cast<long>(w); ++qc) {
          if (inside(qr, qc)) continue;
          d = std::min(d, static_cast<double>((qr - r) * (qr - r) + (qc - c) * (qc - c)));
        }
      }
      if (d > best_d) {
        best_d = d;
        click.row = static_cast<std::uint32_t>(r);
        click.col = static_cast<std::uint32_t>(c);
      }
    }
  }
  click.positive = best->kind == 1;
  return click;
}

inline BinaryMask random_mask(std::uint32_t h, std::uint32_t w, std::mt19937_64& gen) {
  BinaryMask mask(h, w);
  if (gen() % 2 == 0) {
    const double density = static_cast<double>(gen() % 100) / 100.0;
    std::bernoulli_distribution bit(density);
    for (std::size_t i = 0; i < mask.size(); ++i) mask.set_index(i, bit(gen));
  } else {
    const int rects = static_cast<int>(gen() % 4) + 1;
    for (int k = 0; k < rects; ++k) {
      const auto r0 = static_cast<std::uint32_t>(gen() % h), c0 = static_cast<std::uint32_t>(gen() % w);
      const auto r1 = std::min(h, r0 + 1 + static_cast<std::uint32_t>(gen() % h));
      const auto c1 = std::min(w, c0 + 1 + static_cast<std::uint32_t>(gen() % w));
      for (std::uint32_t r = r0; r < r1; ++r) {
        for (std::uint32_t c = c0; c < c1; ++c) mask.set(r, c, !mask.get(r, c));
      }
    }
  }
  return mask;
}

inline constexpr int kOffsets[24][2] = {
    {-2, -2}, {-2, -1}, {-2, 0}, {-2, 1}, {-2, 2}, {-1, -2}, {-1, -1}, {-1, 0},
    {-1, 1},  {-1, 2},  {0, -2}, {0, -1}, {0, 1},  {0, 2},   {1, -2},  {1, -1},
    {1, 0},   {1, 1},   {1, 2},  {2, -2}, {2, -1}, {2, 0},   {2, 1},   {2, 2}};

inline bool inside(std::uint32_t h, std::uint32_t w, std::uint32_t r, std::uint32_t c, int s) {
  const long rr = static_cast<long>(r) + kOffsets[s][0];
  const long cc = static_cast<long>(c) + kOffsets[s][1];
  return rr >= 0 && cc >= 0 && rr < static_cast<long>(h) && cc < static_cast<long>(w);
}

// Random weights in (0, 1]; not necessarily symmetric.
inline AffinityField random_affinity(std::uint32_t h, std::uint32_t w, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> unit(0.01, 1.0);
  std::vector<double> weights(static_cast<std::size_t>(h) * w * 24, 0.0);
  for (std::uint32_t r = 0; r < h; ++r) {
    for (std::uint32_t c = 0; c < w; ++c) {
      for (int s = 0; s < 24; ++s) {
        if (inside(h, w, r, c, s)) weights[(r * w + c) * 24 + static_cast<std::size_t>(s)] = unit(gen);
      }
    }
  }
  return AffinityField(h, w, std::move(weights));
}

inline PredictionField random_field(std::uint32_t h, std::uint32_t w, std::mt19937_64& gen, double lo,
                             double hi) {
  std::uniform_real_distribution<double> unit(lo, hi);
  std::vector<double> values(static_cast<std::size_t>(h) * w);
  for (double& v : values) v = unit(gen);
  return PredictionField(h, w, std::move(values));
}

// Direct evaluation of the smoothness sum, pixel pair by pixel pair.
inline double reference_smoothness(const PredictionField& q, const AffinityField& w) {
  const std::uint32_t height = q.height(), width = q.width();
  double total = 0.0;
  for (std::uint32_t r = 0; r < height; ++r) {
    for (std::uint32_t c = 0; c < width; ++c) {
      double sum = 0.0;
      int count = 0;
      for (int s = 0; s < 24; ++s) {
        if (!inside(height, width, r, c, s)) continue;
        const std::size_t i = r * width + c;
        const std::size_t j = (r + kOffsets[s][0]) * width + (c + kOffsets[s][1]);
        const double d = q[i] - q[j];
        sum += w.weight(i, static_cast<std::size_t>(s)) * d * d;
        ++count;
      }
      if (count > 0) total += sum / count;
    }
  }
  return total;
}

template <typename F>
std::vector<double> central_differences(const PredictionField& q, F loss, double step) {
  std::vector<double> grad(q.values().size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    std::vector<double> plus(q.values().begin(), q.values().end());
    std::vector<double> minus = plus;
    plus[i] += step;
    minus[i] -= step;
    grad[i] = (loss(PredictionField(q.height(), q.width(), plus)) -
               loss(PredictionField(q.height(), q.width(), minus))) /
              (2.0 * step);
  }
  return grad;
}

}  // namespace mis::testing
