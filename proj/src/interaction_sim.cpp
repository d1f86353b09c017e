#include "mis/interaction_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "mis/errors.hpp"

namespace mis {

double iou(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) throw ArgumentError("iou: mask dimensions differ");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a[i] && b[i]) ? 1 : 0;
    uni += (a[i] || b[i]) ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

constexpr double kFar = std::numeric_limits<double>::infinity();

// 1-D squared distance of a sampled function (lower envelope of parabolas).
void distance_1d(std::span<const double> f, std::span<double> out,
                 std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  v.assign(static_cast<std::size_t>(n), 0);
  z.assign(static_cast<std::size_t>(n) + 1, 0.0);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kFar) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kFar;
      z[1] = kFar;
      continue;
    }
    // z[0] is -inf, so the scan always stops at k >= 0.
    double s;
    while (true) {
      const int p = v[static_cast<std::size_t>(k)];
      s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
          (2.0 * (q - p));
      if (s > z[static_cast<std::size_t>(k)]) break;
      --k;
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = kFar;
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), kFar);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(j) + 1] < q) ++j;
    const int p = v[static_cast<std::size_t>(j)];
    const double d = static_cast<double>(q - p);
    out[static_cast<std::size_t>(q)] = d * d + f[static_cast<std::size_t>(p)];
  }
}

}  // namespace

std::vector<double> squared_distance_transform(std::span<const std::uint8_t> sources,
                                               std::uint32_t height,
                                               std::uint32_t width) {
  const std::size_t n = static_cast<std::size_t>(height) * width;
  if (sources.size() != n) throw ArgumentError("distance transform size mismatch");
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = sources[i] ? 0.0 : kFar;

  std::vector<int> v;
  std::vector<double> z;
  std::vector<double> line_in(height);
  std::vector<double> line_out(height);
  for (std::uint32_t c = 0; c < width; ++c) {
    for (std::uint32_t r = 0; r < height; ++r) line_in[r] = grid[static_cast<std::size_t>(r) * width + c];
    distance_1d(line_in, line_out, v, z);
    for (std::uint32_t r = 0; r < height; ++r) grid[static_cast<std::size_t>(r) * width + c] = line_out[r];
  }
  line_in.resize(width);
  line_out.resize(width);
  for (std::uint32_t r = 0; r < height; ++r) {
    std::copy_n(grid.begin() + static_cast<std::ptrdiff_t>(r) * width, width, line_in.begin());
    distance_1d(line_in, line_out, v, z);
    std::copy(line_out.begin(), line_out.end(), grid.begin() + static_cast<std::ptrdiff_t>(r) * width);
  }
  return grid;
}

namespace {

// Picks `count` distinct entries of `pool` with a partial Fisher-Yates shuffle.
std::vector<std::size_t> choose_distinct(std::vector<std::size_t> pool, std::size_t count,
                                         RandomStream& rng) {
  count = std::min(count, pool.size());
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(pool.size() - 1)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace

std::vector<Click> sample_random_clicks(const BinaryMask& target, std::uint32_t max_pos,
                                        std::uint32_t max_neg, std::uint32_t margin,
                                        RandomStream& rng) {
  if (max_pos == 0) throw ArgumentError("max_pos must be at least 1");
  const std::uint32_t height = target.height();
  const std::uint32_t width = target.width();
  const std::size_t n = target.size();

  std::vector<std::uint8_t> fg(n), bg(n);
  std::size_t fg_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    fg[i] = target[i] ? 1 : 0;
    bg[i] = target[i] ? 0 : 1;
    fg_count += fg[i];
  }
  if (fg_count == 0) throw ArgumentError("target has no foreground pixel");
  const bool has_background = fg_count < n;

  const double margin2 = static_cast<double>(margin) * margin;
  const auto to_bg = squared_distance_transform(bg, height, width);
  std::vector<std::size_t> pos_pool, raw_fg;
  for (std::size_t i = 0; i < n; ++i) {
    if (!fg[i]) continue;
    raw_fg.push_back(i);
    if (to_bg[i] > margin2) pos_pool.push_back(i);
  }
  if (pos_pool.empty()) pos_pool = raw_fg;

  std::vector<Click> clicks;
  const auto k_pos = static_cast<std::size_t>(rng.uniform_int(1, max_pos));
  for (std::size_t i : choose_distinct(std::move(pos_pool), k_pos, rng)) {
    clicks.push_back({static_cast<std::uint32_t>(i / width),
                      static_cast<std::uint32_t>(i % width), true,
                      static_cast<std::uint32_t>(clicks.size())});
  }

  if (has_background) {
    const auto to_fg = squared_distance_transform(fg, height, width);
    const double outer2 = 16.0 * margin2;
    std::vector<std::size_t> neg_pool, raw_bg;
    for (std::size_t i = 0; i < n; ++i) {
      if (!bg[i]) continue;
      raw_bg.push_back(i);
      if (to_fg[i] >= margin2 && to_fg[i] <= outer2) neg_pool.push_back(i);
    }
    if (neg_pool.empty()) neg_pool = raw_bg;
    const auto k_neg = static_cast<std::size_t>(rng.uniform_int(0, max_neg));
    for (std::size_t i : choose_distinct(std::move(neg_pool), k_neg, rng)) {
      clicks.push_back({static_cast<std::uint32_t>(i / width),
                        static_cast<std::uint32_t>(i % width), false,
                        static_cast<std::uint32_t>(clicks.size())});
    }
  }
  return clicks;
}

namespace {

struct ErrorComponent {
  std::vector<std::size_t> pixels;  // pixels[0] is the first in row-major order
  bool false_negative = true;
};

// 4-connected components of `mask`, discovered in row-major order.
std::vector<ErrorComponent> components(const std::vector<std::uint8_t>& mask,
                                       std::uint32_t height, std::uint32_t width,
                                       bool false_negative) {
  std::vector<ErrorComponent> out;
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || seen[start]) continue;
    ErrorComponent comp;
    comp.false_negative = false_negative;
    seen[start] = 1;
    stack.assign(1, start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      comp.pixels.push_back(p);
      const auto r = static_cast<std::uint32_t>(p / width);
      const auto c = static_cast<std::uint32_t>(p % width);
      auto visit = [&](std::size_t q) {
        if (mask[q] && !seen[q]) {
          seen[q] = 1;
          stack.push_back(q);
        }
      };
      if (r > 0) visit(p - width);
      if (r + 1 < height) visit(p + width);
      if (c > 0) visit(p - 1);
      if (c + 1 < width) visit(p + 1);
    }
    std::sort(comp.pixels.begin(), comp.pixels.end());
    out.push_back(std::move(comp));
  }
  return out;
}

}  // namespace

std::optional<Click> next_click_center(const BinaryMask& gt, const BinaryMask& pred) {
  if (!gt.same_shape(pred)) throw ArgumentError("next_click_center: mask dimensions differ");
  const std::uint32_t height = gt.height();
  const std::uint32_t width = gt.width();
  std::vector<std::uint8_t> fn(gt.size()), fp(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    fn[i] = (gt[i] && !pred[i]) ? 1 : 0;
    fp[i] = (pred[i] && !gt[i]) ? 1 : 0;
  }

  auto regions = components(fn, height, width, true);
  auto fp_regions = components(fp, height, width, false);
  regions.insert(regions.end(), std::make_move_iterator(fp_regions.begin()),
                 std::make_move_iterator(fp_regions.end()));
  if (regions.empty()) return std::nullopt;

  auto better = [](const ErrorComponent& x, const ErrorComponent& y) {
    if (x.pixels.size() != y.pixels.size()) return x.pixels.size() > y.pixels.size();
    if (x.false_negative != y.false_negative) return x.false_negative;
    return x.pixels.front() < y.pixels.front();
  };
  const ErrorComponent* chosen = &regions.front();
  for (const auto& region : regions) {
    if (better(region, *chosen)) chosen = &region;
  }

  // Distance to the complement, with a one-pixel frame outside the image so
  // the border counts as complement.
  const std::uint32_t ph = height + 2;
  const std::uint32_t pw = width + 2;
  std::vector<std::uint8_t> outside(static_cast<std::size_t>(ph) * pw, 1);
  for (std::size_t p : chosen->pixels) {
    const std::size_t r = p / width + 1;
    const std::size_t c = p % width + 1;
    outside[r * pw + c] = 0;
  }
  const auto dist = squared_distance_transform(outside, ph, pw);

  std::size_t best_pixel = chosen->pixels.front();
  double best = -1.0;
  for (std::size_t p : chosen->pixels) {  // ascending, so strict > keeps the first tie
    const double d = dist[(p / width + 1) * pw + (p % width + 1)];
    if (d > best) {
      best = d;
      best_pixel = p;
    }
  }
  return Click{static_cast<std::uint32_t>(best_pixel / width),
               static_cast<std::uint32_t>(best_pixel % width), chosen->false_negative, 0};
}

ClickMap encode_click_map(std::span<const Click> clicks, std::uint32_t height,
                          std::uint32_t width, std::uint32_t disk_radius) {
  ClickMap map{BinaryMask(height, width), BinaryMask(height, width), disk_radius};
  const auto r = static_cast<std::int64_t>(disk_radius);
  for (const Click& click : clicks) {
    if (click.row >= height || click.col >= width) {
      throw ArgumentError("click (" + std::to_string(click.row) + ", " +
                          std::to_string(click.col) + ") lies outside the image");
    }
    BinaryMask& channel = click.positive ? map.positive : map.negative;
    for (std::int64_t dr = -r; dr <= r; ++dr) {
      const std::int64_t row = click.row + dr;
      if (row < 0 || row >= height) continue;
      for (std::int64_t dc = -r; dc <= r; ++dc) {
        const std::int64_t col = click.col + dc;
        if (col < 0 || col >= width || dr * dr + dc * dc > r * r) continue;
        channel.set(static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(col));
      }
    }
  }
  return map;
}

void write_clicks_csv(std::span<const Click> clicks, std::ostream& out) {
  out << "order,row,col,sign\n";
  for (const Click& click : clicks) {
    out << click.order << ',' << click.row << ',' << click.col << ','
        << (click.positive ? '+' : '-') << '\n';
  }
}

void write_clicks_csv(std::span<const Click> clicks, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_clicks_csv(clicks, out);
  if (!out) throw IoError("short write to " + path.string());
}

std::vector<Click> read_clicks_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Click> clicks;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first && line.rfind("order", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    std::istringstream fields(line);
    Click click;
    char c1 = 0, c2 = 0, c3 = 0, sign = 0;
    if (!(fields >> click.order >> c1 >> click.row >> c2 >> click.col >> c3 >> sign) ||
        c1 != ',' || c2 != ',' || c3 != ',' || (sign != '+' && sign != '-')) {
      throw FormatError("malformed click line: " + line);
    }
    click.positive = sign == '+';
    clicks.push_back(click);
  }
  return clicks;
}

}  // namespace mis
