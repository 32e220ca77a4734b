// SPDX-License-Identifier: Apache-2.0
#include "pathbench/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "pathbench/random.hpp"

namespace pathbench::synthetic {

namespace {

struct Wave {
  double fx, fy, phase, amp;
};

std::vector<Wave> random_waves(SplitMix64& rng, std::size_t n, double max_cycles, std::size_t w, std::size_t h) {
  std::vector<Wave> waves(n);
  for (auto& wave : waves) {
    wave.fx = rng.uniform(-max_cycles, max_cycles) / static_cast<double>(w);
    wave.fy = rng.uniform(-max_cycles, max_cycles) / static_cast<double>(h);
    wave.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    wave.amp = rng.uniform(0.3, 1.0);
  }
  return waves;
}

double wave_field(const std::vector<Wave>& waves, double x, double y) {
  double v = 0.0, norm = 0.0;
  for (const auto& w : waves) {
    v += w.amp * std::sin(2.0 * std::numbers::pi * (w.fx * x + w.fy * y) + w.phase);
    norm += w.amp;
  }
  return norm > 0.0 ? v / norm : 0.0;
}

// Soft-edged ellipse painter: blends `color` into the float canvas.
void paint_ellipse(std::vector<double>& canvas, std::size_t w, std::size_t h, double cx, double cy, double rx,
                   double ry, double angle, const std::array<double, 3>& color, double opacity, SplitMix64& rng,
                   double texture) {
  const double c = std::cos(angle), s = std::sin(angle);
  const double r = std::max(rx, ry) + 2.0;
  const auto x0 = static_cast<long>(std::max(0.0, std::floor(cx - r)));
  const auto x1 = static_cast<long>(std::min(static_cast<double>(w) - 1.0, std::ceil(cx + r)));
  const auto y0 = static_cast<long>(std::max(0.0, std::floor(cy - r)));
  const auto y1 = static_cast<long>(std::min(static_cast<double>(h) - 1.0, std::ceil(cy + r)));
  for (long y = y0; y <= y1; ++y) {
    for (long x = x0; x <= x1; ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      const double u = (c * dx + s * dy) / rx, v = (-s * dx + c * dy) / ry;
      const double d = std::sqrt(u * u + v * v);
      // 1 inside, linear falloff over roughly one pixel at the rim
      const double edge = std::clamp((1.0 - d) * std::min(rx, ry) + 0.5, 0.0, 1.0);
      if (edge <= 0.0) continue;
      const double alpha = edge * opacity;
      const double grain = 1.0 + texture * (rng.uniform() - 0.5);
      double* px = &canvas[(static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)) * 3];
      for (int ch = 0; ch < 3; ++ch) px[ch] = (1.0 - alpha) * px[ch] + alpha * color[ch] * grain;
    }
  }
}

Tile to_tile(const std::vector<double>& canvas, std::size_t w, std::size_t h, std::string id) {
  std::vector<Byte> px(canvas.size());
  std::transform(canvas.begin(), canvas.end(), px.begin(), [](double v) { return saturate_u8(v); });
  return Tile(w, h, std::move(px), std::move(id));
}

void render_tissue(std::vector<double>& canvas, std::size_t w, std::size_t h, SplitMix64& rng,
                   const TissueStyle& style, const std::vector<Byte>* region) {
  const auto waves = random_waves(rng, 6, 7.0, w, h);
  const auto fine = random_waves(rng, 5, 28.0, w, h);
  const std::array<double, 3> eosin{rng.uniform(215, 240), rng.uniform(130, 165), rng.uniform(175, 205)};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (region && !(*region)[y * w + x]) continue;
      const double f = wave_field(waves, static_cast<double>(x), static_cast<double>(y));
      const double g = wave_field(fine, static_cast<double>(x), static_cast<double>(y));
      const double shade = style.stroma_contrast * f + 0.4 * style.stroma_contrast * g;
      double* px = &canvas[(y * w + x) * 3];
      px[0] = eosin[0] + shade;
      px[1] = eosin[1] + 1.3 * shade;
      px[2] = eosin[2] + 0.9 * shade;
    }
  }

  const int lumens = style.lumen_max > 0 ? static_cast<int>(rng.below(static_cast<std::uint64_t>(style.lumen_max) + 1)) : 0;
  for (int i = 0; i < lumens; ++i) {
    const double cx = rng.uniform(0, static_cast<double>(w)), cy = rng.uniform(0, static_cast<double>(h));
    if (region && !(*region)[static_cast<std::size_t>(cy) * w + static_cast<std::size_t>(cx)]) continue;
    paint_ellipse(canvas, w, h, cx, cy, rng.uniform(8, 24), rng.uniform(6, 18), rng.uniform(0, std::numbers::pi),
                  {242, 236, 244}, 0.95, rng, 0.02);
  }

  const auto nuclei = static_cast<std::size_t>(style.nuclei_per_kpx * static_cast<double>(w * h) / 1000.0);
  for (std::size_t i = 0; i < nuclei; ++i) {
    const double cx = rng.uniform(0, static_cast<double>(w)), cy = rng.uniform(0, static_cast<double>(h));
    if (region && !(*region)[static_cast<std::size_t>(cy) * w + static_cast<std::size_t>(cx)]) continue;
    const std::array<double, 3> hema{rng.uniform(60, 120), rng.uniform(30, 75), rng.uniform(110, 160)};
    paint_ellipse(canvas, w, h, cx, cy, rng.uniform(3.0, 7.5), rng.uniform(2.5, 5.5), rng.uniform(0, std::numbers::pi),
                  hema, rng.uniform(0.75, 0.95), rng, 0.25);
  }

  if (style.noise_sigma > 0.0) {
    for (std::size_t i = 0; i < w * h; ++i) {
      if (region && !(*region)[i]) continue;
      for (int ch = 0; ch < 3; ++ch) canvas[i * 3 + static_cast<std::size_t>(ch)] += style.noise_sigma * rng.normal();
    }
  }
}

}  // namespace

Tile tissue_tile(std::size_t width, std::size_t height, std::uint64_t seed, const TissueStyle& style) {
  SplitMix64 rng(seed);
  std::vector<double> canvas(width * height * 3, 0.0);
  render_tissue(canvas, width, height, rng, style, nullptr);
  return to_tile(canvas, width, height, "synthetic");
}

std::vector<Tile> tissue_corpus(std::size_t count, std::size_t size, std::uint64_t seed, const TissueStyle& style) {
  SplitMix64 seeds(seed);
  std::vector<Tile> tiles;
  tiles.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    tiles.push_back(tissue_tile(size, size, seeds.next(), style).with_id("synthetic-" + std::to_string(i)));
  }
  return tiles;
}

Tile noise_tile(std::size_t width, std::size_t height, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Byte> px(width * height * 3);
  for (auto& v : px) v = static_cast<Byte>(rng.next() >> 56);
  return Tile(width, height, std::move(px), "noise");
}

Tile add_gaussian_noise(const Tile& tile, double sigma, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Byte> px(tile.pixels().begin(), tile.pixels().end());
  for (auto& v : px) v = saturate_u8(static_cast<double>(v) + sigma * rng.normal());
  return Tile(tile.width(), tile.height(), std::move(px), tile.id());
}

Tile slide(std::size_t width, std::size_t height, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> canvas(width * height * 3);
  for (auto& v : canvas) v = 244.0 + 3.0 * rng.normal();

  std::vector<Byte> region(width * height, 0);
  const int islands = 2 + static_cast<int>(rng.below(3));
  for (int i = 0; i < islands; ++i) {
    const double cx = rng.uniform(0.2, 0.8) * static_cast<double>(width);
    const double cy = rng.uniform(0.2, 0.8) * static_cast<double>(height);
    const double rx = rng.uniform(0.12, 0.3) * static_cast<double>(width);
    const double ry = rng.uniform(0.12, 0.3) * static_cast<double>(height);
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const double u = (static_cast<double>(x) - cx) / rx, v = (static_cast<double>(y) - cy) / ry;
        if (u * u + v * v <= 1.0) region[y * width + x] = 1;
      }
    }
  }
  render_tissue(canvas, width, height, rng, TissueStyle{}, &region);
  return to_tile(canvas, width, height, "synthetic-slide");
}

}  // namespace pathbench::synthetic
