// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pathbench::oracle {

Gray luma(const Tile& tile) {
  Gray g{tile.width(), tile.height(), {}};
  for (std::size_t y = 0; y < tile.height(); ++y)
    for (std::size_t x = 0; x < tile.width(); ++x) {
      const auto p = tile.at(x, y);
      const double v = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
      g.v.push_back(std::clamp(std::round(v), 0.0, 255.0));
    }
  return g;
}

Gray pool(const Gray& g) {
  Gray out{g.width / 2, g.height / 2, {}};
  for (std::size_t y = 0; y < out.height; ++y)
    for (std::size_t x = 0; x < out.width; ++x)
      out.v.push_back((g.at(2 * x, 2 * y) + g.at(2 * x + 1, 2 * y) + g.at(2 * x, 2 * y + 1) + g.at(2 * x + 1, 2 * y + 1)) /
                      4.0);
  return out;
}

SsimPair ssim(const Gray& a, const Gray& b) {
  constexpr int n = 11;
  constexpr double sigma = 1.5;
  const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
  double window[n][n];
  double total = 0;
  for (int dy = 0; dy < n; ++dy)
    for (int dx = 0; dx < n; ++dx) {
      const double ry = dy - 5, rx = dx - 5;
      window[dy][dx] = std::exp(-(rx * rx + ry * ry) / (2 * sigma * sigma));
      total += window[dy][dx];
    }
  for (auto& row : window)
    for (auto& w : row) w /= total;

  double ssim_sum = 0, cs_sum = 0;
  std::size_t count = 0;
  for (std::size_t y = 0; y + n <= a.height; ++y)
    for (std::size_t x = 0; x + n <= a.width; ++x) {
      double mx = 0, my = 0;
      for (int dy = 0; dy < n; ++dy)
        for (int dx = 0; dx < n; ++dx) {
          mx += window[dy][dx] * a.at(x + dx, y + dy);
          my += window[dy][dx] * b.at(x + dx, y + dy);
        }
      double vx = 0, vy = 0, cov = 0;
      for (int dy = 0; dy < n; ++dy)
        for (int dx = 0; dx < n; ++dx) {
          const double p = a.at(x + dx, y + dy) - mx, q = b.at(x + dx, y + dy) - my;
          vx += window[dy][dx] * p * p;
          vy += window[dy][dx] * q * q;
          cov += window[dy][dx] * p * q;
        }
      const double l = (2 * mx * my + c1) / (mx * mx + my * my + c1);
      const double cs = (2 * cov + c2) / (vx + vy + c2);
      ssim_sum += l * cs;
      cs_sum += cs;
      ++count;
    }
  return {ssim_sum / count, cs_sum / count};
}

double ms_ssim(const Tile& ta, const Tile& tb) {
  const double weights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  Gray a = luma(ta), b = luma(tb);
  double product = 1;
  for (int j = 0; j < 5; ++j) {
    const SsimPair s = ssim(a, b);
    const double term = j < 4 ? s.cs : s.ssim;
    product *= std::pow(std::max(term, 0.0), weights[j]);
    a = pool(a);
    b = pool(b);
  }
  return product;
}

std::vector<float> conv2d(const std::vector<float>& input, std::size_t channels, std::size_t height, std::size_t width,
                          const std::vector<float>& weight, const std::vector<float>& bias, std::size_t out_channels,
                          std::size_t kernel, std::size_t stride, std::size_t padding, std::size_t& out_h,
                          std::size_t& out_w) {
  out_h = (height + 2 * padding - kernel) / stride + 1;
  out_w = (width + 2 * padding - kernel) / stride + 1;
  std::vector<float> out(out_channels * out_h * out_w);
  for (std::size_t o = 0; o < out_channels; ++o)
    for (std::size_t oy = 0; oy < out_h; ++oy)
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        double acc = bias[o];
        for (std::size_t c = 0; c < channels; ++c)
          for (std::size_t ky = 0; ky < kernel; ++ky)
            for (std::size_t kx = 0; kx < kernel; ++kx) {
              const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(padding);
              const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(padding);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(height) || ix >= static_cast<long>(width)) continue;
              acc += static_cast<double>(weight[((o * channels + c) * kernel + ky) * kernel + kx]) *
                     input[(c * height + static_cast<std::size_t>(iy)) * width + static_cast<std::size_t>(ix)];
            }
        out[(o * out_h + oy) * out_w + ox] = static_cast<float>(acc);
      }
  return out;
}

double entropy(std::span<const std::int32_t> symbols) {
  std::map<std::int32_t, double> hist;
  for (const auto s : symbols) hist[s] += 1;
  double h = 0;
  for (const auto& [s, c] : hist) {
    const double p = c / symbols.size();
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace pathbench::oracle
