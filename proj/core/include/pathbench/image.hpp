// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "pathbench/error.hpp"

namespace pathbench {

using Byte = std::uint8_t;
using Bytes = std::vector<Byte>;

/// An 8-bit RGB raster, row-major interleaved. Immutable once constructed.
class Tile {
 public:
  Tile() = default;
  /// Throws DomainError when a dimension is zero or the buffer size is not width*height*3.
  Tile(std::size_t width, std::size_t height, std::vector<Byte> pixels, std::string id = {});

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return width_ * height_; }
  std::span<const Byte> pixels() const noexcept { return pixels_; }
  const std::string& id() const noexcept { return id_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::array<Byte, 3> at(std::size_t x, std::size_t y) const noexcept {
    const std::size_t i = (y * width_ + x) * 3;
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
  }

  Tile with_id(std::string id) const { return Tile(width_, height_, pixels_, std::move(id)); }

  /// Copy of the size x size region with top-left corner (x, y).
  Tile crop(std::size_t x, std::size_t y, std::size_t w, std::size_t h, std::string id = {}) const;

  friend bool operator==(const Tile& a, const Tile& b) noexcept {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.pixels_ == b.pixels_;
  }

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<Byte> pixels_;
  std::string id_;
};

/// Single-channel raster.
template <typename T>
class Plane {
 public:
  Plane() = default;
  Plane(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height), samples_(width * height, fill) {}
  Plane(std::size_t width, std::size_t height, std::vector<T> samples)
      : width_(width), height_(height), samples_(std::move(samples)) {
    if (samples_.size() != width_ * height_) throw DomainError("plane buffer size does not match dimensions");
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return samples_.size(); }

  T& operator()(std::size_t x, std::size_t y) noexcept { return samples_[y * width_ + x]; }
  const T& operator()(std::size_t x, std::size_t y) const noexcept { return samples_[y * width_ + x]; }

  std::span<T> samples() noexcept { return samples_; }
  std::span<const T> samples() const noexcept { return samples_; }

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> samples_;
};

using BytePlane = Plane<Byte>;
using RealPlane = Plane<double>;

/// Opaque codec output with the metadata needed for exact rate accounting.
struct CompressedBlob {
  Bytes bytes;
  std::string codec_id;
  double quality = 0.0;
  std::size_t source_width = 0;
  std::size_t source_height = 0;

  /// 8 * len(bytes) / (source_width * source_height).
  double bpp() const;
};

/// Parses a binary PPM (P6, maxval 255). Throws ParseError naming the byte offset.
Tile read_pnm(std::span<const Byte> data, std::string id = {});

/// Canonical "P6\n{w} {h}\n255\n" header followed by raw RGB.
Bytes write_pnm(const Tile& tile);

Tile read_pnm_file(const std::string& path);
void write_pnm_file(const std::string& path, const Tile& tile);

/// Reads just enough of a P6 header to return (width, height).
std::pair<std::size_t, std::size_t> read_pnm_dimensions(const std::string& path);

/// 8 * payload_len / (width * height). Throws DomainError for zero pixels.
double bits_per_pixel(std::size_t payload_len, std::size_t width, std::size_t height);

/// BT.601 luma, Y = round(0.299 R + 0.587 G + 0.114 B).
BytePlane to_luma(const Tile& tile);

/// JFIF full-range transform, channels rounded and saturated to [0, 255].
std::tuple<BytePlane, BytePlane, BytePlane> rgb_to_ycbcr(const Tile& tile);

/// Inverse JFIF transform. The real-valued overload rounds once, at the end.
Tile ycbcr_to_rgb(const BytePlane& y, const BytePlane& cb, const BytePlane& cr, std::string id = {});
Tile ycbcr_to_rgb(const RealPlane& y, const RealPlane& cb, const RealPlane& cr, std::string id = {});

/// round() and saturate to the 8-bit range.
inline Byte saturate_u8(double v) noexcept {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<Byte>(v + 0.5);
}

Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const Byte> data);

}  // namespace pathbench
