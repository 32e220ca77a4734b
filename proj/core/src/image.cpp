// SPDX-License-Identifier: Apache-2.0
#include "pathbench/image.hpp"

#include <cctype>
#include <fstream>
#include <iterator>

namespace pathbench {

Tile::Tile(std::size_t width, std::size_t height, std::vector<Byte> pixels, std::string id)
    : width_(width), height_(height), pixels_(std::move(pixels)), id_(std::move(id)) {
  if (width_ == 0 || height_ == 0) throw DomainError("tile dimensions must be positive");
  if (pixels_.size() != width_ * height_ * 3) {
    throw DomainError("tile buffer holds " + std::to_string(pixels_.size()) + " bytes, expected " +
                      std::to_string(width_ * height_ * 3));
  }
}

Tile Tile::crop(std::size_t x, std::size_t y, std::size_t w, std::size_t h, std::string id) const {
  if (x + w > width_ || y + h > height_) throw DomainError("crop region exceeds tile bounds");
  std::vector<Byte> out(w * h * 3);
  for (std::size_t row = 0; row < h; ++row) {
    const auto* src = pixels_.data() + ((y + row) * width_ + x) * 3;
    std::copy(src, src + w * 3, out.begin() + static_cast<std::ptrdiff_t>(row * w * 3));
  }
  return Tile(w, h, std::move(out), std::move(id));
}

double CompressedBlob::bpp() const { return bits_per_pixel(bytes.size(), source_width, source_height); }

namespace {

class PnmHeaderReader {
 public:
  explicit PnmHeaderReader(std::span<const Byte> data) : data_(data) {}

  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      if (std::isspace(data_[pos_])) {
        ++pos_;
      } else if (data_[pos_] == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t read_uint(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < data_.size() && std::isdigit(data_[pos_])) {
      value = value * 10 + static_cast<std::size_t>(data_[pos_] - '0');
      if (value > (1u << 24)) throw ParseError(std::string("PNM ") + what + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw ParseError(std::string("PNM header: expected ") + what, pos_);
    return value;
  }

  std::size_t pos_ = 0;

 private:
  std::span<const Byte> data_;
};

}  // namespace

Tile read_pnm(std::span<const Byte> data, std::string id) {
  if (data.size() < 2 || data[0] != 'P' || data[1] != '6') throw ParseError("unsupported magic, expected P6", 0);
  PnmHeaderReader reader(data);
  reader.pos_ = 2;
  const std::size_t width = reader.read_uint("width");
  const std::size_t height = reader.read_uint("height");
  const std::size_t maxval_at = reader.pos_;
  const std::size_t maxval = reader.read_uint("maxval");
  if (maxval != 255) throw ParseError("unsupported maxval " + std::to_string(maxval) + ", expected 255", maxval_at);
  if (width == 0 || height == 0) throw ParseError("PNM dimensions must be positive", maxval_at);
  if (reader.pos_ >= data.size() || !std::isspace(data[reader.pos_])) {
    throw ParseError("PNM header must end with a single whitespace byte", reader.pos_);
  }
  const std::size_t payload_at = reader.pos_ + 1;
  const std::size_t need = width * height * 3;
  if (data.size() - payload_at < need) {
    throw ParseError("truncated PNM payload: need " + std::to_string(need) + " bytes, have " +
                         std::to_string(data.size() - payload_at),
                     data.size());
  }
  std::vector<Byte> pixels(data.begin() + static_cast<std::ptrdiff_t>(payload_at),
                           data.begin() + static_cast<std::ptrdiff_t>(payload_at + need));
  return Tile(width, height, std::move(pixels), std::move(id));
}

Bytes write_pnm(const Tile& tile) {
  const std::string header = "P6\n" + std::to_string(tile.width()) + " " + std::to_string(tile.height()) + "\n255\n";
  Bytes out;
  out.reserve(header.size() + tile.pixels().size());
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), tile.pixels().begin(), tile.pixels().end());
  return out;
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::span<const Byte> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error("write failed for " + path);
}

Tile read_pnm_file(const std::string& path) {
  const Bytes data = read_file(path);
  try {
    return read_pnm(data, path);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.offset());
  }
}

void write_pnm_file(const std::string& path, const Tile& tile) { write_file(path, write_pnm(tile)); }

std::pair<std::size_t, std::size_t> read_pnm_dimensions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  Bytes head(256);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  if (head.size() < 2 || head[0] != 'P' || head[1] != '6') throw ParseError(path + ": unsupported magic, expected P6", 0);
  PnmHeaderReader reader(head);
  reader.pos_ = 2;
  const std::size_t w = reader.read_uint("width");
  const std::size_t h = reader.read_uint("height");
  return {w, h};
}

double bits_per_pixel(std::size_t payload_len, std::size_t width, std::size_t height) {
  const std::size_t pixels = width * height;
  if (pixels == 0) throw DomainError("bits_per_pixel: zero pixel count");
  return 8.0 * static_cast<double>(payload_len) / static_cast<double>(pixels);
}

BytePlane to_luma(const Tile& tile) {
  BytePlane y(tile.width(), tile.height());
  const auto px = tile.pixels();
  auto out = y.samples();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = saturate_u8(0.299 * px[3 * i] + 0.587 * px[3 * i + 1] + 0.114 * px[3 * i + 2]);
  }
  return y;
}

std::tuple<BytePlane, BytePlane, BytePlane> rgb_to_ycbcr(const Tile& tile) {
  BytePlane y(tile.width(), tile.height()), cb(tile.width(), tile.height()), cr(tile.width(), tile.height());
  const auto px = tile.pixels();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = px[3 * i], g = px[3 * i + 1], b = px[3 * i + 2];
    y.samples()[i] = saturate_u8(0.299 * r + 0.587 * g + 0.114 * b);
    cb.samples()[i] = saturate_u8(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b);
    cr.samples()[i] = saturate_u8(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b);
  }
  return {std::move(y), std::move(cb), std::move(cr)};
}

namespace {

template <typename T>
Tile inverse_transform(const Plane<T>& y, const Plane<T>& cb, const Plane<T>& cr, std::string id) {
  if (cb.width() != y.width() || cr.width() != y.width() || cb.height() != y.height() ||
      cr.height() != y.height()) {
    throw DomainError("ycbcr_to_rgb: plane dimensions differ");
  }
  std::vector<Byte> px(y.size() * 3);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double yy = y.samples()[i];
    const double u = static_cast<double>(cb.samples()[i]) - 128.0;
    const double v = static_cast<double>(cr.samples()[i]) - 128.0;
    px[3 * i] = saturate_u8(yy + 1.402 * v);
    px[3 * i + 1] = saturate_u8(yy - 0.344136 * u - 0.714136 * v);
    px[3 * i + 2] = saturate_u8(yy + 1.772 * u);
  }
  return Tile(y.width(), y.height(), std::move(px), std::move(id));
}

}  // namespace

Tile ycbcr_to_rgb(const BytePlane& y, const BytePlane& cb, const BytePlane& cr, std::string id) {
  return inverse_transform(y, cb, cr, std::move(id));
}

Tile ycbcr_to_rgb(const RealPlane& y, const RealPlane& cb, const RealPlane& cr, std::string id) {
  return inverse_transform(y, cb, cr, std::move(id));
}

}  // namespace pathbench
