// SPDX-License-Identifier: Apache-2.0
#include "pathbench/refcodec.hpp"

#include <cmath>
#include <numbers>

namespace pathbench {

QualityParam::QualityParam(int q) : q_(q) {
  if (q < 1 || q > 100) throw DomainError("quality " + std::to_string(q) + " outside [1, 100]");
}

double QualityParam::scale() const noexcept {
  return q_ < 50 ? 5000.0 / q_ : 200.0 - 2.0 * q_;
}

int QualityParam::step() const noexcept {
  return std::max(1, static_cast<int>(std::lround(16.0 * scale() / 100.0)));
}

namespace {

// basis[u][x] = alpha(u) cos((2x + 1) u pi / 16)
const std::array<std::array<double, 8>, 8>& dct_basis() {
  static const auto basis = [] {
    std::array<std::array<double, 8>, 8> b{};
    for (int u = 0; u < 8; ++u) {
      const double alpha = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) b[u][x] = alpha * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
    return b;
  }();
  return basis;
}

}  // namespace

Block8x8 dct2_8x8(const Block8x8& block) {
  const auto& c = dct_basis();
  Block8x8 tmp{}, out{};
  // rows: tmp[y][u] = sum_x c[u][x] block[y][x]
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) s += c[u][x] * block[y * 8 + x];
      tmp[y * 8 + u] = s;
    }
  // columns: out[v][u] = sum_y c[v][y] tmp[y][u]
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) s += c[v][y] * tmp[y * 8 + u];
      out[v * 8 + u] = s;
    }
  return out;
}

Block8x8 idct2_8x8(const Block8x8& coeffs) {
  const auto& c = dct_basis();
  Block8x8 tmp{}, out{};
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += c[v][y] * coeffs[v * 8 + u];
      tmp[y * 8 + u] = s;
    }
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += c[u][x] * tmp[y * 8 + u];
      out[y * 8 + x] = s;
    }
  return out;
}

QuantBlock quantize(const Block8x8& coeffs, QualityParam q) {
  const double step = q.step();
  QuantBlock out{};
  for (std::size_t i = 0; i < 64; ++i) out[i] = static_cast<std::int32_t>(std::lround(coeffs[i] / step));
  return out;
}

Block8x8 dequantize(const QuantBlock& levels, QualityParam q) {
  const double step = q.step();
  Block8x8 out{};
  for (std::size_t i = 0; i < 64; ++i) out[i] = levels[i] * step;
  return out;
}

const std::array<std::uint8_t, 64> kZigzagOrder = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,  12, 19, 26, 33, 40, 48,
    41, 34, 27, 20, 13, 6,  7,  14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23,
    30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

std::array<std::int32_t, 64> zigzag(const QuantBlock& block) {
  std::array<std::int32_t, 64> out{};
  for (std::size_t i = 0; i < 64; ++i) out[i] = block[kZigzagOrder[i]];
  return out;
}

QuantBlock unzigzag(const std::array<std::int32_t, 64>& scan) {
  QuantBlock out{};
  for (std::size_t i = 0; i < 64; ++i) out[kZigzagOrder[i]] = scan[i];
  return out;
}

namespace {

constexpr std::size_t kHeaderBytes = 4 + 2 + 2 + 1 + 1;

RealPlane to_real(const BytePlane& p) {
  RealPlane out(p.width(), p.height());
  for (std::size_t i = 0; i < p.size(); ++i) out.samples()[i] = p.samples()[i];
  return out;
}

// 2x2 box average with edge replication; output is ceil(w/2) x ceil(h/2).
RealPlane downsample_420(const RealPlane& p) {
  const std::size_t w = (p.width() + 1) / 2, h = (p.height() + 1) / 2;
  RealPlane out(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t x0 = 2 * x, y0 = 2 * y;
      const std::size_t x1 = std::min(x0 + 1, p.width() - 1), y1 = std::min(y0 + 1, p.height() - 1);
      out(x, y) = 0.25 * (p(x0, y0) + p(x1, y0) + p(x0, y1) + p(x1, y1));
    }
  return out;
}

RealPlane upsample_420(const RealPlane& p, std::size_t w, std::size_t h) {
  RealPlane out(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) out(x, y) = p(x / 2, y / 2);
  return out;
}

std::vector<Symbol> encode_plane(const RealPlane& plane, QualityParam q) {
  const std::size_t bw = (plane.width() + 7) / 8, bh = (plane.height() + 7) / 8;
  std::vector<Symbol> symbols;
  symbols.reserve(bw * bh * 4);
  Block8x8 block{};
  Symbol prev_dc = 0;
  for (std::size_t by = 0; by < bh; ++by)
    for (std::size_t bx = 0; bx < bw; ++bx) {
      for (std::size_t y = 0; y < 8; ++y) {
        const std::size_t sy = std::min(by * 8 + y, plane.height() - 1);
        for (std::size_t x = 0; x < 8; ++x) {
          const std::size_t sx = std::min(bx * 8 + x, plane.width() - 1);
          block[y * 8 + x] = plane(sx, sy) - 128.0;
        }
      }
      const auto scan = zigzag(quantize(dct2_8x8(block), q));
      symbols.push_back(scan[0] - prev_dc);
      prev_dc = scan[0];
      std::size_t last = 63;
      while (last > 0 && scan[last] == 0) --last;
      symbols.insert(symbols.end(), scan.begin() + 1, scan.begin() + static_cast<std::ptrdiff_t>(last) + 1);
      symbols.push_back(kEndOfBlock);
    }
  return symbols;
}

RealPlane decode_plane(std::span<const Symbol> symbols, std::size_t w, std::size_t h, QualityParam q) {
  const std::size_t bw = (w + 7) / 8, bh = (h + 7) / 8;
  RealPlane plane(w, h);
  std::size_t at = 0;
  Symbol prev_dc = 0;
  const auto next = [&]() {
    if (at >= symbols.size()) throw FormatError("channel symbols end inside a block");
    return symbols[at++];
  };
  for (std::size_t by = 0; by < bh; ++by)
    for (std::size_t bx = 0; bx < bw; ++bx) {
      std::array<std::int32_t, 64> scan{};
      const Symbol dc = next();
      if (dc == kEndOfBlock) throw FormatError("end-of-block where a DC difference was expected");
      scan[0] = prev_dc + dc;
      prev_dc = scan[0];
      for (std::size_t k = 1;; ++k) {
        const Symbol s = next();
        if (s == kEndOfBlock) break;
        if (k == 64) throw FormatError("block carries more than 64 coefficients");
        scan[k] = s;
      }
      const Block8x8 pixels = idct2_8x8(dequantize(unzigzag(scan), q));
      for (std::size_t y = 0; y < 8 && by * 8 + y < h; ++y)
        for (std::size_t x = 0; x < 8 && bx * 8 + x < w; ++x) plane(bx * 8 + x, by * 8 + y) = pixels[y * 8 + x] + 128.0;
    }
  if (at != symbols.size()) throw FormatError("channel carries symbols past its last block");
  return plane;
}

std::array<RealPlane, 3> analysis_planes(const Tile& tile, bool subsample) {
  auto [y, cb, cr] = rgb_to_ycbcr(tile);
  std::array<RealPlane, 3> planes{to_real(y), to_real(cb), to_real(cr)};
  if (subsample) {
    planes[1] = downsample_420(planes[1]);
    planes[2] = downsample_420(planes[2]);
  }
  return planes;
}

}  // namespace

std::array<std::vector<Symbol>, 3> refcodec_symbols(const Tile& tile, QualityParam q, RefCodecOptions options) {
  const auto planes = analysis_planes(tile, options.subsample_420);
  return {encode_plane(planes[0], q), encode_plane(planes[1], q), encode_plane(planes[2], q)};
}

CompressedBlob refcodec_encode(const Tile& tile, QualityParam q, RefCodecOptions options) {
  if (tile.width() > 0xFFFF || tile.height() > 0xFFFF) throw DomainError("tile too large for the container (max 65535)");
  const auto symbols = refcodec_symbols(tile, q, options);

  CompressedBlob blob;
  blob.codec_id = options.subsample_420 ? "refcodec-420" : "refcodec";
  blob.quality = q.value();
  blob.source_width = tile.width();
  blob.source_height = tile.height();
  Bytes& out = blob.bytes;
  out.insert(out.end(), kRefCodecMagic.begin(), kRefCodecMagic.end());
  out.push_back(static_cast<Byte>(tile.width() & 0xFF));
  out.push_back(static_cast<Byte>(tile.width() >> 8));
  out.push_back(static_cast<Byte>(tile.height() & 0xFF));
  out.push_back(static_cast<Byte>(tile.height() >> 8));
  out.push_back(static_cast<Byte>(q.value()));
  out.push_back(options.subsample_420 ? 0x01 : 0x00);
  for (const auto& channel : symbols) entropy_encode_into(channel, out);
  return blob;
}

Tile refcodec_decode(std::span<const Byte> bytes) {
  if (bytes.size() < kHeaderBytes || !std::equal(kRefCodecMagic.begin(), kRefCodecMagic.end(), bytes.begin())) {
    throw FormatError("not a reference-codec container (bad magic)");
  }
  const std::size_t w = bytes[4] | (static_cast<std::size_t>(bytes[5]) << 8);
  const std::size_t h = bytes[6] | (static_cast<std::size_t>(bytes[7]) << 8);
  if (w == 0 || h == 0) throw FormatError("container declares zero dimensions");
  const int quality = bytes[8];
  if (quality < 1 || quality > 100) throw FormatError("container declares quality " + std::to_string(quality));
  const QualityParam q(quality);
  const Byte flags = bytes[9];
  if (flags & ~0x01) throw FormatError("unknown container flags");
  const bool subsample = flags & 0x01;

  std::size_t offset = kHeaderBytes;
  std::array<RealPlane, 3> planes;
  for (int ch = 0; ch < 3; ++ch) {
    const bool chroma = ch > 0 && subsample;
    const std::size_t pw = chroma ? (w + 1) / 2 : w, ph = chroma ? (h + 1) / 2 : h;
    const auto symbols = entropy_decode(bytes, offset);
    planes[static_cast<std::size_t>(ch)] = decode_plane(symbols, pw, ph, q);
  }
  if (offset != bytes.size()) throw FormatError("trailing bytes after the last channel");
  if (subsample) {
    planes[1] = upsample_420(planes[1], w, h);
    planes[2] = upsample_420(planes[2], w, h);
  }
  return ycbcr_to_rgb(planes[0], planes[1], planes[2]);
}

Tile refcodec_decode(const CompressedBlob& blob) {
  Tile t = refcodec_decode(std::span<const Byte>(blob.bytes));
  if ((blob.source_width && t.width() != blob.source_width) || (blob.source_height && t.height() != blob.source_height)) {
    throw ValidationError("decoded dimensions differ from blob metadata");
  }
  return t;
}

RefCodec::RefCodec(RefCodecOptions options) : options_(options) {
  info_.name = options.subsample_420 ? "refcodec-420" : "refcodec";
  info_.version = "1";
  info_.quality_min = 1;
  info_.quality_max = 100;
  info_.quality_kind = QualityKind::Int;
}

CompressedBlob RefCodec::encode(const Tile& tile, double quality) const {
  return refcodec_encode(tile, QualityParam(static_cast<int>(std::lround(quality))), options_);
}

Tile RefCodec::decode(const CompressedBlob& blob) const { return refcodec_decode(blob); }

}  // namespace pathbench
