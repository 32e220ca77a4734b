// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

#include "pathbench/codec.hpp"
#include "pathbench/entropy.hpp"
#include "pathbench/image.hpp"

namespace pathbench {

using Block8x8 = std::array<double, 64>;  // row-major
using QuantBlock = std::array<std::int32_t, 64>;

/// Integer quality in [1, 100].
class QualityParam {
 public:
  explicit QualityParam(int q);
  int value() const noexcept { return q_; }
  /// JPEG-style scale: 5000 / q below 50, else 200 - 2q.
  double scale() const noexcept;
  /// Quantizer step: max(1, round(16 * scale / 100)).
  int step() const noexcept;

 private:
  int q_;
};

/// Orthonormal 2-D DCT-II and its inverse.
Block8x8 dct2_8x8(const Block8x8& block);
Block8x8 idct2_8x8(const Block8x8& coeffs);

QuantBlock quantize(const Block8x8& coeffs, QualityParam q);
Block8x8 dequantize(const QuantBlock& levels, QualityParam q);

/// Raster index visited at each zigzag position.
extern const std::array<std::uint8_t, 64> kZigzagOrder;
std::array<std::int32_t, 64> zigzag(const QuantBlock& block);
QuantBlock unzigzag(const std::array<std::int32_t, 64>& scan);

struct RefCodecOptions {
  bool subsample_420 = false;
};

/// Container magic for reference-codec blobs.
inline constexpr std::array<Byte, 4> kRefCodecMagic{'P', 'B', 'C', '1'};

/// Transform coder: YCbCr, optional 4:2:0, 8x8 DCT, flat quantizer, zigzag, DC prediction with end-of-block runs, canonical prefix code.
CompressedBlob refcodec_encode(const Tile& tile, QualityParam q, RefCodecOptions options = {});
Tile refcodec_decode(const CompressedBlob& blob);
Tile refcodec_decode(std::span<const Byte> bytes);

/// Reserved token closing every block's coefficient run.
inline constexpr Symbol kEndOfBlock = kMinSymbol;

/// Per-channel token stream as the entropy coder sees it. Each 8x8 block contributes its DC
/// minus the previous block's DC (0 before the first block), the zigzag AC levels up to the
/// last nonzero one, then kEndOfBlock.
std::array<std::vector<Symbol>, 3> refcodec_symbols(const Tile& tile, QualityParam q, RefCodecOptions options = {});

/// The reference codec behind the Codec interface; quality is rounded to an integer.
class RefCodec final : public Codec {
 public:
  explicit RefCodec(RefCodecOptions options = {});
  const CodecInfo& info() const override { return info_; }
  CompressedBlob encode(const Tile& tile, double quality) const override;
  Tile decode(const CompressedBlob& blob) const override;

 private:
  RefCodecOptions options_;
  CodecInfo info_;
};

}  // namespace pathbench
