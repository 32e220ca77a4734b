// SPDX-License-Identifier: Apache-2.0
// In-process codecs with known behavior.
#pragma once

#include <atomic>
#include <algorithm>
#include <cmath>
#include <string>

#include "pathbench/codec.hpp"
#include "pathbench/refcodec.hpp"

namespace pathbench::testing {

/// Integer quality; bpp(q) = q / 100 exactly for tiles whose pixel count is a multiple of 800; decodes to mid-gray.
class LinearCodec final : public Codec {
 public:
  LinearCodec() {
    info_.name = "linear";
    info_.version = "1";
    info_.quality_min = 1;
    info_.quality_max = 100;
    info_.quality_kind = QualityKind::Int;
  }
  const CodecInfo& info() const override { return info_; }
  CompressedBlob encode(const Tile& tile, double quality) const override {
    CompressedBlob b;
    const auto n = static_cast<std::size_t>(std::llround(quality * static_cast<double>(tile.pixel_count()) / 800.0));
    b.bytes.assign(std::max<std::size_t>(n, 1), 0);
    b.codec_id = info_.name;
    b.quality = quality;
    b.source_width = tile.width();
    b.source_height = tile.height();
    return b;
  }
  Tile decode(const CompressedBlob& blob) const override {
    return Tile(blob.source_width, blob.source_height,
                std::vector<Byte>(blob.source_width * blob.source_height * 3, 128));
  }

 private:
  CodecInfo info_;
};

/// The reference codec with invocation counters.
class CountingCodec final : public Codec {
 public:
  const CodecInfo& info() const override { return inner_.info(); }
  CompressedBlob encode(const Tile& tile, double quality) const override {
    ++encodes;
    return inner_.encode(tile, quality);
  }
  Tile decode(const CompressedBlob& blob) const override {
    ++decodes;
    return inner_.decode(blob);
  }

  mutable std::atomic<std::size_t> encodes{0};
  mutable std::atomic<std::size_t> decodes{0};

 private:
  RefCodec inner_;
};

}  // namespace pathbench::testing
