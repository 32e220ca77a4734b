// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "pathbench/image.hpp"

namespace pathbench {

enum class QualityKind { Int, Float };

/// Self-description of a codec, the same shape whether it runs in-process or behind an adapter.
struct CodecInfo {
  std::string name;
  std::string version;
  double quality_min = 1.0;
  double quality_max = 100.0;
  QualityKind quality_kind = QualityKind::Int;
  bool can_encode = true;
  bool can_decode = true;

  /// Throws ValidationError unless quality_min < quality_max and at least one mode is present.
  void validate() const;
};

/// Anything that turns a tile into a blob and back. Implementations must be safe to call
/// concurrently from several threads.
class Codec {
 public:
  virtual ~Codec() = default;
  virtual const CodecInfo& info() const = 0;
  virtual CompressedBlob encode(const Tile& tile, double quality) const = 0;
  virtual Tile decode(const CompressedBlob& blob) const = 0;
};

}  // namespace pathbench
