// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pathbench/image.hpp"
#include "pathbench/metrics.hpp"

namespace pathbench {

struct TapInfo {
  std::string id;
  std::size_t dim = 0;  // 0 when it depends on the input size
};

/// Anything that maps a tile to a FeatureSet. extract() must be safe to call concurrently.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string name() const = 0;
  /// Declared taps, shallow to deep.
  virtual std::vector<TapInfo> taps() const = 0;
  virtual FeatureSet extract(const Tile& tile) const = 0;
};

/// One weighted layer of the built-in network.
struct LayerSpec {
  enum class Kind { Conv, Linear };
  std::string name;  // tensor prefix, e.g. "stage2.conv1"
  Kind kind = Kind::Conv;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::vector<std::size_t> weight_shape() const;
  std::size_t fan_in() const { return in_channels * kernel * kernel; }
};

/// Small residual network: 3x3 stride-2 stem, four single-block stages, global average
/// pool, linear head. Six taps: after each stage, after pooling, after the head.
struct ExtractorSpec {
  std::size_t stem_channels = 16;
  std::vector<std::size_t> stage_channels{16, 32, 64, 128};
  std::vector<std::size_t> stage_strides{1, 2, 2, 2};
  std::size_t embedding = 64;

  std::vector<LayerSpec> layers() const;
  std::vector<std::string> tap_ids() const;
  /// Tap dimensionalities for a width x height input.
  std::vector<std::size_t> tap_dims(std::size_t width, std::size_t height) const;
  /// Throws ValidationError unless the stages chain and there are exactly six taps.
  void validate() const;
};

inline constexpr std::size_t kMinExtractorSide = 32;

struct Tensor {
  std::vector<std::size_t> dims;
  std::vector<float> data;
};

/// The built-in convolutional extractor. Immutable after construction.
class ConvExtractor final : public FeatureExtractor {
 public:
  ConvExtractor(ExtractorSpec spec, std::map<std::string, Tensor> tensors);

  std::string name() const override { return "builtin-resnet"; }
  std::vector<TapInfo> taps() const override;
  FeatureSet extract(const Tile& tile) const override;

  const ExtractorSpec& spec() const noexcept { return spec_; }
  const std::map<std::string, Tensor>& tensors() const noexcept { return tensors_; }

 private:
  ExtractorSpec spec_;
  std::map<std::string, Tensor> tensors_;
};

/// He-uniform weights U(-sqrt(6/fan_in), +sqrt(6/fan_in)) from SplitMix64(seed), zero biases.
ConvExtractor seeded_extractor(std::uint64_t seed);

/// Weights file: "PBWT", u32 version, u32 tensor count, then per tensor u32 name length,
/// name, u32 rank, u32 dims, float32 little-endian data.
inline constexpr std::uint32_t kWeightsVersion = 1;
Bytes save_weights(const ConvExtractor& extractor);
ConvExtractor load_weights(std::span<const Byte> data);

/// Tensors in file order; throws FormatError on layout problems and ValidationError on duplicate names.
std::vector<std::pair<std::string, Tensor>> parse_weights(std::span<const Byte> data);

namespace nn {

/// CHW activation volume.
struct Volume {
  std::size_t channels = 0, height = 0, width = 0;
  std::vector<float> data;
  float* plane(std::size_t c) { return data.data() + c * height * width; }
  const float* plane(std::size_t c) const { return data.data() + c * height * width; }
};

/// Zero-padded 2-D convolution; weight is [out][in][k][k]. Accumulates in (in, ky, kx) order.
Volume conv2d(const Volume& input, std::span<const float> weight, std::span<const float> bias, std::size_t out_channels,
              std::size_t kernel, std::size_t stride, std::size_t padding);

void relu(Volume& v);

}  // namespace nn

}  // namespace pathbench
