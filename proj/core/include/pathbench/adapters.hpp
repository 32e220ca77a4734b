// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "pathbench/codec.hpp"
#include "pathbench/extractor.hpp"
#include "pathbench/subprocess.hpp"

namespace pathbench {

inline constexpr double kDefaultAdapterTimeoutSeconds = 120.0;

/// How to invoke an external adapter: `<executable> <extra_args...> <subcommand> ...`.
struct AdapterHandle {
  std::string executable;
  std::vector<std::string> extra_args;
  double timeout_seconds = kDefaultAdapterTimeoutSeconds;

  void validate() const;
  std::vector<std::string> command(std::initializer_list<std::string> tail) const;
};

/// Runs `<exe> capabilities` and parses the one-line JSON reply.
CodecInfo probe_capabilities(const AdapterHandle& handle);
CodecInfo parse_codec_info(const std::string& json_text);
std::string codec_info_to_json(const CodecInfo& info);

/// Decimal string passed on the command line; integer-kind codecs get the rounded value.
std::string format_quality(double quality, QualityKind kind);

/// `<exe> encode --quality <q>`: PNM on stdin, blob on stdout.
CompressedBlob adapter_encode(const AdapterHandle& handle, const CodecInfo& info, const Tile& tile, double quality);
/// `<exe> decode`: blob on stdin, PNM on stdout. Validates dimensions against the blob.
Tile adapter_decode(const AdapterHandle& handle, const CompressedBlob& blob);

/// An external program behind the Codec interface. Capabilities are probed once.
class AdapterCodec final : public Codec {
 public:
  explicit AdapterCodec(AdapterHandle handle);
  AdapterCodec(AdapterHandle handle, CodecInfo info);
  const CodecInfo& info() const override { return info_; }
  CompressedBlob encode(const Tile& tile, double quality) const override;
  Tile decode(const CompressedBlob& blob) const override;
  const AdapterHandle& handle() const noexcept { return handle_; }

 private:
  AdapterHandle handle_;
  CodecInfo info_;
};

struct ExtractorCapabilities {
  std::string name;
  std::vector<TapInfo> taps;
};

ExtractorCapabilities probe_extractor(const AdapterHandle& handle);
ExtractorCapabilities parse_extractor_capabilities(const std::string& json_text);

/// FEAT stream: "FEAT", u32 tap count, then per tap u32 id length, id, u32 dim, dim float32 LE.
Bytes encode_feat(const FeatureSet& features);
FeatureSet parse_feat(std::span<const Byte> data);

/// `<exe> extract`: PNM on stdin, FEAT on stdout, checked against the declared taps.
FeatureSet adapter_extract(const AdapterHandle& handle, const ExtractorCapabilities& caps, const Tile& tile);

class AdapterExtractor final : public FeatureExtractor {
 public:
  explicit AdapterExtractor(AdapterHandle handle);
  std::string name() const override { return caps_.name; }
  std::vector<TapInfo> taps() const override { return caps_.taps; }
  FeatureSet extract(const Tile& tile) const override;

 private:
  AdapterHandle handle_;
  ExtractorCapabilities caps_;
};

enum class CheckStatus { Pass, Fail, NotApplicable };
const char* to_string(CheckStatus status) noexcept;

struct ConformanceEntry {
  std::string check;
  CheckStatus status = CheckStatus::Fail;
  std::string detail;
};

struct ConformanceReport {
  std::string adapter;
  std::vector<ConformanceEntry> entries;

  bool passed() const;
  const ConformanceEntry* find(const std::string& check) const;
};

/// Exercises capabilities, an encode/decode round trip at min/mid/max quality on a
/// synthetic tile, and a monotone-bpp spot check. Failures become report entries.
ConformanceReport conformance_check(const AdapterHandle& handle);

}  // namespace pathbench
