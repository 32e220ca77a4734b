// SPDX-License-Identifier: Apache-2.0
#include "pathbench/adapters.hpp"

#include <cmath>
#include <cstring>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pathbench/metrics.hpp"
#include "pathbench/synthetic.hpp"

namespace pathbench {

using json = nlohmann::json;

void AdapterHandle::validate() const {
  if (executable.empty()) throw ValidationError("adapter: empty executable path");
  if (!(timeout_seconds > 0.0)) throw ValidationError("adapter: timeout must be positive");
}

std::vector<std::string> AdapterHandle::command(std::initializer_list<std::string> tail) const {
  std::vector<std::string> argv{executable};
  argv.insert(argv.end(), extra_args.begin(), extra_args.end());
  argv.insert(argv.end(), tail.begin(), tail.end());
  return argv;
}

namespace {

ProcessResult invoke(const AdapterHandle& handle, std::initializer_list<std::string> tail, std::span<const Byte> input,
                     const std::string& what) {
  handle.validate();
  const auto timeout = std::chrono::milliseconds(static_cast<long long>(handle.timeout_seconds * 1000.0));
  ProcessResult r = run_process(handle.command(tail), input, timeout);
  if (r.exit_status != 0) {
    throw AdapterError(handle.executable + " " + what + " exited with status " + std::to_string(r.exit_status),
                       ProcessPhase::Wait, r.exit_status, r.stderr_data);
  }
  if (r.stdout_data.empty()) {
    throw AdapterError(handle.executable + " " + what + " produced no output", ProcessPhase::Read, 0, r.stderr_data);
  }
  return r;
}

std::string first_line(const Bytes& data) {
  std::string s(data.begin(), data.end());
  if (const auto nl = s.find('\n'); nl != std::string::npos) s.resize(nl);
  return s;
}

}  // namespace

CodecInfo parse_codec_info(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("capabilities: malformed JSON: ") + e.what(), e.byte);
  }
  CodecInfo info;
  try {
    info.name = j.at("name").get<std::string>();
    info.version = j.value("version", std::string{});
    info.quality_min = j.at("quality_min").get<double>();
    info.quality_max = j.at("quality_max").get<double>();
    const auto kind = j.at("quality_kind").get<std::string>();
    if (kind == "int") {
      info.quality_kind = QualityKind::Int;
    } else if (kind == "float") {
      info.quality_kind = QualityKind::Float;
    } else {
      throw ValidationError("capabilities: quality_kind must be \"int\" or \"float\", got \"" + kind + "\"");
    }
    info.can_encode = info.can_decode = false;
    for (const auto& m : j.at("modes")) {
      const auto mode = m.get<std::string>();
      if (mode == "encode") {
        info.can_encode = true;
      } else if (mode == "decode") {
        info.can_decode = true;
      } else {
        throw ValidationError("capabilities: unknown mode \"" + mode + "\"");
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("capabilities: ") + e.what());
  }
  info.validate();
  return info;
}

std::string codec_info_to_json(const CodecInfo& info) {
  json modes = json::array();
  if (info.can_encode) modes.push_back("encode");
  if (info.can_decode) modes.push_back("decode");
  json j{{"name", info.name},
         {"version", info.version},
         {"quality_min", info.quality_min},
         {"quality_max", info.quality_max},
         {"quality_kind", info.quality_kind == QualityKind::Int ? "int" : "float"},
         {"modes", modes}};
  return j.dump();
}

CodecInfo probe_capabilities(const AdapterHandle& handle) {
  const ProcessResult r = invoke(handle, {"capabilities"}, {}, "capabilities");
  try {
    return parse_codec_info(first_line(r.stdout_data));
  } catch (const ValidationError& e) {
    throw ValidationError(handle.executable + " capabilities: " + e.what());
  } catch (const ParseError& e) {
    throw AdapterError(handle.executable + " capabilities: " + e.what(), ProcessPhase::Read, 0, r.stderr_data);
  }
}

std::string format_quality(double quality, QualityKind kind) {
  if (kind == QualityKind::Int) return std::to_string(std::lround(quality));
  return fmt::format("{}", quality);
}

CompressedBlob adapter_encode(const AdapterHandle& handle, const CodecInfo& info, const Tile& tile, double quality) {
  if (!info.can_encode) throw ValidationError("codec '" + info.name + "' does not support encode");
  if (quality < info.quality_min || quality > info.quality_max) {
    throw ValidationError(fmt::format("quality {} outside [{}, {}] for codec '{}'", quality, info.quality_min,
                                      info.quality_max, info.name));
  }
  const Bytes pnm = write_pnm(tile);
  ProcessResult r = invoke(handle, {"encode", "--quality", format_quality(quality, info.quality_kind)}, pnm, "encode");
  CompressedBlob blob;
  blob.bytes = std::move(r.stdout_data);
  blob.codec_id = info.name;
  blob.quality = info.quality_kind == QualityKind::Int ? std::round(quality) : quality;
  blob.source_width = tile.width();
  blob.source_height = tile.height();
  return blob;
}

Tile adapter_decode(const AdapterHandle& handle, const CompressedBlob& blob) {
  const ProcessResult r = invoke(handle, {"decode"}, blob.bytes, "decode");
  Tile t;
  try {
    t = read_pnm(r.stdout_data);
  } catch (const ParseError& e) {
    throw AdapterError(handle.executable + " decode: " + e.what(), ProcessPhase::Read, 0, r.stderr_data);
  }
  const bool known = blob.source_width != 0 || blob.source_height != 0;
  if (known && (t.width() != blob.source_width || t.height() != blob.source_height)) {
    throw ValidationError(fmt::format("{} decode returned {}x{}, blob metadata says {}x{}", handle.executable,
                                      t.width(), t.height(), blob.source_width, blob.source_height));
  }
  return t;
}

AdapterCodec::AdapterCodec(AdapterHandle handle) : handle_(std::move(handle)), info_(probe_capabilities(handle_)) {}

AdapterCodec::AdapterCodec(AdapterHandle handle, CodecInfo info) : handle_(std::move(handle)), info_(std::move(info)) {
  info_.validate();
}

CompressedBlob AdapterCodec::encode(const Tile& tile, double quality) const {
  return adapter_encode(handle_, info_, tile, quality);
}

Tile AdapterCodec::decode(const CompressedBlob& blob) const {
  if (!info_.can_decode) throw ValidationError("codec '" + info_.name + "' does not support decode");
  return adapter_decode(handle_, blob).with_id(blob.codec_id);
}

ExtractorCapabilities parse_extractor_capabilities(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("extractor capabilities: malformed JSON: ") + e.what(), e.byte);
  }
  ExtractorCapabilities caps;
  try {
    caps.name = j.at("name").get<std::string>();
    std::set<std::string> seen;
    for (const auto& t : j.at("taps")) {
      TapInfo tap{t.at("id").get<std::string>(), t.at("dim").get<std::size_t>()};
      if (tap.dim == 0) throw ValidationError("extractor capabilities: tap '" + tap.id + "' declares dim 0");
      if (!seen.insert(tap.id).second) throw ValidationError("extractor capabilities: duplicate tap '" + tap.id + "'");
      caps.taps.push_back(std::move(tap));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("extractor capabilities: ") + e.what());
  }
  if (caps.taps.empty()) throw ValidationError("extractor capabilities: zero taps declared");
  return caps;
}

ExtractorCapabilities probe_extractor(const AdapterHandle& handle) {
  const ProcessResult r = invoke(handle, {"capabilities"}, {}, "capabilities");
  try {
    return parse_extractor_capabilities(first_line(r.stdout_data));
  } catch (const ValidationError& e) {
    throw ValidationError(handle.executable + " capabilities: " + e.what());
  } catch (const ParseError& e) {
    throw AdapterError(handle.executable + " capabilities: " + e.what(), ProcessPhase::Read, 0, r.stderr_data);
  }
}

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<Byte>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::span<const Byte> d, std::size_t& at) {
  if (d.size() - at < 4) throw FormatError("FEAT stream truncated at byte " + std::to_string(at));
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(d[at + i]) << (8 * i);
  at += 4;
  return v;
}

}  // namespace

Bytes encode_feat(const FeatureSet& features) {
  Bytes out{'F', 'E', 'A', 'T'};
  put_u32(out, static_cast<std::uint32_t>(features.size()));
  for (const auto& f : features) {
    put_u32(out, static_cast<std::uint32_t>(f.tap_id.size()));
    out.insert(out.end(), f.tap_id.begin(), f.tap_id.end());
    put_u32(out, static_cast<std::uint32_t>(f.values.size()));
    for (const float v : f.values) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      put_u32(out, bits);
    }
  }
  return out;
}

FeatureSet parse_feat(std::span<const Byte> data) {
  if (data.size() < 4 || std::memcmp(data.data(), "FEAT", 4) != 0) throw FormatError("FEAT stream: bad magic");
  std::size_t at = 4;
  const std::uint32_t taps = get_u32(data, at);
  FeatureSet set;
  for (std::uint32_t t = 0; t < taps; ++t) {
    const std::uint32_t id_len = get_u32(data, at);
    if (data.size() - at < id_len) throw FormatError("FEAT stream truncated in tap id");
    FeatureVector f;
    f.tap_id.assign(data.begin() + static_cast<std::ptrdiff_t>(at), data.begin() + static_cast<std::ptrdiff_t>(at + id_len));
    at += id_len;
    const std::uint32_t dim = get_u32(data, at);
    if ((data.size() - at) / 4 < dim) {
      throw FormatError(fmt::format("FEAT stream: tap '{}' declares {} floats, {} bytes remain", f.tap_id, dim,
                                    data.size() - at));
    }
    f.values.resize(dim);
    for (std::uint32_t d = 0; d < dim; ++d) {
      const std::uint32_t bits = get_u32(data, at);
      std::memcpy(&f.values[d], &bits, 4);
    }
    set.push_back(std::move(f));
  }
  if (at != data.size()) throw FormatError("FEAT stream: trailing bytes");
  return set;
}

FeatureSet adapter_extract(const AdapterHandle& handle, const ExtractorCapabilities& caps, const Tile& tile) {
  if (caps.taps.empty()) throw ValidationError("extractor '" + caps.name + "' declares zero taps");
  const ProcessResult r = invoke(handle, {"extract"}, write_pnm(tile), "extract");
  FeatureSet set = parse_feat(r.stdout_data);
  if (set.size() != caps.taps.size()) {
    throw ValidationError(fmt::format("extractor '{}' returned {} taps, declared {}", caps.name, set.size(),
                                      caps.taps.size()));
  }
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set[i].tap_id != caps.taps[i].id || set[i].values.size() != caps.taps[i].dim) {
      throw ValidationError(fmt::format("extractor '{}' tap {}: got '{}' dim {}, declared '{}' dim {}", caps.name, i,
                                        set[i].tap_id, set[i].values.size(), caps.taps[i].id, caps.taps[i].dim));
    }
  }
  validate_feature_set(set);
  return set;
}

AdapterExtractor::AdapterExtractor(AdapterHandle handle) : handle_(std::move(handle)), caps_(probe_extractor(handle_)) {}

FeatureSet AdapterExtractor::extract(const Tile& tile) const { return adapter_extract(handle_, caps_, tile); }

const char* to_string(CheckStatus status) noexcept {
  switch (status) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::NotApplicable: return "not applicable";
  }
  return "unknown";
}

bool ConformanceReport::passed() const {
  return std::none_of(entries.begin(), entries.end(), [](const auto& e) { return e.status == CheckStatus::Fail; });
}

const ConformanceEntry* ConformanceReport::find(const std::string& check) const {
  for (const auto& e : entries)
    if (e.check == check) return &e;
  return nullptr;
}

ConformanceReport conformance_check(const AdapterHandle& handle) {
  ConformanceReport report;
  report.adapter = handle.executable;

  CodecInfo info;
  try {
    info = probe_capabilities(handle);
    report.entries.push_back({"capabilities", CheckStatus::Pass, codec_info_to_json(info)});
  } catch (const Error& e) {
    report.entries.push_back({"capabilities", CheckStatus::Fail, e.what()});
    report.entries.push_back({"roundtrip", CheckStatus::Fail, "skipped: capabilities unavailable"});
    report.entries.push_back({"monotone_bpp", CheckStatus::Fail, "skipped: capabilities unavailable"});
    return report;
  }

  const Tile probe = synthetic::tissue_tile(64, 64, 0xC0FFEE).with_id("conformance");
  double mid = 0.5 * (info.quality_min + info.quality_max);
  if (info.quality_kind == QualityKind::Int) mid = std::round(mid);
  const std::array<double, 3> qualities{info.quality_min, mid, info.quality_max};

  std::array<double, 3> bpp{};
  std::string encode_failure;
  std::string roundtrip_failure;
  std::string roundtrip_detail;
  for (std::size_t i = 0; i < qualities.size(); ++i) {
    CompressedBlob blob;
    try {
      blob = adapter_encode(handle, info, probe, qualities[i]);
      bpp[i] = blob.bpp();
    } catch (const Error& e) {
      encode_failure = fmt::format("encode at quality {}: {}", qualities[i], e.what());
      break;
    }
    if (!info.can_decode) continue;
    try {
      const Tile back = adapter_decode(handle, blob);
      roundtrip_detail += fmt::format("q={} bpp={:.4f} psnr={:.2f}; ", qualities[i], bpp[i], psnr(probe, back));
    } catch (const Error& e) {
      if (roundtrip_failure.empty()) roundtrip_failure = fmt::format("decode at quality {}: {}", qualities[i], e.what());
    }
  }

  if (!encode_failure.empty()) {
    report.entries.push_back({"roundtrip", CheckStatus::Fail, encode_failure});
    report.entries.push_back({"monotone_bpp", CheckStatus::Fail, encode_failure});
    return report;
  }
  if (!info.can_decode) {
    report.entries.push_back({"roundtrip", CheckStatus::NotApplicable, "codec declares no decode mode"});
  } else if (!roundtrip_failure.empty()) {
    report.entries.push_back({"roundtrip", CheckStatus::Fail, roundtrip_failure});
  } else {
    report.entries.push_back({"roundtrip", CheckStatus::Pass, roundtrip_detail});
  }

  const std::string bpp_detail = fmt::format("bpp at min/mid/max quality: {:.4f} / {:.4f} / {:.4f}", bpp[0], bpp[1], bpp[2]);
  if (bpp[0] == bpp[1] && bpp[1] == bpp[2]) {
    report.entries.push_back({"monotone_bpp", CheckStatus::NotApplicable, "constant bpp; " + bpp_detail});
  } else if (bpp[0] <= bpp[1] && bpp[1] <= bpp[2]) {
    report.entries.push_back({"monotone_bpp", CheckStatus::Pass, bpp_detail});
  } else {
    report.entries.push_back({"monotone_bpp", CheckStatus::Fail, bpp_detail});
  }
  return report;
}

}  // namespace pathbench
