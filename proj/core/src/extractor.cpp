// SPDX-License-Identifier: Apache-2.0
#include "pathbench/extractor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>

#include "pathbench/random.hpp"

namespace pathbench {

std::vector<std::size_t> LayerSpec::weight_shape() const {
  if (kind == Kind::Linear) return {out_channels, in_channels};
  return {out_channels, in_channels, kernel, kernel};
}

namespace {

bool needs_projection(std::size_t in, std::size_t out, std::size_t stride) { return in != out || stride != 1; }

std::size_t conv_out(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

std::size_t element_count(const std::vector<std::size_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::vector<LayerSpec> ExtractorSpec::layers() const {
  std::vector<LayerSpec> out;
  out.push_back({"stem", LayerSpec::Kind::Conv, 3, stem_channels, 3, 2, 1});
  std::size_t in = stem_channels;
  for (std::size_t s = 0; s < stage_channels.size(); ++s) {
    const std::string prefix = "stage" + std::to_string(s + 1);
    const std::size_t ch = stage_channels[s], stride = stage_strides[s];
    out.push_back({prefix + ".conv1", LayerSpec::Kind::Conv, in, ch, 3, stride, 1});
    out.push_back({prefix + ".conv2", LayerSpec::Kind::Conv, ch, ch, 3, 1, 1});
    if (needs_projection(in, ch, stride)) out.push_back({prefix + ".proj", LayerSpec::Kind::Conv, in, ch, 1, stride, 0});
    in = ch;
  }
  out.push_back({"fc", LayerSpec::Kind::Linear, in, embedding, 1, 1, 0});
  return out;
}

std::vector<std::string> ExtractorSpec::tap_ids() const {
  std::vector<std::string> ids;
  for (std::size_t s = 0; s < stage_channels.size(); ++s) ids.push_back("stage" + std::to_string(s + 1));
  ids.emplace_back("avgpool");
  ids.emplace_back("fc");
  return ids;
}

std::vector<std::size_t> ExtractorSpec::tap_dims(std::size_t width, std::size_t height) const {
  std::size_t w = conv_out(width, 3, 2, 1), h = conv_out(height, 3, 2, 1);
  std::vector<std::size_t> dims;
  for (std::size_t s = 0; s < stage_channels.size(); ++s) {
    w = conv_out(w, 3, stage_strides[s], 1);
    h = conv_out(h, 3, stage_strides[s], 1);
    dims.push_back(stage_channels[s] * w * h);
  }
  dims.push_back(stage_channels.back());
  dims.push_back(embedding);
  return dims;
}

void ExtractorSpec::validate() const {
  if (stage_channels.size() != stage_strides.size()) throw ValidationError("extractor: stage channel/stride lists differ");
  if (tap_ids().size() != 6) throw ValidationError("extractor: exactly six taps required (four stages)");
  if (stem_channels == 0 || embedding == 0) throw ValidationError("extractor: zero-width layer");
  for (std::size_t i = 0; i < stage_channels.size(); ++i) {
    if (stage_channels[i] == 0 || stage_strides[i] == 0) throw ValidationError("extractor: zero-width stage");
  }
}

ConvExtractor::ConvExtractor(ExtractorSpec spec, std::map<std::string, Tensor> tensors)
    : spec_(std::move(spec)), tensors_(std::move(tensors)) {
  spec_.validate();
  std::set<std::string> expected;
  for (const auto& layer : spec_.layers()) {
    for (const auto& [suffix, shape] : {std::pair{std::string(".weight"), layer.weight_shape()},
                                        std::pair{std::string(".bias"), std::vector<std::size_t>{layer.out_channels}}}) {
      const std::string name = layer.name + suffix;
      expected.insert(name);
      const auto it = tensors_.find(name);
      if (it == tensors_.end()) throw ValidationError("missing tensor '" + name + "'");
      if (it->second.dims != shape) throw ValidationError("tensor '" + name + "' has the wrong shape");
      if (it->second.data.size() != element_count(shape)) {
        throw ValidationError("tensor '" + name + "' data size does not match its shape");
      }
    }
  }
  for (const auto& [name, t] : tensors_) {
    if (!expected.count(name)) throw ValidationError("unexpected tensor '" + name + "'");
  }
}

std::vector<TapInfo> ConvExtractor::taps() const {
  std::vector<TapInfo> out;
  for (const auto& id : spec_.tap_ids()) out.push_back({id, 0});
  out[4].dim = spec_.stage_channels.back();
  out[5].dim = spec_.embedding;
  return out;
}

namespace nn {

Volume conv2d(const Volume& input, std::span<const float> weight, std::span<const float> bias, std::size_t out_channels,
              std::size_t kernel, std::size_t stride, std::size_t padding) {
  Volume out;
  out.channels = out_channels;
  out.height = conv_out(input.height, kernel, stride, padding);
  out.width = conv_out(input.width, kernel, stride, padding);
  out.data.assign(out.channels * out.height * out.width, 0.0f);
  const auto in_w = static_cast<long>(input.width), in_h = static_cast<long>(input.height);
  const auto pad = static_cast<long>(padding), st = static_cast<long>(stride);
  const auto ow = static_cast<long>(out.width);

  for (std::size_t oc = 0; oc < out_channels; ++oc) {
    float* dst = out.plane(oc);
    std::fill(dst, dst + out.height * out.width, bias.empty() ? 0.0f : bias[oc]);
    for (std::size_t ic = 0; ic < input.channels; ++ic) {
      const float* src = input.plane(ic);
      for (std::size_t ky = 0; ky < kernel; ++ky) {
        for (std::size_t kx = 0; kx < kernel; ++kx) {
          const float wv = weight[((oc * input.channels + ic) * kernel + ky) * kernel + kx];
          const long offx = static_cast<long>(kx) - pad;
          // ox range with 0 <= ox * stride + offx < in_w
          if (in_w - 1 - offx < 0) continue;
          const long ox_lo = offx >= 0 ? 0 : (-offx + st - 1) / st;
          const long ox_hi = std::min(ow - 1, (in_w - 1 - offx) / st);
          if (ox_lo > ox_hi) continue;
          for (std::size_t oy = 0; oy < out.height; ++oy) {
            const long iy = static_cast<long>(oy) * st + static_cast<long>(ky) - pad;
            if (iy < 0 || iy >= in_h) continue;
            const float* row = src + iy * in_w;
            float* orow = dst + oy * out.width;
            if (st == 1) {
              const float* s = row + offx;
              for (long ox = ox_lo; ox <= ox_hi; ++ox) orow[ox] += wv * s[ox];
            } else {
              for (long ox = ox_lo; ox <= ox_hi; ++ox) orow[ox] += wv * row[ox * st + offx];
            }
          }
        }
      }
    }
  }
  return out;
}

void relu(Volume& v) {
  for (auto& x : v.data) x = x > 0.0f ? x : 0.0f;
}

}  // namespace nn

FeatureSet ConvExtractor::extract(const Tile& tile) const {
  if (tile.width() < kMinExtractorSide || tile.height() < kMinExtractorSide) {
    throw DomainError("extractor input " + std::to_string(tile.width()) + "x" + std::to_string(tile.height()) +
                      " smaller than 32x32");
  }
  auto param = [&](const std::string& name) -> std::span<const float> { return tensors_.at(name).data; };

  nn::Volume x;
  x.channels = 3;
  x.height = tile.height();
  x.width = tile.width();
  x.data.resize(3 * x.height * x.width);
  const auto px = tile.pixels();
  const std::size_t n = x.height * x.width;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 3; ++c) x.data[c * n + i] = static_cast<float>(px[i * 3 + c]) / 255.0f;

  x = nn::conv2d(x, param("stem.weight"), param("stem.bias"), spec_.stem_channels, 3, 2, 1);
  nn::relu(x);

  const auto ids = spec_.tap_ids();
  FeatureSet features;
  std::size_t in = spec_.stem_channels;
  for (std::size_t s = 0; s < spec_.stage_channels.size(); ++s) {
    const std::string prefix = "stage" + std::to_string(s + 1);
    const std::size_t ch = spec_.stage_channels[s], stride = spec_.stage_strides[s];
    nn::Volume y = nn::conv2d(x, param(prefix + ".conv1.weight"), param(prefix + ".conv1.bias"), ch, 3, stride, 1);
    nn::relu(y);
    y = nn::conv2d(y, param(prefix + ".conv2.weight"), param(prefix + ".conv2.bias"), ch, 3, 1, 1);
    if (needs_projection(in, ch, stride)) {
      const nn::Volume shortcut =
          nn::conv2d(x, param(prefix + ".proj.weight"), param(prefix + ".proj.bias"), ch, 1, stride, 0);
      for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += shortcut.data[i];
    } else {
      for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += x.data[i];
    }
    nn::relu(y);
    x = std::move(y);
    in = ch;
    features.push_back({ids[s], x.data});
  }

  std::vector<float> pooled(x.channels);
  const std::size_t area = x.height * x.width;
  for (std::size_t c = 0; c < x.channels; ++c) {
    const float* p = x.plane(c);
    double sum = 0.0;
    for (std::size_t i = 0; i < area; ++i) sum += p[i];
    pooled[c] = static_cast<float>(sum / static_cast<double>(area));
  }
  features.push_back({ids[4], pooled});

  const auto fc_w = param("fc.weight");
  const auto fc_b = param("fc.bias");
  std::vector<float> embedding(spec_.embedding);
  for (std::size_t o = 0; o < spec_.embedding; ++o) {
    float acc = fc_b[o];
    for (std::size_t i = 0; i < pooled.size(); ++i) acc += fc_w[o * pooled.size() + i] * pooled[i];
    embedding[o] = acc;
  }
  features.push_back({ids[5], std::move(embedding)});
  return features;
}

ConvExtractor seeded_extractor(std::uint64_t seed) {
  ExtractorSpec spec;
  SplitMix64 rng(seed);
  std::map<std::string, Tensor> tensors;
  for (const auto& layer : spec.layers()) {
    Tensor w;
    w.dims = layer.weight_shape();
    w.data.resize(element_count(w.dims));
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.fan_in()));
    const auto fbound = static_cast<float>(bound);
    for (auto& v : w.data) {
      v = static_cast<float>(rng.uniform(-bound, bound));
      v = std::clamp(v, -fbound, fbound);
    }
    tensors[layer.name + ".weight"] = std::move(w);
    tensors[layer.name + ".bias"] = Tensor{{layer.out_channels}, std::vector<float>(layer.out_channels, 0.0f)};
  }
  return ConvExtractor(spec, std::move(tensors));
}

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<Byte>((v >> (8 * i)) & 0xFF));
}

class Cursor {
 public:
  explicit Cursor(std::span<const Byte> d) : d_(d) {}
  void need(std::size_t n, const char* what) const {
    if (d_.size() - at_ < n) throw FormatError(std::string("weights file truncated while reading ") + what);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(d_[at_ + static_cast<std::size_t>(i)]) << (8 * i);
    at_ += 4;
    return v;
  }
  std::span<const Byte> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = d_.subspan(at_, n);
    at_ += n;
    return s;
  }
  bool done() const { return at_ == d_.size(); }

 private:
  std::span<const Byte> d_;
  std::size_t at_ = 0;
};

}  // namespace

Bytes save_weights(const ConvExtractor& extractor) {
  Bytes out{'P', 'B', 'W', 'T'};
  put_u32(out, kWeightsVersion);
  const auto layers = extractor.spec().layers();
  put_u32(out, static_cast<std::uint32_t>(extractor.tensors().size()));
  // Layer order, weight before bias.
  for (const auto& layer : layers) {
    for (const std::string& name : {layer.name + ".weight", layer.name + ".bias"}) {
      const Tensor& t = extractor.tensors().at(name);
      put_u32(out, static_cast<std::uint32_t>(name.size()));
      out.insert(out.end(), name.begin(), name.end());
      put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
      for (const auto d : t.dims) put_u32(out, static_cast<std::uint32_t>(d));
      for (const float v : t.data) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32(out, bits);
      }
    }
  }
  return out;
}

std::vector<std::pair<std::string, Tensor>> parse_weights(std::span<const Byte> data) {
  Cursor cur(data);
  const auto magic = cur.take(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), "PBWT")) throw FormatError("weights file: bad magic");
  const std::uint32_t version = cur.u32("version");
  if (version != kWeightsVersion) throw FormatError("weights file: unsupported version " + std::to_string(version));
  const std::uint32_t count = cur.u32("tensor count");
  std::vector<std::pair<std::string, Tensor>> tensors;
  std::set<std::string> names;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = cur.u32("name length");
    const auto name_bytes = cur.take(name_len, "tensor name");
    std::string name(name_bytes.begin(), name_bytes.end());
    if (!names.insert(name).second) throw ValidationError("weights file: duplicate tensor name '" + name + "'");
    const std::uint32_t rank = cur.u32("rank");
    if (rank == 0 || rank > 8) throw FormatError("weights file: tensor '" + name + "' has rank " + std::to_string(rank));
    Tensor t;
    std::size_t elements = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      t.dims.push_back(cur.u32("dims"));
      elements *= t.dims.back();
      if (elements > (std::size_t{1} << 32)) throw FormatError("weights file: tensor '" + name + "' too large");
    }
    const auto raw = cur.take(elements * 4, "tensor data");
    t.data.resize(elements);
    for (std::size_t e = 0; e < elements; ++e) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(raw[e * 4 + static_cast<std::size_t>(b)]) << (8 * b);
      std::memcpy(&t.data[e], &bits, 4);
    }
    tensors.emplace_back(std::move(name), std::move(t));
  }
  if (!cur.done()) throw FormatError("weights file: trailing bytes after the declared tensors");
  return tensors;
}

ConvExtractor load_weights(std::span<const Byte> data) {
  std::map<std::string, Tensor> tensors;
  for (auto& [name, t] : parse_weights(data)) tensors.emplace(name, std::move(t));
  return ConvExtractor(ExtractorSpec{}, std::move(tensors));
}

}  // namespace pathbench
