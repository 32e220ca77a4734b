// SPDX-License-Identifier: Apache-2.0
#include "pathbench/ratecontrol.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "pathbench/parallel.hpp"
#include "pathbench/random.hpp"

namespace pathbench {

Aggregate aggregate(std::span<const double> values) {
  if (values.empty()) throw DomainError("aggregate: empty list");
  double sum = 0.0;
  for (const double v : values) {
    if (!std::isfinite(v)) throw DomainError("aggregate: non-finite value");
    sum += v;
  }
  const double n = static_cast<double>(values.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n), values.size()};
}

std::string PointFlags::to_string() const {
  std::string out;
  const auto add = [&](bool set, const char* name) {
    if (!set) return;
    if (!out.empty()) out += '|';
    out += name;
  };
  add(target_unreachable, "target_unreachable");
  add(tolerance_missed, "tolerance_missed");
  add(grid_search, "grid_search");
  add(scale_reduced, "scale_reduced");
  add(psnr_capped, "psnr_capped");
  return out;
}

PointFlags PointFlags::parse(const std::string& text) {
  PointFlags f;
  std::istringstream in(text);
  std::string token;
  while (std::getline(in, token, '|')) {
    if (token == "target_unreachable") f.target_unreachable = true;
    else if (token == "tolerance_missed") f.tolerance_missed = true;
    else if (token == "grid_search") f.grid_search = true;
    else if (token == "scale_reduced") f.scale_reduced = true;
    else if (token == "psnr_capped") f.psnr_capped = true;
    else if (!token.empty()) throw ValidationError("unknown point flag '" + token + "'");
  }
  return f;
}

double mean_bpp(const Codec& codec, std::span<const Tile> tiles, double quality, std::size_t jobs) {
  if (tiles.empty()) throw DomainError("mean_bpp: empty corpus");
  std::vector<double> bpp(tiles.size());
  parallel_for(tiles.size(), jobs, [&](std::size_t i) { bpp[i] = codec.encode(tiles[i], quality).bpp(); });
  return std::accumulate(bpp.begin(), bpp.end(), 0.0) / static_cast<double>(bpp.size());
}

namespace {

class BppCache {
 public:
  BppCache(const Codec& codec, std::span<const Tile> sample, std::size_t jobs, RateTargetResult& result)
      : codec_(codec), sample_(sample), jobs_(jobs), result_(result) {}

  double operator()(double q) {
    if (auto it = cache_.find(q); it != cache_.end()) return it->second;
    const double b = mean_bpp(codec_, sample_, q, jobs_);
    cache_.emplace(q, b);
    result_.evaluations.emplace_back(q, b);
    return b;
  }

  // Closest evaluated quality; ties toward the lower quality (map order).
  std::pair<double, double> closest(double target) const {
    auto best = cache_.begin();
    for (auto it = cache_.begin(); it != cache_.end(); ++it) {
      if (std::abs(it->second - target) < std::abs(best->second - target)) best = it;
    }
    return *best;
  }

 private:
  const Codec& codec_;
  std::span<const Tile> sample_;
  std::size_t jobs_;
  RateTargetResult& result_;
  std::map<double, double> cache_;
};

double snap(double q, const CodecInfo& info) {
  q = std::clamp(q, info.quality_min, info.quality_max);
  return info.quality_kind == QualityKind::Int ? std::round(q) : q;
}

}  // namespace

RateTargetResult target_bpp(const Codec& codec, std::span<const Tile> sample, double target,
                            const RateTargetOptions& options) {
  if (sample.empty()) throw DomainError("target_bpp: empty corpus");
  if (!(target > 0.0)) throw DomainError("target_bpp: target must be positive");
  if (!(options.tolerance > 0.0)) throw DomainError("target_bpp: tolerance must be positive");
  const CodecInfo& info = codec.info();
  if (!info.can_encode) throw ValidationError("codec '" + info.name + "' cannot encode");

  RateTargetResult result;
  BppCache bpp(codec, sample, options.jobs, result);
  const double slack = options.tolerance * target;
  const auto within = [&](double b) { return std::abs(b - target) <= slack; };
  const auto finish = [&](double q) {
    result.quality = q;
    result.achieved_bpp = bpp(q);
    return result;
  };

  const double q_lo = snap(info.quality_min, info), q_hi = snap(info.quality_max, info);
  std::array<double, 5> probe{};
  for (std::size_t i = 0; i < probe.size(); ++i) probe[i] = snap(q_lo + (q_hi - q_lo) * static_cast<double>(i) / 4.0, info);
  const double b_lo = bpp(q_lo), b_hi = bpp(q_hi);

  bool monotone = true;
  double prev = b_lo;
  for (std::size_t i = 1; i < probe.size(); ++i) {
    const double b = bpp(probe[i]);
    if (b < prev) monotone = false;
    prev = b;
  }

  if (!monotone) {
    result.flags.grid_search = true;
    double lowest = b_lo, highest = b_lo;
    for (int i = 0; i < 20; ++i) {
      const double b = bpp(snap(q_lo + (q_hi - q_lo) * i / 19.0, info));
      lowest = std::min(lowest, b);
      highest = std::max(highest, b);
    }
    const auto [q, b] = bpp.closest(target);
    result.flags.target_unreachable = target < lowest || target > highest;
    result.flags.tolerance_missed = !result.flags.target_unreachable && !within(b);
    return finish(q);
  }

  if (target < b_lo) {
    result.flags.target_unreachable = true;
    return finish(q_lo);
  }
  if (target > b_hi) {
    result.flags.target_unreachable = true;
    return finish(q_hi);
  }
  if (within(b_lo)) return finish(q_lo);

  double lo = q_lo, hi = q_hi;
  const bool integral = info.quality_kind == QualityKind::Int;
  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    if (integral && hi - lo <= 1.0) break;
    const double mid = integral ? std::floor(0.5 * (lo + hi)) : 0.5 * (lo + hi);
    const double b = bpp(mid);
    if (within(b)) return finish(mid);
    (b < target ? lo : hi) = mid;
  }
  if (within(b_hi)) return finish(q_hi);

  const auto [q, b] = bpp.closest(target);
  result.flags.tolerance_missed = !within(b);
  return finish(q);
}

std::vector<std::size_t> rate_sample_indices(std::size_t corpus_size, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(corpus_size);
  std::iota(idx.begin(), idx.end(), 0);
  if (n >= corpus_size) return idx;
  SplitMix64 rng(seed);
  seeded_shuffle(std::span<std::size_t>(idx), rng);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

void ChainSpec::validate() const {
  if (stages.empty()) throw ValidationError("chain '" + name + "' has no stages");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    if (!s.codec) throw ValidationError(fmt::format("chain '{}' stage {} has no codec", name, i));
    if (s.quality.has_value() == s.target_bpp.has_value()) {
      throw ValidationError(fmt::format("chain '{}' stage {} needs exactly one of quality or target_bpp", name, i));
    }
  }
}

ChainResult chain_compress(const ChainSpec& chain, const Tile& tile, const RateTargetOptions& rate) {
  chain.validate();
  ChainResult result{tile, {}};
  for (std::size_t i = 0; i < chain.stages.size(); ++i) {
    const auto& stage = chain.stages[i];
    try {
      double q = 0.0;
      if (stage.quality) {
        q = *stage.quality;
      } else {
        const Tile single[] = {result.tile};
        q = target_bpp(*stage.codec, single, *stage.target_bpp, rate).quality;
      }
      result.blob = stage.codec->encode(result.tile, q);
      result.tile = stage.codec->decode(result.blob).with_id(tile.id());
    } catch (const Error& e) {
      throw Error(fmt::format("chain '{}' stage {} ({}): {}", chain.name, i, stage.codec->info().name, e.what()));
    }
  }
  return result;
}

const Aggregate* RateDistortionPoint::metric(const std::string& name) const {
  for (const auto& [n, a] : metrics)
    if (n == name) return &a;
  return nullptr;
}

RateDistortionPoint evaluate_at_quality(const Codec& codec, std::span<const Tile> inputs,
                                        std::span<const Tile> originals, double quality, const SweepOptions& options,
                                        std::vector<RawValue>* raw) {
  if (inputs.size() != originals.size()) throw DomainError("evaluate_at_quality: input/original count mismatch");
  if (inputs.empty()) throw DomainError("evaluate_at_quality: empty corpus");
  const std::size_t n = inputs.size();
  std::vector<double> bpp(n);
  std::vector<MetricReport> reports(n);
  std::vector<std::string> errors(n);
  parallel_for(n, options.jobs, [&](std::size_t i) {
    try {
      const CompressedBlob blob = codec.encode(inputs[i], quality);
      bpp[i] = blob.bpp();
      const Tile decoded = codec.decode(blob);
      reports[i] = evaluate_pair(originals[i], decoded, options.metrics, options.extractor, nullptr, options.ms_ssim);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) throw Error("tile '" + originals[i].id() + "': " + errors[i]);
  }

  RateDistortionPoint point;
  point.codec_id = options.label.empty() ? codec.info().name : options.label;
  point.quality = quality;
  point.tile_count = n;
  point.achieved_bpp = std::accumulate(bpp.begin(), bpp.end(), 0.0) / static_cast<double>(n);

  // Column gathering in corpus order, so aggregates do not depend on scheduling.
  std::vector<std::pair<std::string, std::vector<double>>> columns;
  const auto column = [&](const std::string& name) -> std::vector<double>& {
    for (auto& [k, v] : columns)
      if (k == name) return v;
    columns.emplace_back(name, std::vector<double>{});
    return columns.back().second;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = reports[i];
    if (r.psnr) {
      double v = *r.psnr;
      if (std::isinf(v)) {
        v = kPsnrCapDb;
        point.flags.psnr_capped = true;
      }
      column("psnr").push_back(v);
    }
    if (r.ms_ssim) column("ms_ssim").push_back(*r.ms_ssim);
    if (r.ms_ssim_scale_reduced) point.flags.scale_reduced = true;
    if (r.deep_distance) column("deep_distance").push_back(*r.deep_distance);
    if (r.cosine_per_tap) {
      for (const auto& [tap, s] : *r.cosine_per_tap) column("cosine:" + tap).push_back(s);
    }
  }
  for (const auto& [name, values] : columns) {
    point.metrics.emplace_back(name, aggregate(values));
    if (raw) {
      for (std::size_t i = 0; i < values.size(); ++i) {
        raw->push_back({point.codec_id, 0.0, originals[i].id(), name, values[i]});
      }
    }
  }
  if (raw) {
    for (std::size_t i = 0; i < n; ++i) raw->push_back({point.codec_id, 0.0, originals[i].id(), "bpp", bpp[i]});
  }
  return point;
}

SweepResult sweep(const Codec& codec, std::span<const Tile> corpus, std::span<const double> targets,
                  const SweepOptions& options) {
  SweepResult result;
  if (targets.empty()) return result;
  if (!std::is_sorted(targets.begin(), targets.end())) throw DomainError("sweep: targets must be sorted ascending");
  if (corpus.empty()) throw DomainError("sweep: empty corpus");
  const std::string label = options.label.empty() ? codec.info().name : options.label;

  // Precompressed inputs for recompression scenarios.
  std::vector<Tile> inputs(corpus.begin(), corpus.end());
  if (!options.prefix.empty()) {
    ChainSpec prefix{label + ":prefix", options.prefix};
    parallel_for(inputs.size(), options.jobs,
                 [&](std::size_t i) { inputs[i] = chain_compress(prefix, corpus[i], options.rate).tile; });
  }

  std::vector<Tile> sample;
  const auto idx = rate_sample_indices(inputs.size(), options.full_corpus_targeting ? inputs.size() : options.rate_sample,
                                       options.seed);
  for (const auto i : idx) sample.push_back(inputs[i]);

  SweepOptions point_options = options;
  point_options.label = label;
  for (const double target : targets) {
    try {
      RateTargetOptions rate = options.rate;
      rate.jobs = options.jobs;
      const RateTargetResult rt = target_bpp(codec, sample, target, rate);
      std::vector<RawValue> raw;
      RateDistortionPoint point =
          evaluate_at_quality(codec, inputs, corpus, rt.quality, point_options, options.keep_raw ? &raw : nullptr);
      point.target_bpp = target;
      const bool capped = point.flags.psnr_capped, reduced = point.flags.scale_reduced;
      point.flags = rt.flags;
      point.flags.psnr_capped = capped;
      point.flags.scale_reduced = reduced;
      for (auto& r : raw) r.target_bpp = target;
      result.raw.insert(result.raw.end(), raw.begin(), raw.end());
      result.points.push_back(std::move(point));
    } catch (const std::exception& e) {
      result.failures.push_back({label, target, e.what()});
    }
  }
  return result;
}

}  // namespace pathbench
