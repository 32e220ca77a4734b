// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pathbench/codec.hpp"
#include "pathbench/metrics.hpp"

namespace pathbench {

/// Mean and population standard deviation.
struct Aggregate {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
};

/// Throws DomainError on an empty list or non-finite values.
Aggregate aggregate(std::span<const double> values);

struct PointFlags {
  bool target_unreachable = false;
  bool tolerance_missed = false;  // target reachable but no evaluated quality within tolerance
  bool grid_search = false;       // bpp(q) was not monotone; fell back to a grid
  bool scale_reduced = false;     // MS-SSIM ran with fewer than five scales
  bool psnr_capped = false;       // infinite PSNR replaced by the cap before aggregation

  /// '|'-joined names of the set flags, empty when none.
  std::string to_string() const;
  static PointFlags parse(const std::string& text);
  friend bool operator==(const PointFlags&, const PointFlags&) = default;
};

inline constexpr double kDefaultRateTolerance = 0.05;
inline constexpr std::size_t kDefaultMaxIterations = 16;
inline constexpr std::size_t kDefaultRateSample = 50;

struct RateTargetOptions {
  double tolerance = kDefaultRateTolerance;  // relative: |achieved - target| <= tol * target
  std::size_t max_iter = kDefaultMaxIterations;
  std::size_t jobs = 1;
};

struct RateTargetResult {
  double quality = 0.0;
  double achieved_bpp = 0.0;
  PointFlags flags;
  std::vector<std::pair<double, double>> evaluations;  // (quality, corpus-mean bpp) in evaluation order
};

/// Corpus-mean bpp at one quality.
double mean_bpp(const Codec& codec, std::span<const Tile> tiles, double quality, std::size_t jobs = 1);

/// Bisection on corpus-mean bpp over the codec's quality range. Integer-kind codecs
/// bisect on integers; ties go to the lower quality. A five-point pre-flight probe
/// switches to a 20-point grid search when bpp(q) is not monotone.
RateTargetResult target_bpp(const Codec& codec, std::span<const Tile> sample, double target,
                            const RateTargetOptions& options = {});

/// Indices of min(n, size) tiles drawn without replacement by seeded shuffle, ascending.
std::vector<std::size_t> rate_sample_indices(std::size_t corpus_size, std::size_t n, std::uint64_t seed);

/// One stage of a compression chain: a codec at a fixed quality, or rate-targeted on the stage input.
struct ChainStage {
  std::shared_ptr<const Codec> codec;
  std::optional<double> quality;
  std::optional<double> target_bpp;
};

struct ChainSpec {
  std::string name;
  std::vector<ChainStage> stages;
  void validate() const;
};

struct ChainResult {
  Tile tile;
  CompressedBlob blob;  // the final stage only; its bpp is the effective rate
};

/// Applies the stages in order, each encoding the previous stage's decoded output.
ChainResult chain_compress(const ChainSpec& chain, const Tile& tile, const RateTargetOptions& rate = {});

/// One point of a rate-distortion curve.
struct RateDistortionPoint {
  std::string codec_id;
  double target_bpp = 0.0;
  double achieved_bpp = 0.0;
  double quality = 0.0;
  std::vector<std::pair<std::string, Aggregate>> metrics;  // psnr, ms_ssim, deep_distance, cosine:<tap>
  std::size_t tile_count = 0;
  PointFlags flags;

  const Aggregate* metric(const std::string& name) const;
};

struct PointFailure {
  std::string codec_id;
  double target_bpp = 0.0;
  std::string diagnostic;
};

/// One per-tile value behind an aggregate.
struct RawValue {
  std::string codec_id;
  double target_bpp = 0.0;
  std::string tile_id;
  std::string metric;
  double value = 0.0;
};

struct SweepOptions {
  RateTargetOptions rate;
  MetricSelection metrics;
  const FeatureExtractor* extractor = nullptr;
  MsSsimOptions ms_ssim;
  std::size_t rate_sample = kDefaultRateSample;
  bool full_corpus_targeting = false;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool keep_raw = false;
  /// Fixed-quality stages applied to every tile before the swept codec; metrics still compare
  /// against the untouched originals.
  std::vector<ChainStage> prefix;
  std::string label;  // reported codec id; defaults to the codec name
};

struct SweepResult {
  std::vector<RateDistortionPoint> points;
  std::vector<PointFailure> failures;
  std::vector<RawValue> raw;
};

/// For each target: rate-target, encode and decode every tile, evaluate the selected metrics
/// against the originals and aggregate in corpus order. A failing tile aborts only its point.
SweepResult sweep(const Codec& codec, std::span<const Tile> corpus, std::span<const double> targets,
                  const SweepOptions& options);

/// Evaluates one codec at one known quality over the corpus (no rate search).
RateDistortionPoint evaluate_at_quality(const Codec& codec, std::span<const Tile> inputs,
                                        std::span<const Tile> originals, double quality, const SweepOptions& options,
                                        std::vector<RawValue>* raw = nullptr);

}  // namespace pathbench
