// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pathbench/adapters.hpp"
#include "pathbench/bench.hpp"
#include "pathbench/ratecontrol.hpp"

namespace pathbench {

inline constexpr const char* kToolkitVersion = "0.3.0";

struct CorpusSource {
  enum class Kind { Manifest, Directory, Synthetic };
  Kind kind = Kind::Synthetic;
  std::filesystem::path path;              // manifest file or directory
  std::vector<std::string> patterns{"*.ppm"};
  std::size_t synthetic_count = 0;
  std::size_t synthetic_size = 224;
  std::uint64_t synthetic_seed = 0;
};

struct CodecEntry {
  enum class Kind { RefCodec, Adapter };
  std::string id;
  Kind kind = Kind::RefCodec;
  bool subsample = false;
  AdapterHandle adapter;
};

struct ChainEntry {
  struct Stage {
    std::string codec;
    double quality = 0.0;
  };
  std::string name;
  std::vector<Stage> prefix;  // fixed-quality precompression
  std::string codec;          // rate-targeted final stage
};

struct ExtractorChoice {
  enum class Kind { Seeded, Weights, Adapter };
  Kind kind = Kind::Seeded;
  std::uint64_t seed = 42;
  std::filesystem::path weights;
  AdapterHandle adapter;
};

struct TimingPlan {
  bool enabled = false;
  std::optional<double> quality;
  std::optional<double> target_bpp;
  std::size_t warmup = kDefaultWarmupReps;
  std::size_t reps = kDefaultTimedReps;
};

/// Everything a run needs, validated.
struct ExperimentPlan {
  std::string name = "experiment";
  CorpusSource corpus;
  std::vector<CodecEntry> codecs;
  std::vector<ChainEntry> chains;
  std::vector<double> targets;
  MetricSelection metrics;
  ExtractorChoice extractor;
  std::optional<double> similarity_bpp;
  TimingPlan timing;
  RateTargetOptions rate;
  std::size_t rate_sample = kDefaultRateSample;
  bool full_corpus_targeting = false;
  bool allow_scale_reduction = false;
  std::uint64_t seed = 0;
  std::filesystem::path output = "pathbench-out";
  std::size_t jobs = 1;
  bool dump_raw = false;

  /// FNV-1a 64 of the canonical JSON form (jobs and output excluded), as 16 hex digits.
  std::string config_hash() const;
};

/// Parses the JSON config. Unknown keys, type mismatches, out-of-range values and
/// missing files raise ValidationError naming the key path. Relative paths resolve
/// against `base_dir`.
ExperimentPlan load_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentPlan load_config_file(const std::filesystem::path& path);

/// Canonical JSON form of a plan, the input of config_hash().
std::string plan_to_json(const ExperimentPlan& plan);

struct SimilarityRow {
  std::string codec_id;
  std::string tap_id;
  Aggregate value;
  double quality = 0.0;
  double achieved_bpp = 0.0;
};

struct ScenarioFailure {
  std::string scenario;
  std::string codec_id;
  double target_bpp = 0.0;
  std::string diagnostic;
};

struct ReportMetadata {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string toolkit_version = kToolkitVersion;
  std::string plan_name;
  std::size_t tile_count = 0;
  double psnr_cap_db = kPsnrCapDb;
};

struct ReportBundle {
  ReportMetadata metadata;
  std::vector<RateDistortionPoint> rd_points;
  std::vector<SimilarityRow> similarity;
  std::vector<TimingReport> timing;
  std::vector<ScenarioFailure> failures;
  std::vector<RawValue> raw;

  bool partial() const noexcept { return !failures.empty(); }
};

struct Scenarios {
  bool sweep = true;
  bool similarity = true;
  bool timing = true;
};

/// Loads the corpus described by the plan.
std::vector<Tile> load_corpus(const CorpusSource& source);

/// Builds the configured extractor; nullptr when no feature metric or similarity scenario needs one.
std::unique_ptr<FeatureExtractor> make_extractor(const ExperimentPlan& plan);

/// Runs the selected scenarios. Failing points are recorded in `failures`; the rest still run.
ReportBundle run_experiment(const ExperimentPlan& plan, const Scenarios& scenarios = {});
ReportBundle run_experiment(const ExperimentPlan& plan, std::span<const Tile> corpus, const Scenarios& scenarios = {});

std::string bundle_to_json(const ReportBundle& bundle);
ReportBundle bundle_from_json(const std::string& text);

/// FNV-1a 64-bit.
std::uint64_t fnv1a64(std::string_view data) noexcept;

}  // namespace pathbench
