// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "pathbench/codec.hpp"

namespace pathbench {

enum class TimingPhase { Encode, Decode };
const char* to_string(TimingPhase phase) noexcept;

inline constexpr std::size_t kDefaultWarmupReps = 1;
inline constexpr std::size_t kDefaultTimedReps = 3;

/// Wall-clock cost of coding a whole corpus, tile by tile, on one thread.
struct TimingReport {
  std::string codec_id;
  double quality = 0.0;
  TimingPhase phase = TimingPhase::Encode;
  std::size_t tile_count = 0;
  std::size_t warmup_reps = 0;
  std::vector<double> per_rep_seconds;
  double total_seconds = 0.0;     // sum of per_rep_seconds
  double tiles_per_second = 0.0;  // tile_count * reps / total_seconds
  double median_rep_seconds = 0.0;
  std::string host;
};

struct EncodeTiming {
  TimingReport report;
  std::vector<CompressedBlob> blobs;  // from the last timed pass, for the paired decode measurement
};

/// Warmup passes run first and are not timed; each timed pass encodes every tile sequentially.
EncodeTiming time_encode(const Codec& codec, std::span<const Tile> corpus, double quality,
                         std::size_t warmup = kDefaultWarmupReps, std::size_t reps = kDefaultTimedReps);

/// As time_encode; every decoded tile is checked against its blob's dimensions.
TimingReport time_decode(const Codec& codec, std::span<const CompressedBlob> blobs,
                         std::size_t warmup = kDefaultWarmupReps, std::size_t reps = kDefaultTimedReps);

/// "<sysname> <release> <machine>, <n> hardware threads".
std::string host_descriptor();

}  // namespace pathbench
