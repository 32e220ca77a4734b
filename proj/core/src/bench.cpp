// SPDX-License-Identifier: Apache-2.0
#include "pathbench/bench.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <chrono>
#include <numeric>
#include <thread>

#include <fmt/format.h>

namespace pathbench {

const char* to_string(TimingPhase phase) noexcept { return phase == TimingPhase::Encode ? "encode" : "decode"; }

std::string host_descriptor() {
  utsname u{};
  std::string sys = "unknown";
  if (::uname(&u) == 0) sys = fmt::format("{} {} {}", u.sysname, u.release, u.machine);
  return fmt::format("{}, {} hardware threads", sys, std::thread::hardware_concurrency());
}

namespace {

using Clock = std::chrono::steady_clock;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Runs warmup untimed passes and `reps` timed passes of `pass`.
template <typename Pass>
TimingReport measure(std::size_t tile_count, std::size_t warmup, std::size_t reps, Pass&& pass) {
  if (reps == 0) throw DomainError("timing: reps must be at least 1");
  if (tile_count == 0) throw DomainError("timing: empty corpus");
  for (std::size_t w = 0; w < warmup; ++w) pass();
  TimingReport report;
  report.tile_count = tile_count;
  report.warmup_reps = warmup;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto start = Clock::now();
    pass();
    const auto stop = Clock::now();
    report.per_rep_seconds.push_back(std::chrono::duration<double>(stop - start).count());
  }
  report.total_seconds = std::accumulate(report.per_rep_seconds.begin(), report.per_rep_seconds.end(), 0.0);
  if (!(report.total_seconds > 0.0)) report.total_seconds = std::chrono::duration<double>(Clock::duration(1)).count();
  report.tiles_per_second = static_cast<double>(tile_count * reps) / report.total_seconds;
  report.median_rep_seconds = median(report.per_rep_seconds);
  report.host = host_descriptor();
  return report;
}

}  // namespace

EncodeTiming time_encode(const Codec& codec, std::span<const Tile> corpus, double quality, std::size_t warmup,
                         std::size_t reps) {
  EncodeTiming result;
  std::vector<CompressedBlob> blobs(corpus.size());
  result.report = measure(corpus.size(), warmup, reps, [&] {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      try {
        blobs[i] = codec.encode(corpus[i], quality);
      } catch (const std::exception& e) {
        throw Error(fmt::format("encode timing aborted at tile {} ('{}'): {}", i, corpus[i].id(), e.what()));
      }
    }
  });
  result.report.codec_id = codec.info().name;
  result.report.quality = quality;
  result.report.phase = TimingPhase::Encode;
  result.blobs = std::move(blobs);
  return result;
}

TimingReport time_decode(const Codec& codec, std::span<const CompressedBlob> blobs, std::size_t warmup,
                         std::size_t reps) {
  TimingReport report = measure(blobs.size(), warmup, reps, [&] {
    for (std::size_t i = 0; i < blobs.size(); ++i) {
      Tile t;
      try {
        t = codec.decode(blobs[i]);
      } catch (const std::exception& e) {
        throw Error(fmt::format("decode timing aborted at tile {}: {}", i, e.what()));
      }
      if (t.width() != blobs[i].source_width || t.height() != blobs[i].source_height) {
        throw ValidationError(fmt::format("decode timing: tile {} decoded to {}x{}, blob says {}x{}", i, t.width(),
                                          t.height(), blobs[i].source_width, blobs[i].source_height));
      }
    }
  });
  report.codec_id = codec.info().name;
  report.quality = blobs.empty() ? 0.0 : blobs.front().quality;
  report.phase = TimingPhase::Decode;
  return report;
}

}  // namespace pathbench
