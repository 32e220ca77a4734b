// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pathbench/runner.hpp"

namespace pathbench {

inline constexpr const char* kRdCsvHeader = "codec,target_bpp,achieved_bpp,quality,metric,mean,std,n,flags";
inline constexpr const char* kSimilarityCsvHeader = "codec,tap_id,mean,std";
inline constexpr const char* kRawCsvHeader = "codec,target_bpp,tile_id,metric,value";

std::string rd_points_csv(const std::vector<RateDistortionPoint>& points);
std::string similarity_csv(const std::vector<SimilarityRow>& rows);
std::string raw_csv(const std::vector<RawValue>& raw);
std::string timing_json(const ReportBundle& bundle);
std::string metadata_json(const ReportMetadata& metadata);

/// Rate-distortion plot for one metric: one polyline per codec, achieved bpp against mean.
std::string rd_svg(const std::vector<RateDistortionPoint>& points, const std::string& metric);
/// Per-tap groups of mean +/- std whiskers, one per codec.
std::string similarity_svg(const std::vector<SimilarityRow>& rows);
/// Per-tile encode and decode seconds on a logarithmic axis.
std::string timing_svg(const std::vector<TimingReport>& reports);

/// Writes rd_points.csv, similarity.csv, timing.json, metadata.json, bundle.json, one SVG
/// per rate-distortion metric plus similarity/timing SVGs when there is data, and raw.csv
/// when `dump_raw`. Returns the written paths.
std::vector<std::filesystem::path> emit_reports(const ReportBundle& bundle, const std::filesystem::path& dir,
                                                bool dump_raw = false);

}  // namespace pathbench
