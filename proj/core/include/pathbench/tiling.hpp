// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pathbench/image.hpp"

namespace pathbench {

/// Row-major boolean raster; true marks foreground / eligible pixels.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t width, std::size_t height, bool fill = false) : width_(width), height_(height), bits_(width * height, fill) {}
  Mask(std::size_t width, std::size_t height, std::vector<bool> bits);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  bool operator()(std::size_t x, std::size_t y) const { return bits_[y * width_ + x]; }
  void set(std::size_t x, std::size_t y, bool v) { bits_[y * width_ + x] = v; }
  std::size_t count() const;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<bool> bits_;
};

inline constexpr int kDefaultWhiteThreshold = 220;
inline constexpr std::size_t kDefaultTileSize = 224;
inline constexpr double kDefaultMinCoverage = 0.30;

/// Background iff min(R, G, B) >= white_threshold.
Mask foreground_mask(const Tile& image, int white_threshold = kDefaultWhiteThreshold);

/// Reads a binary PGM (P5, maxval 255); nonzero samples are eligible.
Mask read_pgm_mask(std::span<const Byte> data);

struct TileOrigin {
  std::size_t x = 0;
  std::size_t y = 0;
  friend bool operator==(const TileOrigin&, const TileOrigin&) = default;
};

struct SampleResult {
  std::vector<TileOrigin> origins;
  bool shortfall = false;  // fewer than `count` placements were possible
};

/// Non-overlapping size x size placements on a size-aligned occupancy grid,
/// each covering at least ceil(min_coverage * size^2) mask pixels. Cells are drawn by
/// seeded rejection sampling, at most 100 * count draws.
SampleResult sample_tiles(const Tile& image, const Mask& mask, std::size_t size, std::size_t count,
                          double min_coverage, std::uint64_t seed);

struct TileRecord {
  std::string subject_id;
  std::optional<std::string> class_label;
  std::string path;  // relative to the manifest root
  std::size_t width = 0;
  std::size_t height = 0;
  friend bool operator==(const TileRecord&, const TileRecord&) = default;
};

struct CorpusManifest {
  std::string name;
  std::filesystem::path root;
  std::vector<TileRecord> records;  // sorted by (subject_id, path)

  std::vector<std::string> subjects() const;
};

/// Where subject and class come from when scanning a directory tree.
enum class SubjectLayout {
  SubjectDir,          // root/<subject>/.../<file>
  ClassThenSubjectDir  // root/<class>/<subject>/.../<file>
};

struct ManifestSpec {
  std::filesystem::path root;
  std::vector<std::string> patterns{"*.ppm"};   // fnmatch patterns on file names
  SubjectLayout layout = SubjectLayout::SubjectDir;
  std::map<std::string, std::string> label_map;  // subject -> class, overrides/combines with layout
  std::string name;
};

/// Deterministic, sorted manifest. Throws ValidationError listing subjects that map to more than one class.
CorpusManifest build_manifest(const ManifestSpec& spec);

/// Throws ValidationError if a subject carries two classes or a subject id is empty.
void validate_manifest(const CorpusManifest& manifest);

/// JSON lines, one record per line: subject_id, class_label, path, width, height.
std::string manifest_to_jsonl(const CorpusManifest& manifest);
CorpusManifest manifest_from_jsonl(const std::string& text, std::filesystem::path root = {}, std::string name = {});

/// Loads every record's tile, in manifest order, ids set to the record path.
std::vector<Tile> load_tiles(const CorpusManifest& manifest);

struct FoldAssignment {
  std::size_t k = 0;
  std::map<std::string, std::size_t> assignment;  // subject -> fold
  std::vector<std::size_t> fold_sizes() const;
};

/// Seeded shuffle of the distinct subjects followed by round-robin assignment.
FoldAssignment grouped_folds(const CorpusManifest& manifest, std::size_t k, std::uint64_t seed);

}  // namespace pathbench
