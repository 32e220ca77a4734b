// SPDX-License-Identifier: Apache-2.0
#include "pathbench/tiling.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pathbench/random.hpp"

namespace pathbench {

namespace fs = std::filesystem;
using json = nlohmann::json;

Mask::Mask(std::size_t width, std::size_t height, std::vector<bool> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (bits_.size() != width_ * height_) throw DomainError("mask buffer size does not match dimensions");
}

std::size_t Mask::count() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true)); }

Mask foreground_mask(const Tile& image, int white_threshold) {
  Mask mask(image.width(), image.height());
  const auto px = image.pixels();
  for (std::size_t y = 0; y < image.height(); ++y) {
    for (std::size_t x = 0; x < image.width(); ++x) {
      const std::size_t i = (y * image.width() + x) * 3;
      const int lo = std::min({px[i], px[i + 1], px[i + 2]});
      mask.set(x, y, lo < white_threshold);
    }
  }
  return mask;
}

Mask read_pgm_mask(std::span<const Byte> data) {
  if (data.size() < 2 || data[0] != 'P' || data[1] != '5') throw ParseError("unsupported magic, expected P5", 0);
  std::size_t pos = 2;
  auto skip = [&] {
    while (pos < data.size() && (std::isspace(data[pos]) || data[pos] == '#')) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else {
        ++pos;
      }
    }
  };
  auto number = [&](const char* what) {
    skip();
    const std::size_t start = pos;
    std::size_t v = 0;
    while (pos < data.size() && std::isdigit(data[pos])) v = v * 10 + static_cast<std::size_t>(data[pos++] - '0');
    if (start == pos) throw ParseError(std::string("PGM header: expected ") + what, pos);
    return v;
  };
  const std::size_t w = number("width"), h = number("height");
  const std::size_t maxval_at = pos;
  if (number("maxval") != 255) throw ParseError("unsupported maxval, expected 255", maxval_at);
  const std::size_t payload = pos + 1;
  if (payload > data.size() || data.size() - payload < w * h) throw ParseError("truncated PGM payload", data.size());
  std::vector<bool> bits(w * h);
  for (std::size_t i = 0; i < w * h; ++i) bits[i] = data[payload + i] != 0;
  return Mask(w, h, std::move(bits));
}

namespace {

// Summed-area table over the mask for O(1) window counts.
class IntegralMask {
 public:
  explicit IntegralMask(const Mask& m) : w_(m.width() + 1), sums_((m.width() + 1) * (m.height() + 1), 0) {
    for (std::size_t y = 0; y < m.height(); ++y) {
      std::size_t row = 0;
      for (std::size_t x = 0; x < m.width(); ++x) {
        row += m(x, y) ? 1 : 0;
        sums_[(y + 1) * w_ + (x + 1)] = sums_[y * w_ + (x + 1)] + row;
      }
    }
  }
  std::size_t window(std::size_t x, std::size_t y, std::size_t size) const {
    const auto at = [&](std::size_t xx, std::size_t yy) { return sums_[yy * w_ + xx]; };
    return at(x + size, y + size) + at(x, y) - at(x + size, y) - at(x, y + size);
  }

 private:
  std::size_t w_;
  std::vector<std::size_t> sums_;
};

}  // namespace

SampleResult sample_tiles(const Tile& image, const Mask& mask, std::size_t size, std::size_t count,
                          double min_coverage, std::uint64_t seed) {
  if (size == 0 || size > std::min(image.width(), image.height())) {
    throw DomainError("sample_tiles: tile size " + std::to_string(size) + " does not fit a " +
                      std::to_string(image.width()) + "x" + std::to_string(image.height()) + " image");
  }
  if (mask.width() != image.width() || mask.height() != image.height()) {
    throw DomainError("sample_tiles: mask dimensions differ from image");
  }
  if (!(min_coverage >= 0.0 && min_coverage <= 1.0)) throw DomainError("sample_tiles: min_coverage outside [0, 1]");

  const std::size_t cols = image.width() / size;
  const std::size_t rows = image.height() / size;
  const std::size_t cells = cols * rows;
  const auto need = static_cast<std::size_t>(std::ceil(min_coverage * static_cast<double>(size * size)));
  const IntegralMask integral(mask);

  SampleResult result;
  std::vector<bool> visited(cells, false);
  std::size_t visited_count = 0;
  SplitMix64 rng(seed);
  const std::size_t max_attempts = 100 * count;
  for (std::size_t attempt = 0; attempt < max_attempts && result.origins.size() < count && visited_count < cells;
       ++attempt) {
    const auto cell = static_cast<std::size_t>(rng.below(cells));
    if (visited[cell]) continue;
    visited[cell] = true;
    ++visited_count;
    const TileOrigin origin{(cell % cols) * size, (cell / cols) * size};
    if (integral.window(origin.x, origin.y, size) >= need) result.origins.push_back(origin);
  }
  result.shortfall = result.origins.size() < count;
  return result;
}

std::vector<std::string> CorpusManifest::subjects() const {
  std::set<std::string> unique;
  for (const auto& r : records) unique.insert(r.subject_id);
  return {unique.begin(), unique.end()};
}

void validate_manifest(const CorpusManifest& manifest) {
  std::map<std::string, std::set<std::string>> classes;
  for (const auto& r : manifest.records) {
    if (r.subject_id.empty()) throw ValidationError("manifest record '" + r.path + "' has an empty subject_id");
    if (r.class_label) classes[r.subject_id].insert(*r.class_label);
  }
  std::vector<std::string> offenders;
  for (const auto& [subject, labels] : classes) {
    if (labels.size() > 1) {
      std::string line = subject + " {";
      bool first = true;
      for (const auto& l : labels) {
        line += (first ? "" : ", ") + l;
        first = false;
      }
      offenders.push_back(line + "}");
    }
  }
  if (!offenders.empty()) {
    std::string msg = "subjects mapped to more than one class:";
    for (const auto& o : offenders) msg += " " + o;
    throw ValidationError(msg);
  }
}

CorpusManifest build_manifest(const ManifestSpec& spec) {
  if (!fs::is_directory(spec.root)) throw ValidationError("manifest root is not a directory: " + spec.root.string());
  CorpusManifest manifest;
  manifest.name = spec.name.empty() ? spec.root.filename().string() : spec.name;
  manifest.root = spec.root;

  for (const auto& entry : fs::recursive_directory_iterator(spec.root)) {
    if (!entry.is_regular_file()) continue;
    const std::string filename = entry.path().filename().string();
    const bool matched = std::any_of(spec.patterns.begin(), spec.patterns.end(), [&](const std::string& p) {
      return fnmatch(p.c_str(), filename.c_str(), 0) == 0;
    });
    if (!matched) continue;

    const fs::path rel = fs::relative(entry.path(), spec.root);
    std::vector<std::string> parts;
    for (const auto& part : rel) parts.push_back(part.string());
    TileRecord record;
    record.path = rel.generic_string();
    if (spec.layout == SubjectLayout::SubjectDir) {
      if (parts.size() < 2) throw ValidationError("file outside a subject directory: " + record.path);
      record.subject_id = parts[0];
    } else {
      if (parts.size() < 3) throw ValidationError("file outside a class/subject directory: " + record.path);
      record.class_label = parts[0];
      record.subject_id = parts[1];
    }
    if (auto it = spec.label_map.find(record.subject_id); it != spec.label_map.end()) {
      if (record.class_label && *record.class_label != it->second) {
        throw ValidationError("subjects mapped to more than one class: " + record.subject_id + " {" +
                              *record.class_label + ", " + it->second + "}");
      }
      record.class_label = it->second;
    }
    const auto [w, h] = read_pnm_dimensions(entry.path().string());
    record.width = w;
    record.height = h;
    manifest.records.push_back(std::move(record));
  }
  std::sort(manifest.records.begin(), manifest.records.end(), [](const TileRecord& a, const TileRecord& b) {
    return std::tie(a.subject_id, a.path) < std::tie(b.subject_id, b.path);
  });
  validate_manifest(manifest);
  return manifest;
}

std::string manifest_to_jsonl(const CorpusManifest& manifest) {
  std::string out;
  for (const auto& r : manifest.records) {
    json j;
    j["subject_id"] = r.subject_id;
    j["class_label"] = r.class_label ? json(*r.class_label) : json(nullptr);
    j["path"] = r.path;
    j["width"] = r.width;
    j["height"] = r.height;
    out += j.dump() + "\n";
  }
  return out;
}

CorpusManifest manifest_from_jsonl(const std::string& text, std::filesystem::path root, std::string name) {
  CorpusManifest manifest;
  manifest.root = std::move(root);
  manifest.name = std::move(name);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0, offset = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t line_offset = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("manifest line " + std::to_string(line_no) + ": " + e.what(), line_offset + e.byte);
    }
    try {
      TileRecord r;
      r.subject_id = j.at("subject_id").get<std::string>();
      if (j.contains("class_label") && !j["class_label"].is_null()) r.class_label = j["class_label"].get<std::string>();
      r.path = j.at("path").get<std::string>();
      r.width = j.at("width").get<std::size_t>();
      r.height = j.at("height").get<std::size_t>();
      manifest.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ValidationError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::sort(manifest.records.begin(), manifest.records.end(), [](const TileRecord& a, const TileRecord& b) {
    return std::tie(a.subject_id, a.path) < std::tie(b.subject_id, b.path);
  });
  validate_manifest(manifest);
  return manifest;
}

std::vector<Tile> load_tiles(const CorpusManifest& manifest) {
  std::vector<Tile> tiles;
  tiles.reserve(manifest.records.size());
  for (const auto& r : manifest.records) {
    const Tile t = read_pnm_file((manifest.root / r.path).string());
    if (t.width() != r.width || t.height() != r.height) {
      throw ValidationError("tile " + r.path + " is " + std::to_string(t.width()) + "x" + std::to_string(t.height()) +
                            ", manifest says " + std::to_string(r.width) + "x" + std::to_string(r.height));
    }
    tiles.push_back(t.with_id(r.path));
  }
  return tiles;
}

std::vector<std::size_t> FoldAssignment::fold_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (const auto& [subject, fold] : assignment) ++sizes[fold];
  return sizes;
}

FoldAssignment grouped_folds(const CorpusManifest& manifest, std::size_t k, std::uint64_t seed) {
  std::vector<std::string> subjects = manifest.subjects();
  if (k == 0) throw DomainError("grouped_folds: k must be positive");
  if (k > subjects.size()) {
    throw DomainError("grouped_folds: k = " + std::to_string(k) + " exceeds " + std::to_string(subjects.size()) +
                      " subjects");
  }
  SplitMix64 rng(seed);
  seeded_shuffle(std::span<std::string>(subjects), rng);
  FoldAssignment folds;
  folds.k = k;
  for (std::size_t i = 0; i < subjects.size(); ++i) folds.assignment[subjects[i]] = i % k;
  return folds;
}

}  // namespace pathbench
