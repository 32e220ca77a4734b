// SPDX-License-Identifier: Apache-2.0
#include "pathbench/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pathbench/error.hpp"
#include "pathbench/image.hpp"

namespace pathbench {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string num(double v) { return fmt::format("{:.6f}", v); }
std::string stat(double v) { return fmt::format("{:.8f}", v); }

std::string xml_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr int kWidth = 800;
constexpr int kHeight = 600;
constexpr double kLeft = 80, kRight = 620, kTop = 50, kBottom = 530;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
const char* color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

struct Range {
  double lo, hi;
};

Range padded(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = std::max(std::abs(lo) * 0.05, 0.5);
    return {lo - pad, hi + pad};
  }
  const double pad = (hi - lo) * 0.05;
  return {lo - pad, hi + pad};
}

double map_x(double v, Range r) { return kLeft + (v - r.lo) / (r.hi - r.lo) * (kRight - kLeft); }
double map_y(double v, Range r) { return kBottom - (v - r.lo) / (r.hi - r.lo) * (kBottom - kTop); }

std::string svg_open(const std::string& title) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"28\" font-size=\"16\" text-anchor=\"middle\">{3}</text>\n",
      kWidth, kHeight, (kLeft + kRight) / 2, xml_escape(title));
}

std::string frame(const std::string& xlabel, const std::string& ylabel) {
  return fmt::format(
      "<rect x=\"{0}\" y=\"{1}\" width=\"{2}\" height=\"{3}\" fill=\"none\" stroke=\"black\"/>\n"
      "<text x=\"{4}\" y=\"{5}\" text-anchor=\"middle\">{6}</text>\n"
      "<text x=\"20\" y=\"{7}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {7})\">{8}</text>\n",
      kLeft, kTop, kRight - kLeft, kBottom - kTop, (kLeft + kRight) / 2, kBottom + 45, xml_escape(xlabel),
      (kTop + kBottom) / 2, xml_escape(ylabel));
}

std::string x_ticks(Range r) {
  std::string out;
  for (int i = 0; i <= 5; ++i) {
    const double v = r.lo + (r.hi - r.lo) * i / 5.0;
    const double x = map_x(v, r);
    out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"black\"/>"
                       "<text x=\"{0:.2f}\" y=\"{3}\" text-anchor=\"middle\">{4:.3g}</text>\n",
                       x, kBottom, kBottom + 5, kBottom + 20, v);
  }
  return out;
}

std::string y_ticks(Range r, bool log10_axis = false) {
  std::string out;
  for (int i = 0; i <= 5; ++i) {
    const double v = r.lo + (r.hi - r.lo) * i / 5.0;
    const double y = map_y(v, r);
    out += fmt::format("<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"black\"/>"
                       "<text x=\"{3}\" y=\"{4:.2f}\" text-anchor=\"end\">{5:.3g}</text>\n",
                       kLeft - 5, y, kLeft, kLeft - 8, y + 4, log10_axis ? std::pow(10.0, v) : v);
  }
  return out;
}

std::string legend(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 10 + 20.0 * static_cast<double>(i);
    out += fmt::format("<rect x=\"{0}\" y=\"{1}\" width=\"12\" height=\"12\" fill=\"{2}\"/>"
                       "<text x=\"{3}\" y=\"{4}\">{5}</text>\n",
                       kRight + 20, y, color(i), kRight + 38, y + 10, xml_escape(names[i]));
  }
  return out;
}

template <class T, class F>
std::vector<std::string> ordered_unique(const std::vector<T>& items, F key) {
  std::vector<std::string> out;
  for (const auto& it : items) {
    const std::string k = key(it);
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
  }
  return out;
}

std::string file_safe(const std::string& s) {
  std::string out;
  for (const char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ? c : '_';
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace

std::string rd_points_csv(const std::vector<RateDistortionPoint>& points) {
  std::string out = std::string(kRdCsvHeader) + "\n";
  for (const auto& p : points) {
    for (const auto& [name, agg] : p.metrics) {
      out += fmt::format("{},{},{},{},{},{},{},{},{}\n", csv_field(p.codec_id), num(p.target_bpp), num(p.achieved_bpp),
                         num(p.quality), csv_field(name), stat(agg.mean), stat(agg.std), agg.n,
                         csv_field(p.flags.to_string()));
    }
  }
  return out;
}

std::string similarity_csv(const std::vector<SimilarityRow>& rows) {
  std::string out = std::string(kSimilarityCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{}\n", csv_field(r.codec_id), csv_field(r.tap_id), stat(r.value.mean),
                       stat(r.value.std));
  }
  return out;
}

std::string raw_csv(const std::vector<RawValue>& raw) {
  std::string out = std::string(kRawCsvHeader) + "\n";
  for (const auto& r : raw) {
    out += fmt::format("{},{},{},{},{}\n", csv_field(r.codec_id), num(r.target_bpp), csv_field(r.tile_id),
                       csv_field(r.metric), stat(r.value));
  }
  return out;
}

std::string metadata_json(const ReportMetadata& m) {
  const json j{{"config_hash", m.config_hash}, {"seed", m.seed},           {"toolkit_version", m.toolkit_version},
               {"plan_name", m.plan_name},     {"tile_count", m.tile_count}, {"psnr_cap_db", m.psnr_cap_db}};
  return j.dump(2) + "\n";
}

std::string timing_json(const ReportBundle& bundle) {
  json reports = json::array();
  for (const auto& t : bundle.timing) {
    reports.push_back({{"codec", t.codec_id},
                       {"quality", t.quality},
                       {"phase", to_string(t.phase)},
                       {"tile_count", t.tile_count},
                       {"warmup_reps", t.warmup_reps},
                       {"per_rep_seconds", t.per_rep_seconds},
                       {"total_seconds", t.total_seconds},
                       {"tiles_per_second", t.tiles_per_second},
                       {"median_rep_seconds", t.median_rep_seconds},
                       {"host", t.host}});
  }
  const json j{{"config_hash", bundle.metadata.config_hash}, {"reports", reports}};
  return j.dump(2) + "\n";
}

std::string rd_svg(const std::vector<RateDistortionPoint>& points, const std::string& metric) {
  std::vector<const RateDistortionPoint*> used;
  for (const auto& p : points)
    if (p.metric(metric)) used.push_back(&p);
  if (used.empty()) throw DomainError("rd_svg: no points carry metric '" + metric + "'");

  double xlo = used.front()->achieved_bpp, xhi = xlo;
  double ylo = used.front()->metric(metric)->mean, yhi = ylo;
  for (const auto* p : used) {
    const auto* a = p->metric(metric);
    xlo = std::min(xlo, p->achieved_bpp);
    xhi = std::max(xhi, p->achieved_bpp);
    ylo = std::min(ylo, a->mean - a->std);
    yhi = std::max(yhi, a->mean + a->std);
  }
  const Range xr = padded(xlo, xhi), yr = padded(ylo, yhi);

  std::string svg = svg_open(metric + " vs. rate");
  svg += frame("bits per pixel", metric);
  svg += x_ticks(xr);
  svg += y_ticks(yr);
  const auto codecs = ordered_unique(points, [](const RateDistortionPoint& p) { return p.codec_id; });
  std::vector<std::string> shown;
  for (const auto& codec : codecs) {
    std::vector<const RateDistortionPoint*> series;
    for (const auto* p : used)
      if (p->codec_id == codec) series.push_back(p);
    if (series.empty()) continue;
    std::stable_sort(series.begin(), series.end(),
                     [](const auto* a, const auto* b) { return a->achieved_bpp < b->achieved_bpp; });
    const char* c = color(shown.size());
    shown.push_back(codec);
    std::string pts;
    for (const auto* p : series) {
      if (!pts.empty()) pts += ' ';
      pts += fmt::format("{:.2f},{:.2f}", map_x(p->achieved_bpp, xr), map_y(p->metric(metric)->mean, yr));
    }
    svg += fmt::format("<polyline data-codec=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n",
                       xml_escape(codec), c, pts);
    for (const auto* p : series) {
      const auto* a = p->metric(metric);
      const double x = map_x(p->achieved_bpp, xr);
      svg += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"{3}\"/>"
                         "<circle cx=\"{0:.2f}\" cy=\"{4:.2f}\" r=\"3\" fill=\"{3}\"/>\n",
                         x, map_y(a->mean - a->std, yr), map_y(a->mean + a->std, yr), c, map_y(a->mean, yr));
    }
  }
  svg += legend(shown);
  return svg + "</svg>\n";
}

std::string similarity_svg(const std::vector<SimilarityRow>& rows) {
  if (rows.empty()) throw DomainError("similarity_svg: no rows");
  const auto taps = ordered_unique(rows, [](const SimilarityRow& r) { return r.tap_id; });
  const auto codecs = ordered_unique(rows, [](const SimilarityRow& r) { return r.codec_id; });
  double lo = rows.front().value.mean, hi = lo;
  for (const auto& r : rows) {
    lo = std::min(lo, r.value.mean - r.value.std);
    hi = std::max(hi, r.value.mean + r.value.std);
  }
  const Range yr = padded(lo, hi);
  std::string svg = svg_open("feature similarity per tap");
  svg += frame("tap", "cosine similarity");
  svg += y_ticks(yr);
  const double group = (kRight - kLeft) / static_cast<double>(taps.size());
  for (std::size_t t = 0; t < taps.size(); ++t) {
    const double gx = kLeft + group * static_cast<double>(t);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", gx + group / 2, kBottom + 20,
                       xml_escape(taps[t]));
    for (std::size_t c = 0; c < codecs.size(); ++c) {
      const auto it = std::find_if(rows.begin(), rows.end(),
                                   [&](const SimilarityRow& r) { return r.tap_id == taps[t] && r.codec_id == codecs[c]; });
      if (it == rows.end()) continue;
      const double x = gx + group * (static_cast<double>(c) + 1) / (static_cast<double>(codecs.size()) + 1);
      const auto& v = it->value;
      svg += fmt::format("<g data-codec=\"{5}\" data-tap=\"{6}\">"
                         "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"{3}\" stroke-width=\"2\"/>"
                         "<circle cx=\"{0:.2f}\" cy=\"{4:.2f}\" r=\"4\" fill=\"{3}\"/></g>\n",
                         x, map_y(v.mean - v.std, yr), map_y(v.mean + v.std, yr), color(c), map_y(v.mean, yr),
                         xml_escape(codecs[c]), xml_escape(taps[t]));
    }
  }
  svg += legend(codecs);
  return svg + "</svg>\n";
}

std::string timing_svg(const std::vector<TimingReport>& reports) {
  if (reports.empty()) throw DomainError("timing_svg: no reports");
  const auto codecs = ordered_unique(reports, [](const TimingReport& r) { return r.codec_id; });
  // Seconds per tile, on a log10 axis.
  const auto per_tile = [](const TimingReport& r) {
    const double v = r.tiles_per_second > 0 ? 1.0 / r.tiles_per_second : 1e-9;
    return std::log10(std::max(v, 1e-9));
  };
  double lo = per_tile(reports.front()), hi = lo;
  for (const auto& r : reports) {
    lo = std::min(lo, per_tile(r));
    hi = std::max(hi, per_tile(r));
  }
  const Range yr{std::floor(lo) - 0.0, std::ceil(hi) + (std::ceil(hi) == std::floor(lo) ? 1.0 : 0.0)};
  std::string svg = svg_open("coding time per tile");
  svg += frame("codec", "seconds per tile (log scale)");
  svg += y_ticks(yr, true);
  const double group = (kRight - kLeft) / static_cast<double>(codecs.size());
  const TimingPhase phases[] = {TimingPhase::Encode, TimingPhase::Decode};
  for (std::size_t c = 0; c < codecs.size(); ++c) {
    const double gx = kLeft + group * static_cast<double>(c);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", gx + group / 2, kBottom + 20,
                       xml_escape(codecs[c]));
    for (std::size_t p = 0; p < 2; ++p) {
      const auto it = std::find_if(reports.begin(), reports.end(), [&](const TimingReport& r) {
        return r.codec_id == codecs[c] && r.phase == phases[p];
      });
      if (it == reports.end()) continue;
      const double w = group / 4;
      const double x = gx + group / 4 + w * static_cast<double>(p);
      const double y = map_y(per_tile(*it), yr);
      svg += fmt::format("<rect data-codec=\"{}\" data-phase=\"{}\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" "
                         "height=\"{:.2f}\" fill=\"{}\"/>\n",
                         xml_escape(codecs[c]), to_string(phases[p]), x, y, w, kBottom - y, color(p));
    }
  }
  svg += legend({"encode", "decode"});
  return svg + "</svg>\n";
}

std::vector<fs::path> emit_reports(const ReportBundle& bundle, const fs::path& dir, bool dump_raw) {
  fs::create_directories(dir);
  std::vector<fs::path> written;
  const auto put = [&](const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    write_text(p, text);
    written.push_back(p);
  };
  put("rd_points.csv", rd_points_csv(bundle.rd_points));
  put("similarity.csv", similarity_csv(bundle.similarity));
  put("timing.json", timing_json(bundle));
  put("metadata.json", metadata_json(bundle.metadata));
  put("bundle.json", bundle_to_json(bundle) + "\n");
  if (dump_raw) put("raw.csv", raw_csv(bundle.raw));

  std::vector<std::string> metrics;
  for (const auto& p : bundle.rd_points)
    for (const auto& [name, agg] : p.metrics)
      if (std::find(metrics.begin(), metrics.end(), name) == metrics.end()) metrics.push_back(name);
  for (const auto& m : metrics) put("rd_" + file_safe(m) + ".svg", rd_svg(bundle.rd_points, m));
  if (!bundle.similarity.empty()) put("similarity.svg", similarity_svg(bundle.similarity));
  if (!bundle.timing.empty()) put("timing.svg", timing_svg(bundle.timing));
  return written;
}

}  // namespace pathbench
