// SPDX-License-Identifier: Apache-2.0
#include "pathbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pathbench/extractor.hpp"

namespace pathbench {

void validate_feature_set(const FeatureSet& features) {
  std::set<std::string> seen;
  for (const auto& f : features) {
    if (f.values.empty()) throw ValidationError("tap '" + f.tap_id + "' carries an empty feature vector");
    if (!seen.insert(f.tap_id).second) throw ValidationError("duplicate tap id '" + f.tap_id + "'");
    for (const float v : f.values) {
      if (!std::isfinite(v)) throw ValidationError("tap '" + f.tap_id + "' carries a non-finite value");
    }
  }
}

double psnr(const Tile& ref, const Tile& test) {
  if (ref.width() != test.width() || ref.height() != test.height()) {
    throw DomainError("psnr: dimension mismatch");
  }
  const auto a = ref.pixels(), b = test.pixels();
  std::uint64_t sse = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int d = static_cast<int>(a[i]) - static_cast<int>(b[i]);
    sse += static_cast<std::uint64_t>(d * d);
  }
  if (sse == 0) return kPsnrInfinity;
  const double mse = static_cast<double>(sse) / static_cast<double>(a.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace {

std::array<double, kSsimWindow> gaussian_1d() {
  std::array<double, kSsimWindow> g{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    g[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * kSsimSigma * kSsimSigma));
    sum += g[static_cast<std::size_t>(i)];
  }
  for (auto& v : g) v /= sum;
  return g;
}

// Separable "valid" Gaussian filtering of an arbitrary per-pixel product.
template <typename F>
std::vector<double> filter_valid(std::size_t w, std::size_t h, F sample) {
  static const auto g = gaussian_1d();
  const std::size_t ow = w - kSsimWindow + 1, oh = h - kSsimWindow + 1;
  std::vector<double> rows(ow * h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t k = 0; k < kSsimWindow; ++k) s += g[k] * sample(x + k, y);
      rows[y * ow + x] = s;
    }
  std::vector<double> out(ow * oh);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t k = 0; k < kSsimWindow; ++k) s += g[k] * rows[(y + k) * ow + x];
      out[y * ow + x] = s;
    }
  return out;
}

RealPlane luma_plane(const Tile& t) {
  const BytePlane y = to_luma(t);
  RealPlane out(y.width(), y.height());
  std::transform(y.samples().begin(), y.samples().end(), out.samples().begin(),
                 [](Byte v) { return static_cast<double>(v); });
  return out;
}

}  // namespace

std::array<double, kSsimWindow * kSsimWindow> ssim_window() {
  const auto g = gaussian_1d();
  std::array<double, kSsimWindow * kSsimWindow> w{};
  double sum = 0.0;
  for (std::size_t y = 0; y < kSsimWindow; ++y)
    for (std::size_t x = 0; x < kSsimWindow; ++x) sum += (w[y * kSsimWindow + x] = g[y] * g[x]);
  for (auto& v : w) v /= sum;
  return w;
}

SsimScale ssim_scale(const RealPlane& ref, const RealPlane& test) {
  if (ref.width() != test.width() || ref.height() != test.height()) throw DomainError("ssim: dimension mismatch");
  if (ref.width() < kSsimWindow || ref.height() < kSsimWindow) {
    throw DomainError("ssim: image " + std::to_string(ref.width()) + "x" + std::to_string(ref.height()) +
                      " smaller than the 11x11 window");
  }
  const std::size_t w = ref.width(), h = ref.height();
  const auto mu_x = filter_valid(w, h, [&](std::size_t x, std::size_t y) { return ref(x, y); });
  const auto mu_y = filter_valid(w, h, [&](std::size_t x, std::size_t y) { return test(x, y); });
  const auto xx = filter_valid(w, h, [&](std::size_t x, std::size_t y) { return ref(x, y) * ref(x, y); });
  const auto yy = filter_valid(w, h, [&](std::size_t x, std::size_t y) { return test(x, y) * test(x, y); });
  const auto xy = filter_valid(w, h, [&](std::size_t x, std::size_t y) { return ref(x, y) * test(x, y); });

  double ssim_sum = 0.0, cs_sum = 0.0;
  for (std::size_t i = 0; i < mu_x.size(); ++i) {
    const double mx = mu_x[i], my = mu_y[i];
    const double vx = xx[i] - mx * mx, vy = yy[i] - my * my, cov = xy[i] - mx * my;
    const double cs = (2.0 * cov + kSsimC2) / (vx + vy + kSsimC2);
    const double lum = (2.0 * mx * my + kSsimC1) / (mx * mx + my * my + kSsimC1);
    ssim_sum += lum * cs;
    cs_sum += cs;
  }
  const double n = static_cast<double>(mu_x.size());
  return {ssim_sum / n, cs_sum / n};
}

RealPlane mean_pool_2x2(const RealPlane& plane) {
  const std::size_t w = plane.width() / 2, h = plane.height() / 2;
  RealPlane out(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      out(x, y) = 0.25 * (plane(2 * x, 2 * y) + plane(2 * x + 1, 2 * y) + plane(2 * x, 2 * y + 1) +
                          plane(2 * x + 1, 2 * y + 1));
    }
  return out;
}

MsSsimResult ms_ssim(const Tile& ref, const Tile& test, const MsSsimOptions& options) {
  if (ref.width() != test.width() || ref.height() != test.height()) throw DomainError("ms_ssim: dimension mismatch");
  const std::size_t side = std::min(ref.width(), ref.height());
  int scales = 0;
  while (scales < static_cast<int>(kMsSsimWeights.size()) && (side >> scales) >= kSsimWindow) ++scales;
  MsSsimResult result;
  if (scales < static_cast<int>(kMsSsimWeights.size())) {
    if (!options.allow_scale_reduction || scales == 0) {
      throw DomainError("ms_ssim: minimum side " + std::to_string(side) + " below 176 needed for five scales");
    }
    result.scale_reduced = true;
  }
  result.scales = scales;

  // exponents are renormalized only when scales are dropped
  double weight_sum = 1.0;
  if (result.scale_reduced) {
    weight_sum = 0.0;
    for (int j = 0; j < scales; ++j) weight_sum += kMsSsimWeights[static_cast<std::size_t>(j)];
  }

  RealPlane a = luma_plane(ref), b = luma_plane(test);
  double product = 1.0;
  for (int j = 0; j < scales; ++j) {
    const SsimScale s = ssim_scale(a, b);
    const double weight = kMsSsimWeights[static_cast<std::size_t>(j)] / weight_sum;
    // negative means would make the fractional power undefined
    const double term = j + 1 < scales ? s.cs : s.ssim;
    product *= std::pow(std::max(term, 0.0), weight);
    if (j + 1 < scales) {
      a = mean_pool_2x2(a);
      b = mean_pool_2x2(b);
    }
  }
  result.score = std::clamp(product, 0.0, 1.0);
  return result;
}

double ms_ssim(const Tile& ref, const Tile& test) { return ms_ssim(ref, test, MsSsimOptions{}).score; }

double cosine_similarity(std::span<const float> x, std::span<const float> y) {
  if (x.size() != y.size()) {
    throw DomainError("cosine_similarity: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                      std::to_string(y.size()) + ")");
  }
  if (x.empty()) throw DomainError("cosine_similarity: empty vectors");
  double dot = 0.0, xx = 0.0, yy = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double a = x[d], b = y[d];
    dot += a * b;
    xx += a * a;
    yy += b * b;
  }
  if (xx == 0.0 || yy == 0.0) throw DomainError("cosine_similarity: zero-norm vector, similarity undefined");
  return dot / (std::sqrt(xx) * std::sqrt(yy));
}

double cosine_similarity(const FeatureVector& x, const FeatureVector& y) {
  try {
    return cosine_similarity(std::span<const float>(x.values), std::span<const float>(y.values));
  } catch (const DomainError& e) {
    throw DomainError("tap '" + x.tap_id + "': " + e.what());
  }
}

namespace {

void check_same_taps(const FeatureSet& a, const FeatureSet& b) {
  if (a.size() != b.size()) throw ValidationError("feature sets carry different tap counts");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].tap_id != b[i].tap_id) {
      throw ValidationError("tap mismatch at position " + std::to_string(i) + ": '" + a[i].tap_id + "' vs '" +
                            b[i].tap_id + "'");
    }
  }
}

FeatureSet extract_with_context(const FeatureExtractor& extractor, const Tile& tile, const char* which) {
  try {
    return extractor.extract(tile);
  } catch (const Error& e) {
    throw Error(std::string("feature extraction failed for ") + which + " tile '" + tile.id() + "': " + e.what());
  }
}

}  // namespace

SimilarityProfile similarity_profile(const FeatureSet& ref, const FeatureSet& test) {
  check_same_taps(ref, test);
  SimilarityProfile profile;
  profile.reserve(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) profile.emplace_back(ref[i].tap_id, cosine_similarity(ref[i], test[i]));
  return profile;
}

SimilarityProfile feature_similarity_profile(const Tile& ref, const Tile& test, const FeatureExtractor& extractor) {
  if (ref.width() != test.width() || ref.height() != test.height()) throw DomainError("profile: dimension mismatch");
  return similarity_profile(extract_with_context(extractor, ref, "reference"),
                            extract_with_context(extractor, test, "test"));
}

double deep_feature_distance(const FeatureSet& ref, const FeatureSet& test) {
  check_same_taps(ref, test);
  if (ref.empty()) throw DomainError("deep_feature_distance: no taps");
  double total = 0.0;
  for (std::size_t t = 0; t < ref.size(); ++t) {
    const auto& x = ref[t].values;
    const auto& y = test[t].values;
    if (x.size() != y.size()) throw DomainError("tap '" + ref[t].tap_id + "': dimension mismatch");
    double xx = 0.0, yy = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
      xx += static_cast<double>(x[d]) * x[d];
      yy += static_cast<double>(y[d]) * y[d];
    }
    if (xx == 0.0 || yy == 0.0) throw DomainError("tap '" + ref[t].tap_id + "': zero-norm features");
    const double nx = std::sqrt(xx), ny = std::sqrt(yy);
    double dist = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double diff = x[d] / nx - y[d] / ny;
      dist += diff * diff;
    }
    total += dist;
  }
  return total / static_cast<double>(ref.size());
}

double deep_feature_distance(const Tile& ref, const Tile& test, const FeatureExtractor& extractor) {
  if (ref.width() != test.width() || ref.height() != test.height()) throw DomainError("distance: dimension mismatch");
  return deep_feature_distance(extract_with_context(extractor, ref, "reference"),
                               extract_with_context(extractor, test, "test"));
}

MetricReport evaluate_pair(const Tile& ref, const Tile& test, const MetricSelection& selection,
                           const FeatureExtractor* extractor, const FeatureSet* ref_features,
                           const MsSsimOptions& ms_options) {
  MetricReport report;
  if (selection.psnr) report.psnr = psnr(ref, test);
  if (selection.ms_ssim) {
    const auto r = ms_ssim(ref, test, ms_options);
    report.ms_ssim = r.score;
    report.ms_ssim_scale_reduced = r.scale_reduced;
  }
  if (selection.needs_features()) {
    if (!extractor) throw ValidationError("feature metrics requested without an extractor");
    FeatureSet own;
    if (!ref_features) {
      own = extract_with_context(*extractor, ref, "reference");
      ref_features = &own;
    }
    const FeatureSet test_features = extract_with_context(*extractor, test, "test");
    if (selection.cosine) report.cosine_per_tap = similarity_profile(*ref_features, test_features);
    if (selection.deep_distance) report.deep_distance = deep_feature_distance(*ref_features, test_features);
  }
  return report;
}

}  // namespace pathbench
