// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pathbench/image.hpp"

namespace pathbench {

class FeatureExtractor;

/// Flattened activations captured at one tap point.
struct FeatureVector {
  std::string tap_id;
  std::vector<float> values;
};

/// One FeatureVector per tap, ordered shallow to deep.
using FeatureSet = std::vector<FeatureVector>;

/// Throws ValidationError on empty vectors, non-finite values or duplicate tap ids.
void validate_feature_set(const FeatureSet& features);

inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();
/// Value substituted for infinite PSNR when aggregating.
inline constexpr double kPsnrCapDb = 100.0;

/// 10 log10(255^2 / MSE) over all RGB samples; +inf for identical tiles.
double psnr(const Tile& ref, const Tile& test);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = (0.01 * 255) * (0.01 * 255);
inline constexpr double kSsimC2 = (0.03 * 255) * (0.03 * 255);
inline constexpr std::array<double, 5> kMsSsimWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

struct SsimScale {
  double ssim = 0.0;  // mean of the full l * cs map
  double cs = 0.0;    // mean of the contrast-structure map
};

/// SSIM at one scale with an 11x11 Gaussian window (sigma 1.5), valid region only.
SsimScale ssim_scale(const RealPlane& ref, const RealPlane& test);

/// Normalized 11x11 Gaussian window, row-major.
std::array<double, kSsimWindow * kSsimWindow> ssim_window();

struct MsSsimOptions {
  /// Allow fewer than five scales on small images, renormalizing the exponents.
  bool allow_scale_reduction = false;
};

struct MsSsimResult {
  double score = 0.0;
  int scales = 5;
  bool scale_reduced = false;
};

/// Five-scale MS-SSIM on BT.601 luma with 2x2 mean-pool downsampling.
MsSsimResult ms_ssim(const Tile& ref, const Tile& test, const MsSsimOptions& options);
double ms_ssim(const Tile& ref, const Tile& test);

/// 2x2 mean pooling; odd trailing rows/columns are dropped.
RealPlane mean_pool_2x2(const RealPlane& plane);

/// sum x_d y_d / (||x|| ||y||). Throws DomainError on length mismatch or a zero-norm operand.
double cosine_similarity(std::span<const float> x, std::span<const float> y);
double cosine_similarity(const FeatureVector& x, const FeatureVector& y);

/// Cosine similarity at every tap, in extractor order.
using SimilarityProfile = std::vector<std::pair<std::string, double>>;
SimilarityProfile similarity_profile(const FeatureSet& ref, const FeatureSet& test);
SimilarityProfile feature_similarity_profile(const Tile& ref, const Tile& test, const FeatureExtractor& extractor);

/// Mean over taps of ||x/|x| - y/|y|||^2; bounded by 4.
double deep_feature_distance(const FeatureSet& ref, const FeatureSet& test);
double deep_feature_distance(const Tile& ref, const Tile& test, const FeatureExtractor& extractor);

/// The metric bundle for one (reference, reconstruction) pair. Fields are set iff requested.
struct MetricReport {
  std::optional<double> psnr;
  std::optional<double> ms_ssim;
  std::optional<double> deep_distance;
  std::optional<SimilarityProfile> cosine_per_tap;
  bool ms_ssim_scale_reduced = false;
};

struct MetricSelection {
  bool psnr = true;
  bool ms_ssim = true;
  bool deep_distance = false;
  bool cosine = false;
  bool needs_features() const noexcept { return deep_distance || cosine; }
};

/// Evaluates every selected metric. Features of `ref` may be passed in precomputed.
MetricReport evaluate_pair(const Tile& ref, const Tile& test, const MetricSelection& selection,
                           const FeatureExtractor* extractor, const FeatureSet* ref_features = nullptr,
                           const MsSsimOptions& ms_options = {});

}  // namespace pathbench
