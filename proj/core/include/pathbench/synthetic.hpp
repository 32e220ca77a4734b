// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pathbench/image.hpp"

namespace pathbench::synthetic {

/// Knobs for the H&E-like texture generator.
struct TissueStyle {
  double nuclei_per_kpx = 0.9;  // nuclei per 1000 pixels
  double noise_sigma = 4.0;     // additive Gaussian sensor noise, 8-bit units
  double stroma_contrast = 22.0;
  int lumen_max = 2;
};

/// Stained-tissue-looking tile: eosin stroma with low-frequency variation,
/// hematoxylin nuclei, occasional lumen and sensor noise. Pure function of its arguments.
Tile tissue_tile(std::size_t width, std::size_t height, std::uint64_t seed, const TissueStyle& style = {});

/// `count` tissue tiles with ids "synthetic-<i>", seeds derived from `seed`.
std::vector<Tile> tissue_corpus(std::size_t count, std::size_t size, std::uint64_t seed,
                                const TissueStyle& style = {});

/// Uniform random RGB bytes.
Tile noise_tile(std::size_t width, std::size_t height, std::uint64_t seed);

/// tile + N(0, sigma^2) per sample, saturated.
Tile add_gaussian_noise(const Tile& tile, double sigma, std::uint64_t seed);

/// Slide-like raster: near-white glass with a few tissue islands.
Tile slide(std::size_t width, std::size_t height, std::uint64_t seed);

}  // namespace pathbench::synthetic
