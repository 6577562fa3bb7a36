#pragma once

#include <cstdint>
#include <vector>

#include "drdam/vec.hpp"

// Deterministic data generation for the experiment drivers.  Everything is a
// pure function of its seed; no global state.

namespace drdam {

/// `count` unique vectors with entries in {0, 1/sqrt(D)}, uniformly sampled
/// without replacement.  Throws std::invalid_argument when count > 2^D.
std::vector<Pattern> gen_binary_patterns(std::size_t dim, std::size_t count, std::uint64_t seed);

/// Per stored pattern, toggles round(flip_fraction * D) distinct coordinates
/// between 0 and 1/sqrt(D).  Inputs must already be on the binary alphabet.
std::vector<Pattern> make_near_queries(const std::vector<Pattern>& stored, double flip_fraction,
                                       std::uint64_t seed);

/// Clustered continuous vectors normalized into [0, 1/sqrt(D)]; stand-in for
/// a low-dimensional real dataset in the basis-function ablation.
std::vector<Pattern> make_ablation_dataset(std::size_t dim, std::size_t count,
                                           std::uint64_t seed);

/// Raster image with 8-bit channels, row-major, channel-interleaved.
struct Pixmap {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 1; // 1 = PGM, 3 = PPM
    std::vector<std::uint8_t> pixels;

    std::size_t size() const noexcept { return width * height * channels; }
};

/// Procedural block-textured test images; mutually well separated so that
/// completion has an unambiguous target.
std::vector<Pixmap> make_synthetic_images(std::size_t count, std::size_t width,
                                          std::size_t height, std::size_t channels,
                                          std::uint64_t seed);

/// Rasterizes to a D = W*H*C pattern with entries scaled into [0, 1/sqrt(D)].
Pattern pixmap_to_pattern(const Pixmap& img);

/// Inverse of pixmap_to_pattern with rounding and clamping to 8 bits.
Pixmap pattern_to_pixmap(const Pattern& x, std::size_t width, std::size_t height,
                         std::size_t channels);

/// Query for the completion task: the trailing `occlusion_fraction` of the
/// image rows is zeroed; the mask marks the remaining (visible) coordinates
/// as clamped.
struct OccludedQuery {
    Pattern query;
    std::vector<bool> clamp; // true = visible, frozen during descent
};
OccludedQuery occlude_lower(const Pattern& x, std::size_t width, std::size_t height,
                            std::size_t channels, double occlusion_fraction);

} // namespace drdam
