#include "drdam/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "drdam/counter_rng.hpp"

namespace drdam {
namespace {

std::vector<std::uint8_t> pack_bits(const Pattern& x, double hi) {
    std::vector<std::uint8_t> bits((x.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] == hi) bits[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    return bits;
}

} // namespace

std::vector<Pattern> gen_binary_patterns(std::size_t dim, std::size_t count,
                                         std::uint64_t seed) {
    if (dim < 1) throw std::invalid_argument("gen_binary_patterns: D must be >= 1");
    if (dim < 64 && count > (std::uint64_t{1} << dim))
        throw std::invalid_argument("gen_binary_patterns: count exceeds 2^D");

    const double hi = 1.0 / std::sqrt(static_cast<double>(dim));
    const std::size_t words = (dim + 63) / 64;

    std::vector<Pattern> out;
    out.reserve(count);
    std::set<std::vector<std::uint8_t>> seen;
    for (std::size_t idx = 0; idx < count; ++idx) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            Pattern x(dim);
            for (std::size_t w = 0; w < words; ++w) {
                const std::uint64_t bits =
                    rng::hash4(seed, rng::kPattern, idx, (attempt << 32) | w);
                for (std::size_t b = 0; b < 64 && w * 64 + b < dim; ++b)
                    x[w * 64 + b] = (bits >> b) & 1u ? hi : 0.0;
            }
            if (seen.insert(pack_bits(x, hi)).second) {
                out.push_back(std::move(x));
                break;
            }
        }
    }
    return out;
}

std::vector<Pattern> make_near_queries(const std::vector<Pattern>& stored, double flip_fraction,
                                       std::uint64_t seed) {
    if (!(flip_fraction >= 0.0) || !(flip_fraction < 1.0))
        throw std::invalid_argument("make_near_queries: flip fraction must lie in [0, 1)");
    std::vector<Pattern> out;
    out.reserve(stored.size());
    for (std::size_t q = 0; q < stored.size(); ++q) {
        const Pattern& src = stored[q];
        const std::size_t dim = src.size();
        const double hi = 1.0 / std::sqrt(static_cast<double>(dim));
        for (double v : src)
            if (v != 0.0 && v != hi)
                throw std::domain_error("make_near_queries: input is not on the binary alphabet");

        const std::size_t flips =
            static_cast<std::size_t>(std::llround(flip_fraction * static_cast<double>(dim)));
        Pattern x = src;
        // Partial Fisher-Yates over coordinate indices gives `flips` distinct
        // positions.
        std::vector<std::size_t> order(dim);
        for (std::size_t i = 0; i < dim; ++i) order[i] = i;
        for (std::size_t i = 0; i < flips; ++i) {
            const std::uint64_t r = rng::hash4(seed, rng::kFlip, q, i);
            const std::size_t j = i + static_cast<std::size_t>(r % (dim - i));
            std::swap(order[i], order[j]);
            x[order[i]] = x[order[i]] == 0.0 ? hi : 0.0;
        }
        out.push_back(std::move(x));
    }
    return out;
}

std::vector<Pattern> make_ablation_dataset(std::size_t dim, std::size_t count,
                                           std::uint64_t seed) {
    if (dim < 1) throw std::invalid_argument("make_ablation_dataset: D must be >= 1");
    const double hi = 1.0 / std::sqrt(static_cast<double>(dim));
    constexpr std::size_t kClusters = 26;

    std::vector<Pattern> centers(kClusters, Pattern(dim));
    for (std::size_t c = 0; c < kClusters; ++c)
        for (std::size_t j = 0; j < dim; ++j)
            centers[c][j] = hi * rng::uniform(seed, rng::kDataset, c, j);

    std::vector<Pattern> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t c = i % kClusters;
        Pattern x(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            const double noise =
                rng::gaussian(seed, rng::kDataset, kClusters + i, j) * hi / 6.0;
            x[j] = std::clamp(centers[c][j] + noise, 0.0, hi);
        }
        out.push_back(std::move(x));
    }
    return out;
}

std::vector<Pixmap> make_synthetic_images(std::size_t count, std::size_t width,
                                          std::size_t height, std::size_t channels,
                                          std::uint64_t seed) {
    if (channels != 1 && channels != 3)
        throw std::invalid_argument("make_synthetic_images: channels must be 1 or 3");
    constexpr std::size_t kBlock = 4;
    std::vector<Pixmap> out;
    out.reserve(count);
    const std::size_t blocks_x = (width + kBlock - 1) / kBlock;
    for (std::size_t img = 0; img < count; ++img) {
        Pixmap p;
        p.width = width;
        p.height = height;
        p.channels = channels;
        p.pixels.resize(p.size());
        for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t x = 0; x < width; ++x) {
                const std::uint64_t block = (y / kBlock) * blocks_x + x / kBlock;
                const bool on = rng::hash4(seed, rng::kDataset, (img << 32) | 1u, block) & 1u;
                const double jitter =
                    rng::uniform(seed, rng::kDataset, (img << 32) | 2u, y * width + x);
                for (std::size_t c = 0; c < channels; ++c) {
                    // High contrast keeps distinct images far apart, which the
                    // completion task needs for an unambiguous target.
                    const double shade = on ? 232.0 + 20.0 * jitter + 1.0 * static_cast<double>(c)
                                            : 2.0 + 20.0 * jitter + 1.0 * static_cast<double>(c);
                    p.pixels[(y * width + x) * channels + c] =
                        static_cast<std::uint8_t>(std::clamp(shade, 0.0, 255.0));
                }
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

Pattern pixmap_to_pattern(const Pixmap& img) {
    const std::size_t dim = img.size();
    if (dim == 0) throw std::invalid_argument("pixmap_to_pattern: empty image");
    const double hi = 1.0 / std::sqrt(static_cast<double>(dim));
    Pattern x(dim);
    for (std::size_t i = 0; i < dim; ++i)
        x[i] = static_cast<double>(img.pixels[i]) / 255.0 * hi;
    return x;
}

Pixmap pattern_to_pixmap(const Pattern& x, std::size_t width, std::size_t height,
                         std::size_t channels) {
    if (x.size() != width * height * channels)
        throw ShapeError("pattern_to_pixmap: dimension does not match geometry");
    Pixmap p;
    p.width = width;
    p.height = height;
    p.channels = channels;
    p.pixels.resize(x.size());
    const double scale = std::sqrt(static_cast<double>(x.size())) * 255.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        p.pixels[i] =
            static_cast<std::uint8_t>(std::clamp(std::lround(x[i] * scale), 0L, 255L));
    return p;
}

OccludedQuery occlude_lower(const Pattern& x, std::size_t width, std::size_t height,
                            std::size_t channels, double occlusion_fraction) {
    if (x.size() != width * height * channels)
        throw ShapeError("occlude_lower: dimension does not match geometry");
    if (!(occlusion_fraction > 0.0) || !(occlusion_fraction < 1.0))
        throw std::invalid_argument("occlude_lower: fraction must lie in (0, 1)");
    const std::size_t occluded_rows = static_cast<std::size_t>(
        std::llround(occlusion_fraction * static_cast<double>(height)));
    const std::size_t first_occluded = height - occluded_rows;

    OccludedQuery out;
    out.query = x;
    out.clamp.assign(x.size(), true);
    for (std::size_t y = first_occluded; y < height; ++y) {
        for (std::size_t i = y * width * channels; i < (y + 1) * width * channels; ++i) {
            out.query[i] = 0.0;
            out.clamp[i] = false;
        }
    }
    return out;
}

} // namespace drdam
