#pragma once

#include "drdam/counter_rng.hpp"

namespace drdam::detail {

inline double gaussian_entry(std::uint64_t seed, std::size_t row, std::size_t coord) {
    return rng::gaussian(seed, rng::kProjection, row, coord);
}

inline double row_bias(std::uint64_t seed, std::size_t row) {
    return 6.283185307179586476925286766559 * rng::uniform(seed, rng::kRowBias, row, 0);
}

template <class Fn> void for_each_projection_row(const FeatureMapSpec& spec, Fn&& fn) {
    const std::size_t y = spec.num_projections;
    const std::size_t d = spec.dim;
    if (!spec.orthogonal) {
        std::vector<double> omega(d);
        for (std::size_t a = 0; a < y; ++a) {
            for (std::size_t j = 0; j + 1 < d; j += 2)
                rng::gaussian_pair(spec.seed, rng::kProjection, a, j / 2, omega[j],
                                   omega[j + 1]);
            if (d % 2 != 0) omega[d - 1] = gaussian_entry(spec.seed, a, d - 1);
            fn(a, std::span<const double>(omega), row_bias(spec.seed, a));
        }
        return;
    }
    const std::size_t blocks = (y + d - 1) / d;
    for (std::size_t b = 0; b < blocks; ++b) {
        std::size_t rows = 0;
        const std::vector<double> block = orthogonal_block(spec, b, rows);
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t a = b * d + r;
            fn(a, std::span<const double>(block.data() + r * d, d), row_bias(spec.seed, a));
        }
    }
}

} // namespace drdam::detail
