#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "drdam/errors.hpp"

namespace drdam {

/// A D-dimensional real vector; the unit of storage and query.
using Pattern = std::vector<double>;

namespace vec {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return dot(a, a); }

inline double norm(std::span<const double> a) { return std::sqrt(norm2(a)); }

inline double distance2(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline bool all_finite(std::span<const double> a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

inline void require_length(std::span<const double> a, std::size_t dim, const char* what) {
    if (a.size() != dim)
        throw ShapeError(std::string(what) + ": expected length " + std::to_string(dim) +
                         ", got " + std::to_string(a.size()));
}

} // namespace vec
} // namespace drdam
