#include "drdam/feature_maps.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "drdam/counter_rng.hpp"

namespace drdam {

const char* to_string(BasisKind kind) {
    switch (kind) {
    case BasisKind::Cos: return "cos";
    case BasisKind::SinCos: return "sincos";
    case BasisKind::Exp: return "exp";
    case BasisKind::ExpExp: return "expexp";
    }
    return "?";
}

BasisKind basis_from_string(const std::string& name) {
    if (name == "cos") return BasisKind::Cos;
    if (name == "sincos") return BasisKind::SinCos;
    if (name == "exp") return BasisKind::Exp;
    if (name == "expexp") return BasisKind::ExpExp;
    throw std::invalid_argument("unknown basis kind: " + name);
}

void FeatureMapSpec::validate() const {
    if (num_projections < 1) throw std::invalid_argument("FeatureMapSpec: Y must be >= 1");
    if (dim < 1) throw std::invalid_argument("FeatureMapSpec: D must be >= 1");
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("FeatureMapSpec: beta must be positive and finite");
}

namespace detail {

std::vector<double> orthogonal_block(const FeatureMapSpec& spec, std::size_t block,
                                     std::size_t& rows_out) {
    const std::size_t d = spec.dim;
    rows_out = std::min(d, spec.num_projections - block * d);

    // Full D x D Gaussian block; rows past Y are auxiliary draws that only
    // serve the orthogonalization.
    std::vector<double> q(d * d);
    for (std::size_t i = 0; i < d; ++i) {
        double* row = q.data() + i * d;
        for (std::size_t j = 0; j + 1 < d; j += 2)
            rng::gaussian_pair(spec.seed, rng::kProjection, block * d + i, j / 2, row[j],
                               row[j + 1]);
        if (d % 2 != 0) row[d - 1] = gaussian_entry(spec.seed, block * d + i, d - 1);
    }

    // Modified Gram-Schmidt with one re-orthogonalization pass.
    for (std::size_t i = 0; i < d; ++i) {
        double* qi = q.data() + i * d;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t k = 0; k < i; ++k) {
                const double* qk = q.data() + k * d;
                double proj = 0.0;
                for (std::size_t j = 0; j < d; ++j) proj += qi[j] * qk[j];
                for (std::size_t j = 0; j < d; ++j) qi[j] -= proj * qk[j];
            }
        }
        double n2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) n2 += qi[j] * qi[j];
        const double n = std::sqrt(n2);
        if (!(n > 0.0)) throw std::runtime_error("orthogonal_block: degenerate Gaussian block");
        for (std::size_t j = 0; j < d; ++j) qi[j] /= n;
    }

    // Rescale each retained direction by an independent Gaussian-vector norm
    // (chi with D degrees of freedom) to preserve the marginal row-norm law.
    std::vector<double> out(rows_out * d);
    for (std::size_t r = 0; r < rows_out; ++r) {
        double s2 = 0.0;
        double g0, g1;
        for (std::size_t j = 0; j + 1 < d; j += 2) {
            rng::gaussian_pair(spec.seed, rng::kRowScale, block * d + r, j / 2, g0, g1);
            s2 += g0 * g0 + g1 * g1;
        }
        if (d % 2 != 0) {
            g0 = rng::gaussian(spec.seed, rng::kRowScale, block * d + r, d - 1);
            s2 += g0 * g0;
        }
        const double scale = std::sqrt(s2);
        for (std::size_t j = 0; j < d; ++j) out[r * d + j] = q[r * d + j] * scale;
    }
    return out;
}

namespace {

// Shared per-row feature evaluation; both the streaming and the materialized
// paths funnel through here so their outputs are bitwise-identical.
inline void emit_row(BasisKind kind, std::size_t a, double p, double bias, double scale,
                     double un2, double* out) {
    switch (kind) {
    case BasisKind::Cos: out[a] = scale * std::cos(p + bias); break;
    case BasisKind::SinCos:
        out[2 * a] = scale * std::cos(p);
        out[2 * a + 1] = scale * std::sin(p);
        break;
    case BasisKind::Exp: out[a] = scale * std::exp(p + bias - un2); break;
    case BasisKind::ExpExp:
        out[2 * a] = scale * std::exp(p - un2);
        out[2 * a + 1] = scale * std::exp(-p - un2);
        break;
    }
}

inline double basis_scale(BasisKind kind, std::size_t y) {
    switch (kind) {
    case BasisKind::Cos: return std::sqrt(2.0 / static_cast<double>(y));
    case BasisKind::SinCos: return 1.0 / std::sqrt(static_cast<double>(y));
    case BasisKind::Exp: return 1.0 / std::sqrt(static_cast<double>(y));
    case BasisKind::ExpExp: return 1.0 / std::sqrt(2.0 * static_cast<double>(y));
    }
    return 0.0;
}

inline void check_input(const FeatureMapSpec& spec, std::span<const double> x,
                        const char* what) {
    spec.validate();
    vec::require_length(x, spec.dim, what);
    if (!vec::all_finite(x)) throw std::domain_error(std::string(what) + ": non-finite input");
}

} // namespace
} // namespace detail

ProjectionRow projection_row(const FeatureMapSpec& spec, std::size_t row) {
    spec.validate();
    if (row >= spec.num_projections)
        throw std::out_of_range("projection_row: row " + std::to_string(row) +
                                " out of range (Y = " + std::to_string(spec.num_projections) +
                                ")");
    ProjectionRow pr;
    pr.omega.resize(spec.dim);
    if (!spec.orthogonal) {
        const std::size_t d = spec.dim;
        for (std::size_t j = 0; j + 1 < d; j += 2)
            rng::gaussian_pair(spec.seed, rng::kProjection, row, j / 2, pr.omega[j],
                               pr.omega[j + 1]);
        if (d % 2 != 0) pr.omega[d - 1] = detail::gaussian_entry(spec.seed, row, d - 1);
    } else {
        std::size_t rows = 0;
        const std::vector<double> block = detail::orthogonal_block(spec, row / spec.dim, rows);
        const std::size_t r = row % spec.dim;
        pr.omega.assign(block.begin() + r * spec.dim, block.begin() + (r + 1) * spec.dim);
    }
    pr.bias = detail::row_bias(spec.seed, row);
    return pr;
}

std::vector<double> featurize(const FeatureMapSpec& spec, std::span<const double> x) {
    detail::check_input(spec, x, "featurize");
    const double sqb = std::sqrt(spec.beta);
    std::vector<double> u(spec.dim);
    for (std::size_t i = 0; i < spec.dim; ++i) u[i] = sqb * x[i];
    const double un2 = vec::norm2(u);
    const double scale = detail::basis_scale(spec.kind, spec.num_projections);

    std::vector<double> out(spec.feature_len());
    detail::for_each_projection_row(
        spec, [&](std::size_t a, std::span<const double> omega, double bias) {
            detail::emit_row(spec.kind, a, vec::dot(omega, u), bias, scale, un2, out.data());
        });
    return out;
}

double kernel_estimate(const FeatureMapSpec& spec, std::span<const double> x,
                       std::span<const double> x2) {
    const std::vector<double> fx = featurize(spec, x);
    const std::vector<double> fy = featurize(spec, x2);
    return vec::dot(fx, fy);
}

FeatureEvaluator::FeatureEvaluator(FeatureMapSpec spec, bool materialize) : spec_(spec) {
    spec_.validate();
    if (!materialize) return;
    rows_.resize(spec_.num_projections * spec_.dim);
    biases_.resize(spec_.num_projections);
    detail::for_each_projection_row(
        spec_, [&](std::size_t a, std::span<const double> omega, double bias) {
            std::copy(omega.begin(), omega.end(), rows_.begin() + a * spec_.dim);
            biases_[a] = bias;
        });
}

void FeatureEvaluator::features(std::span<const double> x, std::vector<double>& out) const {
    if (rows_.empty()) {
        out = featurize(spec_, x);
        return;
    }
    detail::check_input(spec_, x, "FeatureEvaluator::features");
    const std::size_t d = spec_.dim;
    const double sqb = std::sqrt(spec_.beta);
    std::vector<double> u(d);
    for (std::size_t i = 0; i < d; ++i) u[i] = sqb * x[i];
    const double un2 = vec::norm2(u);
    const double scale = detail::basis_scale(spec_.kind, spec_.num_projections);

    out.assign(spec_.feature_len(), 0.0);
    for (std::size_t a = 0; a < spec_.num_projections; ++a) {
        const double p = vec::dot(std::span<const double>(rows_.data() + a * d, d), u);
        detail::emit_row(spec_.kind, a, p, biases_[a], scale, un2, out.data());
    }
}

} // namespace drdam
