#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "drdam/vec.hpp"

// Random feature maps phi whose inner products approximate the Gaussian
// kernel exp(-beta/2 ||x - x'||^2).  The inverse temperature enters only by
// evaluating the basis functions at sqrt(beta)*x; four basis families are
// provided:
//
//   Cos     sqrt(2/Y) * cos(<w_a, u> + b_a)                       (Y features)
//   SinCos  (1/sqrt(Y)) * [cos(<w_a, u>), sin(<w_a, u>)]          (2Y features)
//   Exp     (exp(-||u||^2)/sqrt(Y)) * exp(<w_a, u> + b_a)         (Y features)
//   ExpExp  (exp(-||u||^2)/sqrt(2Y)) * [exp(+<w_a, u>), exp(-<w_a, u>)]
//                                                                 (2Y features)
//
// with u = sqrt(beta)*x, w_a iid standard Gaussian rows and b_a uniform on
// [0, 2pi).  Projection rows are regenerated on demand from a counter-based
// generator keyed on (seed, row, coordinate), so no Y x D matrix ever needs
// to be stored.

namespace drdam {

enum class BasisKind : std::uint8_t { Cos = 0, SinCos = 1, Exp = 2, ExpExp = 3 };

const char* to_string(BasisKind kind);
BasisKind basis_from_string(const std::string& name);

/// Fully determines a feature map: two specs with equal fields produce
/// bitwise-identical feature vectors for identical inputs.
struct FeatureMapSpec {
    BasisKind kind = BasisKind::SinCos;
    std::size_t num_projections = 0; ///< Y, number of random projection rows
    std::size_t dim = 0;             ///< D, pattern dimension
    double beta = 1.0;               ///< inverse temperature
    std::uint64_t seed = 0;
    bool orthogonal = false; ///< block-orthogonalized rows (variance reduction)

    /// Output length: 2Y for the paired kinds (SinCos, ExpExp), else Y.
    std::size_t feature_len() const noexcept {
        return (kind == BasisKind::SinCos || kind == BasisKind::ExpExp) ? 2 * num_projections
                                                                        : num_projections;
    }

    /// Throws std::invalid_argument unless Y >= 1, D >= 1 and beta > 0.
    void validate() const;

    bool operator==(const FeatureMapSpec&) const = default;
};

/// One random projection direction.  `bias` is meaningful for the Cos and
/// Exp kinds only and is zero-initialized otherwise.
struct ProjectionRow {
    std::vector<double> omega;
    double bias = 0.0;
};

/// Regenerates row `row` (0-based, row < Y).  Pure function of
/// (spec.seed, row, spec.dim, spec.orthogonal); independent of call order.
/// In orthogonal mode, rows are grouped in blocks of up to D directions that
/// are exactly orthogonal; each direction is rescaled by an independently
/// drawn Gaussian-vector norm so the marginal row-norm distribution matches
/// the iid case.
ProjectionRow projection_row(const FeatureMapSpec& spec, std::size_t row);

/// phi(x); length feature_len().  Throws ShapeError on dimension mismatch and
/// std::domain_error on non-finite input.
std::vector<double> featurize(const FeatureMapSpec& spec, std::span<const double> x);

/// <phi(x), phi(x2)>, the randomized estimate of exp(-beta/2 ||x - x2||^2).
double kernel_estimate(const FeatureMapSpec& spec, std::span<const double> x,
                       std::span<const double> x2);

/// Evaluates phi against a fixed spec, optionally with all projection rows
/// materialized up front (Y x D doubles).  Materialization trades the
/// regeneration cost for memory and is intended for callers that already
/// hold comparably sized state; results are bitwise-identical to featurize().
class FeatureEvaluator {
public:
    explicit FeatureEvaluator(FeatureMapSpec spec, bool materialize = false);

    const FeatureMapSpec& spec() const noexcept { return spec_; }

    /// out is resized to feature_len().
    void features(std::span<const double> x, std::vector<double>& out) const;

    std::vector<double> features(std::span<const double> x) const {
        std::vector<double> out;
        features(x, out);
        return out;
    }

private:
    FeatureMapSpec spec_;
    std::vector<double> rows_;   // Y x D, row-major; empty when not materialized
    std::vector<double> biases_; // Y entries, only filled for biased kinds
};

namespace detail {

// Invokes fn(row_index, omega_span, bias) for rows [0, Y) in order, reusing a
// single row buffer (iid mode) or one D x D block (orthogonal mode).
template <class Fn> void for_each_projection_row(const FeatureMapSpec& spec, Fn&& fn);

// Scaled orthogonal block `block` as a (rows x D) row-major matrix, where
// rows = min(D, Y - block*D).
std::vector<double> orthogonal_block(const FeatureMapSpec& spec, std::size_t block,
                                     std::size_t& rows_out);

double gaussian_entry(std::uint64_t seed, std::size_t row, std::size_t coord);
double row_bias(std::uint64_t seed, std::size_t row);

} // namespace detail
} // namespace drdam

#include "drdam/feature_maps_inl.hpp"
