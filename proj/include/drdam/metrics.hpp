#pragma once

#include <span>
#include <vector>

#include "drdam/feature_maps.hpp"
#include "drdam/vec.hpp"

// Quantitative comparison machinery: mean approximation errors, binarization
// and normalized Hamming error, the random-guess aggregation rule, and
// evaluation of the theoretical divergence bounds.

namespace drdam {

/// (1/n) sum |exact_b - approx_b|.
double mae_energy(std::span<const double> exact, std::span<const double> approx);

/// (1/n) sum ||grad_exact_b - grad_approx_b||_2.
double mae_gradient(std::span<const Pattern> exact, std::span<const Pattern> approx);

/// Entry-wise snap to the binary alphabet {0, 1/sqrt(D)}: values at or above
/// 1/(2 sqrt(D)) go high. Idempotent.
Pattern binarize(std::span<const double> x);

/// Normalized Hamming error between binarized inputs: differing bits / D.
double hamming_error(std::span<const double> a, std::span<const double> b);

/// Aggregation rule for the random-guess baseline: per-beta mean across the
/// Y sweep, then the maximum of those means across betas.  `mae_per_beta`
/// holds one vector of per-Y MAE values for each beta.
double random_guess_level(std::span<const std::vector<double>> mae_per_beta);

struct BoundParams {
    double c1 = 1.0;             ///< kernel-approximation constant
    double c2 = 0.5;             ///< step-size constant, in (0, 1) for the tuned-step form
    double beta = 1.0;
    std::size_t num_memories = 1; ///< K
    std::size_t dim = 1;          ///< D
    std::size_t num_projections = 1; ///< Y
    std::size_t steps = 1;        ///< L
    double step_size = 0.1;       ///< eta (general-step form only)
    double initial_energy = 0.0;  ///< E(x) at the starting query
};

enum class BoundKind { GeneralStep, TunedStep };

/// General-step form:
///   2 eta L C1 K e^{beta E0} sqrt(D/Y) * (1 - q^L) / (1 - q),
///   q = eta L (1 + 2 K beta e^{beta/2}),
/// with the q -> 1 singularity replaced by its limit L * (first factor).
/// Tuned-step form (implies eta = C2 / (L (1 + 2 K beta e^{beta/2}))):
///   C1 C2 e^{beta (E0 - 1/2)} / (beta (1 - C2)) * sqrt(D/Y).
double divergence_bound(const BoundParams& p, BoundKind kind);

/// Step size implied by the tuned-step choice.
double tuned_step_size(const BoundParams& p);

/// Empirical estimate of the kernel-approximation constant: the given
/// percentile of |exp(-beta/2 ||x-x'||^2) - kernel_estimate(x, x')| *
/// sqrt(Y/D) over the calibration pairs (xs[i], ys[i]).
double calibrate_c1(const FeatureMapSpec& spec, std::span<const Pattern> xs,
                    std::span<const Pattern> ys, double percentile = 0.99);

} // namespace drdam
