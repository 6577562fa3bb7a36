#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "drdam/distributed_dam.hpp"
#include "drdam/feature_maps.hpp"
#include "drdam/vec.hpp"

// Independent reference computations used only by tests.  Nothing here calls
// the streaming implementation paths it is used to check.

namespace oracles {

/// Central finite differences of a scalar function.
drdam::Pattern finite_difference_gradient(const std::function<double(const drdam::Pattern&)>& f,
                                          const drdam::Pattern& x, double step = 1e-6);

/// Relative error between a gradient and its finite-difference estimate.
double gradient_relative_error(std::span<const double> grad, std::span<const double> fd);

/// Straightforward dense reference for the distributed gradient: materializes
/// the full projection matrix and the Y_eff x D feature Jacobian from the
/// basis formulas and multiplies through.
drdam::Pattern dense_jacobian_grad(const drdam::DistributedMemory& dm,
                                   const drdam::ClipConfig& clip, const drdam::Pattern& x);

/// exp(-beta/2 ||x - y||^2).
double rbf_kernel(double beta, std::span<const double> x, std::span<const double> y);

/// Distance from a point to the convex hull of the given vectors
/// (Frank-Wolfe on the simplex-constrained least squares).
double hull_distance(std::span<const drdam::Pattern> hull_points, const drdam::Pattern& v,
                     std::size_t iterations = 2000);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> xs, std::span<const double> ys);

double mean(std::span<const double> v);
double sample_variance(std::span<const double> v);
double stderr_of_mean(std::span<const double> v);

/// Uniform pattern in [0, hi]^dim from a test-local generator.
drdam::Pattern random_box_pattern(std::mt19937_64& gen, std::size_t dim, double hi);

} // namespace oracles
