#include "drdam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace drdam {

double mae_energy(std::span<const double> exact, std::span<const double> approx) {
    if (exact.empty()) throw std::invalid_argument("mae_energy: empty input");
    if (exact.size() != approx.size()) throw ShapeError("mae_energy: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) s += std::abs(exact[i] - approx[i]);
    return s / static_cast<double>(exact.size());
}

double mae_gradient(std::span<const Pattern> exact, std::span<const Pattern> approx) {
    if (exact.empty()) throw std::invalid_argument("mae_gradient: empty input");
    if (exact.size() != approx.size()) throw ShapeError("mae_gradient: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) {
        if (exact[i].size() != approx[i].size())
            throw ShapeError("mae_gradient: dimension mismatch");
        s += std::sqrt(vec::distance2(exact[i], approx[i]));
    }
    return s / static_cast<double>(exact.size());
}

Pattern binarize(std::span<const double> x) {
    if (!vec::all_finite(x)) throw std::domain_error("binarize: non-finite input");
    const double hi = 1.0 / std::sqrt(static_cast<double>(x.size()));
    const double threshold = 0.5 * hi;
    Pattern out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] >= threshold ? hi : 0.0;
    return out;
}

double hamming_error(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("hamming_error: length mismatch");
    const Pattern ba = binarize(a);
    const Pattern bb = binarize(b);
    std::size_t differing = 0;
    for (std::size_t i = 0; i < ba.size(); ++i)
        if (ba[i] != bb[i]) ++differing;
    return static_cast<double>(differing) / static_cast<double>(a.size());
}

double random_guess_level(std::span<const std::vector<double>> mae_per_beta) {
    if (mae_per_beta.empty()) throw std::invalid_argument("random_guess_level: empty input");
    double best = -std::numeric_limits<double>::infinity();
    for (const std::vector<double>& per_y : mae_per_beta) {
        if (per_y.empty()) throw std::invalid_argument("random_guess_level: empty Y sweep");
        double mean = 0.0;
        for (double v : per_y) mean += v;
        mean /= static_cast<double>(per_y.size());
        best = std::max(best, mean);
    }
    return best;
}

double tuned_step_size(const BoundParams& p) {
    const double growth =
        1.0 + 2.0 * static_cast<double>(p.num_memories) * p.beta * std::exp(p.beta / 2.0);
    return p.c2 / (static_cast<double>(p.steps) * growth);
}

double divergence_bound(const BoundParams& p, BoundKind kind) {
    if (p.num_memories < 1 || p.dim < 1 || p.num_projections < 1 || p.steps < 1)
        throw std::invalid_argument("divergence_bound: counts must be positive");
    if (!(p.c1 > 0.0)) throw std::invalid_argument("divergence_bound: C1 must be positive");
    const double ratio = std::sqrt(static_cast<double>(p.dim) /
                                   static_cast<double>(p.num_projections));

    if (kind == BoundKind::TunedStep) {
        if (!(p.c2 > 0.0) || !(p.c2 < 1.0))
            throw std::domain_error("divergence_bound: tuned-step form requires 0 < C2 < 1");
        return p.c1 * p.c2 * std::exp(p.beta * (p.initial_energy - 0.5)) /
               (p.beta * (1.0 - p.c2)) * ratio;
    }

    const double k = static_cast<double>(p.num_memories);
    const double l = static_cast<double>(p.steps);
    const double growth = 1.0 + 2.0 * k * p.beta * std::exp(p.beta / 2.0);
    const double q = p.step_size * l * growth;
    const double first =
        2.0 * p.step_size * l * p.c1 * k * std::exp(p.beta * p.initial_energy) * ratio;
    const double series =
        std::abs(1.0 - q) < 1e-12 ? l : (1.0 - std::pow(q, l)) / (1.0 - q);
    return first * series;
}

double calibrate_c1(const FeatureMapSpec& spec, std::span<const Pattern> xs,
                    std::span<const Pattern> ys, double percentile) {
    if (xs.empty() || xs.size() != ys.size())
        throw std::invalid_argument("calibrate_c1: need matched non-empty pair lists");
    if (!(percentile > 0.0) || !(percentile > 0.0 && percentile <= 1.0))
        throw std::invalid_argument("calibrate_c1: percentile must lie in (0, 1]");
    const double scale = std::sqrt(static_cast<double>(spec.num_projections) /
                                   static_cast<double>(spec.dim));
    std::vector<double> scores(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double truth = std::exp(-0.5 * spec.beta * vec::distance2(xs[i], ys[i]));
        scores[i] = std::abs(truth - kernel_estimate(spec, xs[i], ys[i])) * scale;
    }
    std::sort(scores.begin(), scores.end());
    const std::size_t rank = static_cast<std::size_t>(
        std::ceil(percentile * static_cast<double>(scores.size())));
    return scores[std::min(scores.size() - 1, rank == 0 ? 0 : rank - 1)];
}

} // namespace drdam
