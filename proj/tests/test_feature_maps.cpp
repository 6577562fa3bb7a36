#include "doctest.h"

#include <cmath>
#include <random>

#include "drdam/feature_maps.hpp"

#include "oracles.hpp"

using namespace drdam;

namespace {

// Constant multiplicative kernel bias of the Exp kind: the uniform shift
// enters both factors of the product, so the seed average carries a factor
// E[exp(2b)] = (e^{4 pi} - 1) / (4 pi) relative to the target kernel.
const double kExpBiasFactor =
    (std::exp(4.0 * 3.14159265358979323846) - 1.0) / (4.0 * 3.14159265358979323846);

FeatureMapSpec make_spec(BasisKind kind, std::size_t y, std::size_t d, double beta,
                         std::uint64_t seed, bool orth = false) {
    return FeatureMapSpec{kind, y, d, beta, seed, orth};
}

} // namespace

TEST_CASE("projection rows are regenerable and bitwise stable") {
    const FeatureMapSpec spec = make_spec(BasisKind::SinCos, 16, 8, 1.0, 42);
    const ProjectionRow a = projection_row(spec, 3);
    const ProjectionRow b = projection_row(spec, 3);
    CHECK(a.omega == b.omega);
    CHECK(a.bias == b.bias);
    CHECK(a.omega.size() == 8);
    CHECK(projection_row(spec, 4).omega != a.omega);
    CHECK_THROWS_AS((void)projection_row(spec, 16), std::out_of_range);
}

TEST_CASE("projection entries follow the standard normal law") {
    const FeatureMapSpec spec = make_spec(BasisKind::SinCos, 10000, 100, 1.0, 7);
    std::vector<double> entries;
    entries.reserve(1000000);
    for (std::size_t a = 0; a < 10000; ++a) {
        const ProjectionRow row = projection_row(spec, a);
        entries.insert(entries.end(), row.omega.begin(), row.omega.end());
    }
    CHECK(std::abs(oracles::mean(entries)) < 4e-3);
    CHECK(std::abs(oracles::sample_variance(entries) - 1.0) < 1e-2);
}

TEST_CASE("orthogonal mode produces exactly orthogonal directions") {
    const FeatureMapSpec spec = make_spec(BasisKind::SinCos, 4, 4, 1.0, 5, true);
    std::vector<ProjectionRow> rows;
    for (std::size_t a = 0; a < 4; ++a) rows.push_back(projection_row(spec, a));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j) {
            const double dot = vec::dot(rows[i].omega, rows[j].omega);
            CHECK(std::abs(dot) < 1e-12 * vec::norm(rows[i].omega) * vec::norm(rows[j].omega));
        }

    // Partial trailing block: rows 8..11 of a D=8 map are one block.
    const FeatureMapSpec partial = make_spec(BasisKind::SinCos, 12, 8, 1.0, 5, true);
    for (std::size_t i = 8; i < 12; ++i)
        for (std::size_t j = i + 1; j < 12; ++j) {
            const double dot = vec::dot(projection_row(partial, i).omega,
                                        projection_row(partial, j).omega);
            CHECK(std::abs(dot) < 1e-10);
        }
}

TEST_CASE("orthogonal rows keep chi-distributed norms") {
    const std::size_t d = 16;
    const FeatureMapSpec spec = make_spec(BasisKind::SinCos, 256, d, 1.0, 9, true);
    std::vector<double> norm2s;
    for (std::size_t a = 0; a < 256; ++a)
        norm2s.push_back(vec::norm2(projection_row(spec, a).omega));
    // chi^2 with d degrees of freedom: mean d, var 2d; SE ~ sqrt(2d/256).
    CHECK(std::abs(oracles::mean(norm2s) - static_cast<double>(d)) < 1.5);
}

TEST_CASE("featurize is deterministic and validates input") {
    const FeatureMapSpec spec = make_spec(BasisKind::ExpExp, 8, 4, 2.0, 3);
    const Pattern x = {0.1, -0.2, 0.05, 0.3};
    CHECK(featurize(spec, x) == featurize(spec, x));

    FeatureMapSpec copy = spec;
    CHECK(featurize(copy, x) == featurize(spec, x));

    CHECK_THROWS_AS((void)featurize(spec, Pattern{1.0, 2.0}), ShapeError);
    CHECK_THROWS_AS((void)featurize(spec, Pattern{0.0, 0.0, 0.0,
                                                  std::numeric_limits<double>::quiet_NaN()}),
                    std::domain_error);
    FeatureMapSpec bad = spec;
    bad.beta = 0.0;
    CHECK_THROWS_AS((void)featurize(bad, x), std::invalid_argument);
}

TEST_CASE("feature length doubles for the paired kinds") {
    CHECK(make_spec(BasisKind::Cos, 8, 4, 1.0, 0).feature_len() == 8);
    CHECK(make_spec(BasisKind::SinCos, 8, 4, 1.0, 0).feature_len() == 16);
    CHECK(make_spec(BasisKind::Exp, 8, 4, 1.0, 0).feature_len() == 8);
    CHECK(make_spec(BasisKind::ExpExp, 8, 4, 1.0, 0).feature_len() == 16);
}

TEST_CASE("sincos features have unit self inner product") {
    std::mt19937_64 gen(1);
    for (int rep = 0; rep < 5; ++rep) {
        const FeatureMapSpec spec = make_spec(BasisKind::SinCos, 64, 16, 10.0, 100 + rep);
        const Pattern x = oracles::random_box_pattern(gen, 16, 0.25);
        const std::vector<double> f = featurize(spec, x);
        CHECK(std::abs(vec::dot(f, f) - 1.0) < 1e-12);
        CHECK(std::abs(kernel_estimate(spec, x, x) - 1.0) < 1e-12);
    }
}

TEST_CASE("cos features at the origin reduce to the bias shifts") {
    const FeatureMapSpec spec = make_spec(BasisKind::Cos, 12, 6, 3.0, 17);
    const std::vector<double> f = featurize(spec, Pattern(6, 0.0));
    const double scale = std::sqrt(2.0 / 12.0);
    for (std::size_t a = 0; a < 12; ++a)
        CHECK(f[a] == doctest::Approx(scale * std::cos(projection_row(spec, a).bias)).epsilon(1e-15));
}

TEST_CASE("exponential kinds give strictly positive features") {
    std::mt19937_64 gen(2);
    const Pattern x = oracles::random_box_pattern(gen, 12, 1.0 / std::sqrt(12.0));
    for (BasisKind kind : {BasisKind::Exp, BasisKind::ExpExp}) {
        const std::vector<double> f = featurize(make_spec(kind, 32, 12, 5.0, 77), x);
        for (double v : f) CHECK(v > 0.0);
    }
}

TEST_CASE("kernel estimates are unbiased for the Gaussian kernel across seeds") {
    const std::size_t d = 16;
    const double beta = 1.0;
    std::mt19937_64 gen(3);
    const Pattern x = oracles::random_box_pattern(gen, d, 1.0 / std::sqrt(double(d)));
    Pattern x2 = oracles::random_box_pattern(gen, d, 1.0 / std::sqrt(double(d)));
    const double target = oracles::rbf_kernel(beta, x, x2);

    for (BasisKind kind :
         {BasisKind::Cos, BasisKind::SinCos, BasisKind::Exp, BasisKind::ExpExp}) {
        std::vector<double> estimates(200);
        for (std::size_t s = 0; s < estimates.size(); ++s)
            estimates[s] = kernel_estimate(make_spec(kind, 64, d, beta, 1000 + s), x, x2);
        const double m = oracles::mean(estimates);
        const double se = oracles::stderr_of_mean(estimates);
        // The Exp kind carries a known constant multiplicative bias from its
        // uniform shift; the others converge to the kernel itself.
        const double expected = kind == BasisKind::Exp ? target * kExpBiasFactor : target;
        CHECK(std::abs(m - expected) < 3.0 * se);
        if (kind == BasisKind::Exp) CHECK(std::abs(m / target - kExpBiasFactor) < 4.0 * se / target);
    }
}

TEST_CASE("orthogonal sincos stays unbiased") {
    const std::size_t d = 16;
    std::mt19937_64 gen(4);
    const Pattern x = oracles::random_box_pattern(gen, d, 0.25);
    const Pattern x2 = oracles::random_box_pattern(gen, d, 0.25);
    const double target = oracles::rbf_kernel(4.0, x, x2);
    std::vector<double> estimates(200);
    for (std::size_t s = 0; s < estimates.size(); ++s)
        estimates[s] = kernel_estimate(make_spec(BasisKind::SinCos, 16, d, 4.0, 2000 + s, true), x, x2);
    CHECK(std::abs(oracles::mean(estimates) - target) < 3.0 * oracles::stderr_of_mean(estimates));
}

TEST_CASE("distant inputs give near-zero, possibly negative, trig estimates") {
    const std::size_t d = 8;
    Pattern x(d, 0.0), x2(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) x2[i] = 3.0; // squared distance 72
    const double est = kernel_estimate(make_spec(BasisKind::SinCos, 256, d, 1.0, 9), x, x2);
    CHECK(oracles::rbf_kernel(1.0, x, x2) < 1e-13);
    CHECK(std::abs(est) < 0.2);
}

TEST_CASE("kernel error scales as one over sqrt(Y)") {
    const std::size_t d = 8;
    const double hi = 1.0 / std::sqrt(double(d));
    std::mt19937_64 gen(5);
    std::vector<Pattern> xs, ys;
    for (int p = 0; p < 60; ++p) {
        xs.push_back(oracles::random_box_pattern(gen, d, hi));
        ys.push_back(oracles::random_box_pattern(gen, d, hi));
    }

    SUBCASE("MAE halves from Y to 4Y") {
        double mae_small = 0.0, mae_big = 0.0;
        std::size_t n = 0;
        for (std::uint64_t s = 0; s < 8; ++s) {
            for (std::size_t p = 0; p < xs.size(); ++p) {
                const double target = oracles::rbf_kernel(1.0, xs[p], ys[p]);
                mae_small += std::abs(
                    kernel_estimate(make_spec(BasisKind::SinCos, 128, d, 1.0, 300 + s), xs[p], ys[p]) -
                    target);
                mae_big += std::abs(
                    kernel_estimate(make_spec(BasisKind::SinCos, 512, d, 1.0, 400 + s), xs[p], ys[p]) -
                    target);
                ++n;
            }
        }
        const double ratio = mae_small / mae_big;
        CHECK(ratio > 1.5);
        CHECK(ratio < 2.5);
    }

    SUBCASE("log-log slope of the RMS error is -1/2") {
        std::vector<double> ys_axis, rms;
        for (std::size_t y = 64; y <= 4096; y *= 2) {
            double sq = 0.0;
            std::size_t n = 0;
            for (std::uint64_t s = 0; s < 6; ++s) {
                const FeatureMapSpec spec = make_spec(BasisKind::SinCos, y, d, 1.0, 500 + s);
                for (std::size_t p = 0; p < xs.size(); ++p) {
                    const double e =
                        kernel_estimate(spec, xs[p], ys[p]) - oracles::rbf_kernel(1.0, xs[p], ys[p]);
                    sq += e * e;
                    ++n;
                }
            }
            ys_axis.push_back(static_cast<double>(y));
            rms.push_back(std::sqrt(sq / static_cast<double>(n)));
        }
        const double slope = oracles::loglog_slope(ys_axis, rms);
        CHECK(slope > -0.6);
        CHECK(slope < -0.4);
    }
}

TEST_CASE("orthogonal features reduce kernel-estimate variance on average") {
    const std::size_t d = 16;
    const double beta = 4.0;
    const double hi = 1.0 / std::sqrt(double(d));
    std::mt19937_64 gen(6);
    double var_orth_total = 0.0, var_iid_total = 0.0;
    for (int p = 0; p < 20; ++p) {
        const Pattern x = oracles::random_box_pattern(gen, d, hi);
        const Pattern x2 = oracles::random_box_pattern(gen, d, hi);
        std::vector<double> est_o(200), est_i(200);
        for (std::size_t s = 0; s < 200; ++s) {
            est_o[s] = kernel_estimate(make_spec(BasisKind::SinCos, 16, d, beta, 7000 + s, true), x, x2);
            est_i[s] = kernel_estimate(make_spec(BasisKind::SinCos, 16, d, beta, 7000 + s, false), x, x2);
        }
        var_orth_total += oracles::sample_variance(est_o);
        var_iid_total += oracles::sample_variance(est_i);
    }
    CHECK(var_orth_total < var_iid_total);
}

TEST_CASE("materialized evaluator matches the streaming featurize bitwise") {
    std::mt19937_64 gen(8);
    for (BasisKind kind :
         {BasisKind::Cos, BasisKind::SinCos, BasisKind::Exp, BasisKind::ExpExp}) {
        for (bool orth : {false, true}) {
            const FeatureMapSpec spec = make_spec(kind, 24, 10, 2.5, 99, orth);
            const FeatureEvaluator cached(spec, true);
            const FeatureEvaluator lazy(spec, false);
            for (int rep = 0; rep < 3; ++rep) {
                const Pattern x = oracles::random_box_pattern(gen, 10, 0.5);
                const std::vector<double> expect = featurize(spec, x);
                CHECK(cached.features(x) == expect);
                CHECK(lazy.features(x) == expect);
            }
        }
    }
}
