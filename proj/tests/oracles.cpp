#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracles {

using drdam::Pattern;

Pattern finite_difference_gradient(const std::function<double(const Pattern&)>& f,
                                   const Pattern& x, double step) {
    Pattern g(x.size());
    Pattern probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + step;
        const double up = f(probe);
        probe[i] = saved - step;
        const double down = f(probe);
        probe[i] = saved;
        g[i] = (up - down) / (2.0 * step);
    }
    return g;
}

double gradient_relative_error(std::span<const double> grad, std::span<const double> fd) {
    double diff2 = 0.0, ref2 = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        const double d = grad[i] - fd[i];
        diff2 += d * d;
        ref2 += grad[i] * grad[i];
    }
    return std::sqrt(diff2) / std::max(std::sqrt(ref2), 1e-12);
}

Pattern dense_jacobian_grad(const drdam::DistributedMemory& dm, const drdam::ClipConfig& clip,
                            const Pattern& x) {
    const drdam::FeatureMapSpec& spec = dm.spec;
    const std::size_t d = spec.dim;
    const std::size_t y = spec.num_projections;
    const std::size_t feats = spec.feature_len();
    const double sqb = std::sqrt(spec.beta);

    // Materialized projection matrix and biases.
    std::vector<std::vector<double>> omega(y);
    std::vector<double> bias(y);
    for (std::size_t a = 0; a < y; ++a) {
        const drdam::ProjectionRow row = drdam::projection_row(spec, a);
        omega[a] = row.omega;
        bias[a] = row.bias;
    }

    Pattern u(d);
    for (std::size_t i = 0; i < d; ++i) u[i] = sqb * x[i];
    const double un2 = drdam::vec::norm2(u);

    // Feature vector and dense Jacobian straight from the basis formulas.
    std::vector<double> phi(feats, 0.0);
    std::vector<std::vector<double>> jac(feats, std::vector<double>(d, 0.0));
    for (std::size_t a = 0; a < y; ++a) {
        const double p = drdam::vec::dot(omega[a], u);
        switch (spec.kind) {
        case drdam::BasisKind::Cos: {
            const double scale = std::sqrt(2.0 / static_cast<double>(y));
            phi[a] = scale * std::cos(p + bias[a]);
            for (std::size_t i = 0; i < d; ++i)
                jac[a][i] = -scale * std::sin(p + bias[a]) * sqb * omega[a][i];
            break;
        }
        case drdam::BasisKind::SinCos: {
            const double scale = 1.0 / std::sqrt(static_cast<double>(y));
            phi[2 * a] = scale * std::cos(p);
            phi[2 * a + 1] = scale * std::sin(p);
            for (std::size_t i = 0; i < d; ++i) {
                jac[2 * a][i] = -scale * std::sin(p) * sqb * omega[a][i];
                jac[2 * a + 1][i] = scale * std::cos(p) * sqb * omega[a][i];
            }
            break;
        }
        case drdam::BasisKind::Exp: {
            const double scale = 1.0 / std::sqrt(static_cast<double>(y));
            phi[a] = scale * std::exp(p + bias[a] - un2);
            for (std::size_t i = 0; i < d; ++i)
                jac[a][i] = phi[a] * (sqb * omega[a][i] - 2.0 * spec.beta * x[i]);
            break;
        }
        case drdam::BasisKind::ExpExp: {
            const double scale = 1.0 / std::sqrt(2.0 * static_cast<double>(y));
            phi[2 * a] = scale * std::exp(p - un2);
            phi[2 * a + 1] = scale * std::exp(-p - un2);
            for (std::size_t i = 0; i < d; ++i) {
                jac[2 * a][i] = phi[2 * a] * (sqb * omega[a][i] - 2.0 * spec.beta * x[i]);
                jac[2 * a + 1][i] = phi[2 * a + 1] * (-sqb * omega[a][i] - 2.0 * spec.beta * x[i]);
            }
            break;
        }
        }
    }

    double s = 0.0;
    for (std::size_t f = 0; f < feats; ++f) s += phi[f] * dm.tensor[f];
    if (!(s > clip.epsilon_log)) return Pattern(d, 0.0);

    Pattern grad(d, 0.0);
    for (std::size_t f = 0; f < feats; ++f)
        for (std::size_t i = 0; i < d; ++i) grad[i] += jac[f][i] * dm.tensor[f];
    const double q = -1.0 / (spec.beta * s);
    for (double& v : grad) v *= q;
    return grad;
}

double rbf_kernel(double beta, std::span<const double> x, std::span<const double> y) {
    return std::exp(-0.5 * beta * drdam::vec::distance2(x, y));
}

double hull_distance(std::span<const Pattern> hull_points, const Pattern& v,
                     std::size_t iterations) {
    const std::size_t k = hull_points.size();
    const std::size_t d = v.size();
    std::vector<double> w(k, 1.0 / static_cast<double>(k));

    Pattern point(d, 0.0);
    const auto recompute = [&] {
        std::fill(point.begin(), point.end(), 0.0);
        for (std::size_t m = 0; m < k; ++m)
            for (std::size_t i = 0; i < d; ++i) point[i] += w[m] * hull_points[m][i];
    };
    recompute();

    for (std::size_t t = 0; t < iterations; ++t) {
        // Gradient of 0.5 ||P w - v||^2 in w is X (P w - v); the Frank-Wolfe
        // vertex is the memory with the most negative component.
        std::size_t best = 0;
        double best_val = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < k; ++m) {
            double g = 0.0;
            for (std::size_t i = 0; i < d; ++i) g += hull_points[m][i] * (point[i] - v[i]);
            if (g < best_val) {
                best_val = g;
                best = m;
            }
        }
        const double gamma = 2.0 / (static_cast<double>(t) + 2.0);
        for (std::size_t m = 0; m < k; ++m) w[m] *= (1.0 - gamma);
        w[best] += gamma;
        recompute();
    }
    return std::sqrt(drdam::vec::distance2(point, v));
}

double loglog_slope(std::span<const double> xs, std::span<const double> ys) {
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double lx = std::log(xs[i]);
        const double ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
    const double m = mean(v);
    double s2 = 0.0;
    for (double x : v) s2 += (x - m) * (x - m);
    return s2 / static_cast<double>(v.size() - 1);
}

double stderr_of_mean(std::span<const double> v) {
    return std::sqrt(sample_variance(v) / static_cast<double>(v.size()));
}

Pattern random_box_pattern(std::mt19937_64& gen, std::size_t dim, double hi) {
    std::uniform_real_distribution<double> dist(0.0, hi);
    Pattern x(dim);
    for (double& v : x) v = dist(gen);
    return x;
}

} // namespace oracles
