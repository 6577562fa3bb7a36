#include "drdam/exact_dam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace drdam {

MemoryMatrix MemoryMatrix::from(std::size_t dim, std::vector<Pattern> rows) {
    MemoryMatrix mem;
    mem.dim = dim;
    for (const Pattern& r : rows) vec::require_length(r, dim, "MemoryMatrix");
    mem.rows = std::move(rows);
    return mem;
}

namespace detail {

Pattern apply_normalization(Normalization norm, std::span<const double> x) {
    Pattern z(x.begin(), x.end());
    if (norm == Normalization::L2Normalize) {
        const double n = vec::norm(x);
        if (!(n > 0.0)) throw std::domain_error("L2Normalize: zero input");
        for (double& v : z) v /= n;
    }
    return z;
}

Pattern normalization_jacobian_apply(Normalization norm, std::span<const double> x,
                                     std::span<const double> v) {
    if (norm == Normalization::Identity) return Pattern(v.begin(), v.end());
    // d(x/||x||)/dx = (1/||x||) (I - x x^T / ||x||^2); symmetric.
    const double n2 = vec::norm2(x);
    if (!(n2 > 0.0)) throw std::domain_error("L2Normalize: zero input");
    const double n = std::sqrt(n2);
    const double xv = vec::dot(x, v);
    Pattern out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - x[i] * xv / n2) / n;
    return out;
}

namespace {

// Memory scores (the log-sum-exp arguments) at the normalized point z.
std::vector<double> scores(const EnergySpec& spec, const MemoryMatrix& mem,
                           std::span<const double> z) {
    std::vector<double> s(mem.count());
    for (std::size_t m = 0; m < mem.count(); ++m) {
        s[m] = spec.similarity == Similarity::L2
                   ? -0.5 * spec.beta * vec::distance2(mem.rows[m], z)
                   : spec.beta * vec::dot(mem.rows[m], z);
    }
    return s;
}

void check_eval(const EnergySpec& spec, const MemoryMatrix& mem, std::span<const double> x) {
    if (mem.count() == 0) throw std::invalid_argument("energy: empty memory");
    vec::require_length(x, mem.dim, "energy input");
    if (!(spec.beta > 0.0)) throw std::invalid_argument("energy: beta must be positive");
}

} // namespace

std::vector<double> memory_softmax(const EnergySpec& spec, const MemoryMatrix& mem,
                                   std::span<const double> z) {
    std::vector<double> s = scores(spec, mem, z);
    const double m = *std::max_element(s.begin(), s.end());
    double total = 0.0;
    for (double& v : s) {
        v = std::exp(v - m);
        total += v;
    }
    for (double& v : s) v /= total;
    return s;
}

} // namespace detail

double energy_exact(const EnergySpec& spec, const MemoryMatrix& mem, std::span<const double> x) {
    detail::check_eval(spec, mem, x);
    const Pattern z = detail::apply_normalization(spec.normalization, x);
    const std::vector<double> s = detail::scores(spec, mem, z);
    const double m = *std::max_element(s.begin(), s.end());
    double total = 0.0;
    for (double v : s) total += std::exp(v - m);
    return -(m + std::log(total)) / spec.beta;
}

Pattern grad_exact(const EnergySpec& spec, const MemoryMatrix& mem, std::span<const double> x) {
    detail::check_eval(spec, mem, x);
    const Pattern z = detail::apply_normalization(spec.normalization, x);
    const std::vector<double> p = detail::memory_softmax(spec, mem, z);

    Pattern weighted(mem.dim, 0.0);
    for (std::size_t m = 0; m < mem.count(); ++m) vec::axpy(p[m], mem.rows[m], weighted);

    // dE/dz: (z - sum_m p_m xi_m) for L2, -(sum_m p_m xi_m) for Dot.
    Pattern dz(mem.dim);
    for (std::size_t i = 0; i < mem.dim; ++i)
        dz[i] = spec.similarity == Similarity::L2 ? z[i] - weighted[i] : -weighted[i];
    return detail::normalization_jacobian_apply(spec.normalization, x, dz);
}

MemoryMatrix add_memory_exact(const MemoryMatrix& mem, std::span<const double> xi) {
    const std::size_t dim = mem.count() == 0 && mem.dim == 0 ? xi.size() : mem.dim;
    vec::require_length(xi, dim, "add_memory_exact");
    MemoryMatrix out;
    out.dim = dim;
    out.rows = mem.rows;
    out.rows.emplace_back(xi.begin(), xi.end());
    return out;
}

} // namespace drdam
