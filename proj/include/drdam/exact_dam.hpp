#pragma once

#include <span>
#include <vector>

#include "drdam/vec.hpp"

// Exact dense associative memory (the memory representation): memories are
// stored verbatim as the rows of a K x D matrix, and energy/gradient are
// evaluated against all of them through a max-shifted log-sum-exp.

namespace drdam {

enum class Similarity : std::uint8_t { L2 = 0, Dot = 1 };
enum class Normalization : std::uint8_t { Identity = 0, L2Normalize = 1 };

struct EnergySpec {
    Similarity similarity = Similarity::L2;
    double beta = 1.0;
    Normalization normalization = Normalization::Identity;
};

/// The K x D stack of stored patterns.  Immutable by convention: evaluation
/// never mutates it, and add_memory_exact returns an extended copy.
struct MemoryMatrix {
    std::size_t dim = 0;
    std::vector<Pattern> rows;

    static MemoryMatrix from(std::size_t dim, std::vector<Pattern> rows);

    std::size_t count() const noexcept { return rows.size(); }
};

/// -(1/beta) * logsumexp over memories of
///   -beta/2 * ||xi - g(x)||^2   (L2 similarity)
///   beta * <xi, g(x)>           (Dot similarity)
double energy_exact(const EnergySpec& spec, const MemoryMatrix& mem, std::span<const double> x);

/// d/dx of energy_exact, using the same shifted exponents as the energy.
/// L2/Identity reduces to x minus the softmax-weighted memory combination.
Pattern grad_exact(const EnergySpec& spec, const MemoryMatrix& mem, std::span<const double> x);

/// Copy of `mem` with `xi` appended; prior rows are unchanged.
MemoryMatrix add_memory_exact(const MemoryMatrix& mem, std::span<const double> xi);

namespace detail {

// Softmax weights over the memory scores, shared by the gradient path.
std::vector<double> memory_softmax(const EnergySpec& spec, const MemoryMatrix& mem,
                                   std::span<const double> z);

// g and its (symmetric) Jacobian-vector product.
Pattern apply_normalization(Normalization norm, std::span<const double> x);
Pattern normalization_jacobian_apply(Normalization norm, std::span<const double> x,
                                     std::span<const double> v);

} // namespace detail
} // namespace drdam
