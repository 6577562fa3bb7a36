#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "drdam/distributed_dam.hpp"
#include "drdam/exact_dam.hpp"

// Energy-descent retrieval: x(t) = x(t-1) - eta * grad E(x(t-1)), with
// clamped coordinates' gradient entries zeroed, until the energy difference
// between consecutive states falls below the convergence tolerance.

namespace drdam {

struct DescentConfig {
    double step_size = 0.1;       ///< eta; constant across steps
    std::size_t max_steps = 1000; ///< L
    double tolerance = 1e-8;      ///< convergence threshold on |E(t) - E(t-1)|
    std::optional<std::vector<bool>> clamp; ///< true = coordinate frozen
};

struct Trajectory {
    /// Visited states x(0..t) when traced, otherwise just {x(0), x(final)}.
    std::vector<Pattern> states;
    std::vector<double> energies;
    bool converged = false;
    std::size_t steps_taken = 0;

    const Pattern& initial() const { return states.front(); }
    const Pattern& final_state() const { return states.back(); }
    double final_energy() const { return energies.back(); }
    bool traced() const { return states.size() == steps_taken + 1; }
};

/// Anything that exposes an energy landscape over D-dimensional patterns.
class EnergyModel {
public:
    virtual ~EnergyModel() = default;
    virtual std::size_t dim() const = 0;
    virtual double energy(std::span<const double> x) const = 0;
    virtual Pattern gradient(std::span<const double> x) const = 0;
};

/// Evaluates the exact memory-matrix energy.  Holds references only.
class ExactModel final : public EnergyModel {
public:
    ExactModel(const EnergySpec& spec, const MemoryMatrix& mem) : spec_(spec), mem_(&mem) {}

    std::size_t dim() const override { return mem_->dim; }
    double energy(std::span<const double> x) const override {
        return energy_exact(spec_, *mem_, x);
    }
    Pattern gradient(std::span<const double> x) const override {
        return grad_exact(spec_, *mem_, x);
    }

private:
    EnergySpec spec_;
    const MemoryMatrix* mem_;
};

enum class GradPath : std::uint8_t {
    Streaming,    ///< row-streamed gradient of the approximate energy
    SpecializedL2 ///< softmax-form gradient from the companion store
};

const char* to_string(GradPath path);

/// Evaluates the distributed energy.  Holds a reference to the consolidated
/// store; optionally materializes the projection rows (Y x D doubles) to
/// speed up repeated evaluation — appropriate whenever a comparably sized
/// companion store is in play, while grad_comp itself always streams.
/// Both gradient paths return the zero vector when the energy clip is
/// active, so the descent direction always matches the clipped landscape
/// (the raw grad_l2_specialized op keeps its floored-denominator form).
class DistributedModel final : public EnergyModel {
public:
    DistributedModel(const DistributedMemory& dm, ClipConfig clip, GradPath path,
                     Normalization normalization = Normalization::Identity,
                     bool materialize_projections = true);

    std::size_t dim() const override { return dm_->spec.dim; }
    double energy(std::span<const double> x) const override;
    Pattern gradient(std::span<const double> x) const override;
    GradPath path() const noexcept { return path_; }

private:
    const DistributedMemory* dm_;
    ClipConfig clip_;
    GradPath path_;
    Normalization normalization_;
    FeatureEvaluator evaluator_;
    mutable std::vector<double> phi_; // reused feature buffer
};

/// Runs the descent from x0.  Throws DescentError (with the step index) if a
/// non-finite energy or gradient shows up.
Trajectory descend(const EnergyModel& model, const Pattern& x0, const DescentConfig& cfg,
                   bool record_trace = false);

inline constexpr std::size_t kFinalStep = std::numeric_limits<std::size_t>::max();

/// L2 distance between the two trajectories' states at `step` (default: the
/// final common step; untraced trajectories compare their final states).
double divergence(const Trajectory& a, const Trajectory& b, std::size_t step = kFinalStep);

} // namespace drdam
