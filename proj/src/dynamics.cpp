#include "drdam/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "drdam/errors.hpp"

namespace drdam {

const char* to_string(GradPath path) {
    return path == GradPath::Streaming ? "streaming" : "specialized-l2";
}

DistributedModel::DistributedModel(const DistributedMemory& dm, ClipConfig clip, GradPath path,
                                   Normalization normalization, bool materialize_projections)
    : dm_(&dm), clip_(clip), path_(path), normalization_(normalization),
      evaluator_(dm.spec, materialize_projections) {
    if (path_ == GradPath::SpecializedL2) {
        if (!dm_->companion)
            throw std::invalid_argument(
                "DistributedModel: specialized-l2 path needs the companion store");
        if (normalization_ != Normalization::Identity)
            throw std::invalid_argument(
                "DistributedModel: specialized-l2 path supports identity normalization only");
    }
}

double DistributedModel::energy(std::span<const double> x) const {
    if (dm_->num_memories == 0)
        throw std::invalid_argument("distributed memory holds no patterns");
    const Pattern y = detail::apply_normalization(normalization_, x);
    std::vector<double> phi;
    evaluator_.features(y, phi);
    const double s = vec::dot(phi, dm_->tensor);
    return -std::log(std::max(s, clip_.epsilon_log)) / dm_->spec.beta;
}

Pattern DistributedModel::gradient(std::span<const double> x) const {
    if (path_ == GradPath::Streaming) return grad_comp(*dm_, clip_, x, normalization_);

    if (dm_->num_memories == 0)
        throw std::invalid_argument("distributed memory holds no patterns");
    vec::require_length(x, dm_->spec.dim, "distributed gradient input");
    const std::size_t d = dm_->spec.dim;
    std::vector<double> phi;
    evaluator_.features(x, phi);
    const double denom = vec::dot(phi, dm_->tensor);
    // Consistent with the model's clipped energy: where the floor is active
    // the energy is locally constant, so the descent direction is zero.
    if (!(denom > clip_.epsilon_log)) return Pattern(d, 0.0);
    const double* r = dm_->companion->data();
    Pattern num(d, 0.0);
    for (std::size_t f = 0; f < phi.size(); ++f) {
        const double w = phi[f];
        const double* row = r + f * d;
        for (std::size_t i = 0; i < d; ++i) num[i] += w * row[i];
    }
    Pattern grad(d);
    for (std::size_t i = 0; i < d; ++i) grad[i] = x[i] - num[i] / denom;
    return grad;
}

Trajectory descend(const EnergyModel& model, const Pattern& x0, const DescentConfig& cfg,
                   bool record_trace) {
    if (!(cfg.step_size > 0.0)) throw std::invalid_argument("descend: step size must be positive");
    if (!(cfg.tolerance > 0.0)) throw std::invalid_argument("descend: tolerance must be positive");
    if (cfg.max_steps < 1) throw std::invalid_argument("descend: max_steps must be >= 1");
    vec::require_length(x0, model.dim(), "descend initial state");
    if (cfg.clamp && cfg.clamp->size() != x0.size())
        throw ShapeError("descend: clamp mask length does not match pattern dimension");

    Trajectory traj;
    Pattern x = x0;
    double e_prev = model.energy(x);
    if (!std::isfinite(e_prev)) throw DescentError("non-finite energy", 0);

    traj.states.push_back(x);
    traj.energies.push_back(e_prev);

    for (std::size_t t = 1; t <= cfg.max_steps; ++t) {
        Pattern grad = model.gradient(x);
        if (!vec::all_finite(grad)) throw DescentError("non-finite gradient", t);
        if (cfg.clamp) {
            for (std::size_t i = 0; i < grad.size(); ++i)
                if ((*cfg.clamp)[i]) grad[i] = 0.0;
        }
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= cfg.step_size * grad[i];

        const double e = model.energy(x);
        if (!std::isfinite(e)) throw DescentError("non-finite energy", t);

        traj.steps_taken = t;
        if (record_trace) {
            traj.states.push_back(x);
            traj.energies.push_back(e);
        }
        if (std::abs(e - e_prev) < cfg.tolerance) {
            traj.converged = true;
            if (!record_trace) {
                traj.states.push_back(x);
                traj.energies.push_back(e);
            }
            return traj;
        }
        e_prev = e;
    }
    if (!record_trace) {
        traj.states.push_back(x);
        traj.energies.push_back(e_prev);
    }
    return traj;
}

double divergence(const Trajectory& a, const Trajectory& b, std::size_t step) {
    const Pattern* xa = nullptr;
    const Pattern* xb = nullptr;
    if (step == kFinalStep) {
        if (a.traced() && b.traced()) {
            const std::size_t s = std::min(a.steps_taken, b.steps_taken);
            xa = &a.states[s];
            xb = &b.states[s];
        } else {
            xa = &a.final_state();
            xb = &b.final_state();
        }
    } else {
        if (!a.traced() || !b.traced())
            throw std::invalid_argument("divergence: step lookup requires traced trajectories");
        if (step > a.steps_taken || step > b.steps_taken)
            throw std::invalid_argument("divergence: step beyond a trajectory's length");
        xa = &a.states[step];
        xb = &b.states[step];
    }
    if (xa->size() != xb->size())
        throw ShapeError("divergence: trajectories have different dimensions");
    return std::sqrt(vec::distance2(*xa, *xb));
}

} // namespace drdam
