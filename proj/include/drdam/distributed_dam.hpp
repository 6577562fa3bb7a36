#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "drdam/exact_dam.hpp"
#include "drdam/feature_maps.hpp"

// Distributed dense associative memory: all memories are consolidated into a
// single feature-space tensor T = sum_mu phi(xi_mu) whose size never grows
// with the number of stored patterns.  Energy and gradient are evaluated
// against T alone; gradient computation streams over projection rows so its
// working storage stays O(D + Y_eff) no matter how large the feature space.

namespace drdam {

/// Floor for the log argument: feature inner products of the trigonometric
/// kinds can be negative even though the kernel they estimate cannot.
struct ClipConfig {
    double epsilon_log = 1e-12;
};

/// Tracks words of scratch storage so the streaming-gradient contract can be
/// asserted rather than assumed.
struct WorkspaceMeter {
    std::size_t current_words = 0;
    std::size_t peak_words = 0;

    void allocate(std::size_t words) {
        current_words += words;
        if (current_words > peak_words) peak_words = current_words;
    }
    void release(std::size_t words) { current_words -= words; }
};

struct DistributedMemory {
    FeatureMapSpec spec;
    std::vector<double> tensor;  ///< T, feature_len() entries
    std::size_t num_memories = 0; ///< K
    /// Optional companion numerator store R = sum_mu phi(xi_mu) xi_mu^T,
    /// row-major (feature_len() x D).  Enables the softmax-form L2 gradient.
    std::optional<std::vector<double>> companion;

    bool has_companion() const noexcept { return companion.has_value(); }
};

/// Consolidates `memories` into T (and R when requested).  Projection rows
/// are regenerated on demand; with_companion=false keeps peak extra storage
/// at O(D + Y_eff) via compensated accumulation.
DistributedMemory proc_mems(const FeatureMapSpec& spec, std::span<const Pattern> memories,
                            bool with_companion = false);

/// T += phi(xi) (and R likewise); cost independent of how many memories are
/// already stored, and the size of T does not change.
void add_memory_distributed(DistributedMemory& dm, std::span<const double> xi);

/// -(1/beta) * log(max(<phi(g(x)), T>, epsilon_log)).
double energy_approx(const DistributedMemory& dm, const ClipConfig& clip,
                     std::span<const double> x,
                     Normalization normalization = Normalization::Identity);

/// Gradient of energy_approx, streamed one projection row at a time; the
/// full Y_eff x D feature Jacobian is never materialized.  Returns the zero
/// vector when the clip is active (the clipped energy is locally constant).
/// Pass a WorkspaceMeter to record peak scratch words.
Pattern grad_comp(const DistributedMemory& dm, const ClipConfig& clip, std::span<const double> x,
                  Normalization normalization = Normalization::Identity,
                  WorkspaceMeter* meter = nullptr);

/// Softmax-form approximate gradient for the L2 energy:
///   x - (phi(x) R) / max(<phi(x), T>, epsilon_log).
/// Requires the companion store; identity normalization only.
Pattern grad_l2_specialized(const DistributedMemory& dm, const ClipConfig& clip,
                            std::span<const double> x);

/// Fixed binary layout (all fields little-endian):
///   magic "DRDAM1", D u32, Y u32, kind u8, beta f64, seed u64,
///   orthogonal u8, K u64, with_companion u8,
/// followed by feature_len() f64 for T and, when present, feature_len()*D
/// f64 for R.  The serialized size depends only on the spec and the
/// companion flag, never on K.
void save_distributed(const DistributedMemory& dm, std::ostream& out);
DistributedMemory load_distributed(std::istream& in);
void save_distributed_file(const DistributedMemory& dm, const std::string& path);
DistributedMemory load_distributed_file(const std::string& path);

} // namespace drdam
