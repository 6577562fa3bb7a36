#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "drdam/dynamics.hpp"
#include "drdam/io.hpp"

// Experiment drivers.  Every run is a pure function of (config, master seed):
// per-cell seeds are derived from the master seed and the cell coordinates,
// so results are independent of scheduling, and re-running a config emits
// byte-identical CSV.

namespace drdam {

enum class Experiment : std::uint8_t {
    KernelErr,
    EnergyGradErr,
    Retrieval,
    ImageComplete,
    BasisAblation,
    CapacitySweep,
    BoundOverlay,
};

const char* to_string(Experiment e);
Experiment experiment_from_string(const std::string& name);

struct ImageTaskConfig {
    std::size_t count = 20;
    std::size_t width = 32;
    std::size_t height = 32;
    std::size_t channels = 3;
    double occlusion_fraction = 0.4;
    std::vector<std::string> paths; ///< external pixmaps; synthetic when empty
    bool trace = true;              ///< per-image energy trace CSVs
    bool write_images = true;
};

struct BoundConfig {
    double c2 = 0.5;
    std::size_t calibration_pairs = 2000;
    std::size_t instances = 20;
    bool overlay = false; ///< add tuned-step bound rows to energy-grad-err
};

struct ExperimentConfig {
    Experiment experiment = Experiment::EnergyGradErr;
    std::vector<double> betas = {1.0, 10.0, 30.0};
    std::vector<std::size_t> dims = {16, 100};
    std::vector<std::size_t> memory_counts = {50};
    std::vector<std::size_t> feature_counts = {256, 512, 1024, 2048, 4096, 8192, 16384};
    std::vector<std::string> query_classes = {"at", "near", "random"};
    std::size_t queries = 50;
    double flip_fraction = 0.1;
    std::vector<std::uint64_t> seeds = {1};
    BasisKind basis = BasisKind::SinCos;
    bool orthogonal = false;
    double clip_epsilon = 1e-12;
    GradPath grad_path = GradPath::SpecializedL2;
    DescentConfig descent;
    ImageTaskConfig image;
    BoundConfig bound;
    std::string patterns_csv; ///< optional external dataset (one pattern per row)
    std::string out_dir = "out";
    std::size_t threads = 1;
    bool svg = false;

    void validate() const;
};

/// Parses a strict-schema JSON document; unknown keys are rejected by name.
ExperimentConfig parse_config_json(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

struct ExperimentResult {
    std::vector<io::MetricRow> rows;
    std::vector<std::string> notes; ///< protocol metadata, written alongside the CSV
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

ExperimentResult run_kernel_err(const ExperimentConfig& cfg);
ExperimentResult run_energy_grad_err(const ExperimentConfig& cfg);
ExperimentResult run_retrieval(const ExperimentConfig& cfg);
ExperimentResult run_image_complete(const ExperimentConfig& cfg);
ExperimentResult run_basis_ablation(const ExperimentConfig& cfg);
ExperimentResult run_capacity_sweep(const ExperimentConfig& cfg);
ExperimentResult run_bound_overlay(const ExperimentConfig& cfg);

/// Writes <experiment>.csv, <experiment>_meta.txt and (optionally) SVG charts
/// into cfg.out_dir, creating the directory if needed.
void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result);

namespace detail {
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b);
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);
} // namespace detail

} // namespace drdam
