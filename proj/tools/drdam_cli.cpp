#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "drdam/experiments.hpp"

// Experiment runner.  Each subcommand selects one driver; a JSON config file
// refines the sweep, and --seed/--out/--threads override the corresponding
// config fields.

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t threads = 0;
    bool svg = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON config file");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "master seed (replaces the config's seed list)")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--threads", opts.threads, "worker threads");
    cmd->add_flag("--svg", opts.svg, "emit SVG charts next to the CSV");
}

int run(drdam::Experiment experiment, const CommonOpts& opts) {
    drdam::ExperimentConfig cfg;
    if (!opts.config_path.empty()) cfg = drdam::load_config_file(opts.config_path);
    cfg.experiment = experiment;
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    if (opts.seed_set) cfg.seeds = {opts.seed};
    if (opts.threads != 0) cfg.threads = opts.threads;
    if (opts.svg) cfg.svg = true;
    cfg.validate();

    const drdam::ExperimentResult result = drdam::run_experiment(cfg);
    drdam::write_outputs(cfg, result);
    std::fprintf(stderr, "%s: %zu metric rows -> %s/%s.csv\n", to_string(cfg.experiment),
                 result.rows.size(), cfg.out_dir.c_str(), to_string(cfg.experiment));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dense associative memory: exact and distributed representations"};
    app.require_subcommand(1);

    const std::pair<const char*, drdam::Experiment> kCommands[] = {
        {"kernel-err", drdam::Experiment::KernelErr},
        {"energy-grad-err", drdam::Experiment::EnergyGradErr},
        {"retrieve", drdam::Experiment::Retrieval},
        {"image-complete", drdam::Experiment::ImageComplete},
        {"ablate-basis", drdam::Experiment::BasisAblation},
        {"capacity-sweep", drdam::Experiment::CapacitySweep},
        {"bound-overlay", drdam::Experiment::BoundOverlay},
    };

    CommonOpts opts[std::size(kCommands)];
    for (std::size_t i = 0; i < std::size(kCommands); ++i) {
        CLI::App* cmd = app.add_subcommand(kCommands[i].first);
        add_common(cmd, opts[i]);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (std::size_t i = 0; i < std::size(kCommands); ++i)
            if (app.got_subcommand(kCommands[i].first)) return run(kCommands[i].second, opts[i]);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
