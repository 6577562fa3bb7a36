#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "drdam/datasets.hpp"
#include "drdam/experiments.hpp"
#include "drdam/io.hpp"
#include "drdam/metrics.hpp"

using namespace drdam;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path temp_dir(const std::string& name) {
    const std::filesystem::path p = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("binary pattern generation: exhaustive, unique, on-alphabet") {
    SUBCASE("D=2, count=4 yields all four vectors") {
        const std::vector<Pattern> all = gen_binary_patterns(2, 4, 77);
        CHECK(all.size() == 4);
        std::set<std::pair<bool, bool>> seen;
        const double hi = 1.0 / std::sqrt(2.0);
        for (const Pattern& p : all) {
            REQUIRE(p.size() == 2);
            for (double v : p) CHECK((v == 0.0 || v == hi));
            seen.insert({p[0] == hi, p[1] == hi});
        }
        CHECK(seen.size() == 4);
        CHECK_THROWS_AS((void)gen_binary_patterns(2, 5, 77), std::invalid_argument);
    }

    SUBCASE("1000 samples at D=100 are unique and deterministic") {
        const std::vector<Pattern> a = gen_binary_patterns(100, 1000, 5);
        const std::vector<Pattern> b = gen_binary_patterns(100, 1000, 5);
        CHECK(a == b);
        std::set<std::vector<double>> seen(a.begin(), a.end());
        CHECK(seen.size() == 1000);
        const double hi = 0.1;
        for (const Pattern& p : a)
            for (double v : p) CHECK((v == 0.0 || v == hi));
        CHECK(gen_binary_patterns(100, 1000, 6) != a);
    }
}

TEST_CASE("near queries flip exactly the requested fraction") {
    const std::vector<Pattern> stored = gen_binary_patterns(100, 20, 9);
    const std::vector<Pattern> near = make_near_queries(stored, 0.1, 10);
    REQUIRE(near.size() == stored.size());
    for (std::size_t q = 0; q < near.size(); ++q)
        CHECK(hamming_error(stored[q], near[q]) == doctest::Approx(10.0 / 100.0));

    SUBCASE("zero flips is the identity") {
        const std::vector<Pattern> same = make_near_queries(stored, 0.004, 11); // rounds to 0
        CHECK(same == stored);
    }

    SUBCASE("toggling is an involution") {
        // The flip positions depend only on (seed, query index), so applying
        // the map twice restores the input.
        const std::vector<Pattern> twice = make_near_queries(near, 0.1, 10);
        CHECK(twice == stored);
    }

    SUBCASE("non-binary input is rejected") {
        CHECK_THROWS_AS((void)make_near_queries({Pattern{0.3, 0.1}}, 0.5, 1), std::domain_error);
    }
}

TEST_CASE("ablation dataset is normalized and deterministic") {
    const std::vector<Pattern> data = make_ablation_dataset(16, 120, 13);
    CHECK(data.size() == 120);
    const double hi = 0.25;
    for (const Pattern& p : data) {
        REQUIRE(p.size() == 16);
        for (double v : p) {
            CHECK(v >= 0.0);
            CHECK(v <= hi);
        }
    }
    CHECK(data == make_ablation_dataset(16, 120, 13));
}

TEST_CASE("pixmap round trip and parse failures") {
    const auto dir = temp_dir("drdam_pixmap_test");
    Pixmap img;
    img.width = 5;
    img.height = 3;
    img.channels = 3;
    img.pixels.resize(img.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        img.pixels[i] = static_cast<std::uint8_t>((i * 37) % 256);

    const std::string path = (dir / "t.ppm").string();
    io::write_pixmap(path, img);
    const Pixmap back = io::read_pixmap(path);
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.channels == img.channels);
    CHECK(back.pixels == img.pixels);

    SUBCASE("grayscale round trip with a comment header") {
        const std::string gpath = (dir / "g.pgm").string();
        std::ofstream out(gpath, std::ios::binary);
        out << "P5\n# a comment\n2 2\n255\n";
        const char data[4] = {0, 50, 100, (char)200};
        out.write(data, 4);
        out.close();
        const Pixmap g = io::read_pixmap(gpath);
        CHECK(g.channels == 1);
        CHECK(g.pixels == std::vector<std::uint8_t>{0, 50, 100, 200});
    }

    SUBCASE("bad magic") {
        const std::string bpath = (dir / "bad.ppm").string();
        std::ofstream out(bpath, std::ios::binary);
        out << "Q6\n2 2\n255\n1234";
        out.close();
        CHECK_THROWS_AS((void)io::read_pixmap(bpath), ParseError);
    }

    SUBCASE("truncated pixels") {
        const std::string tpath = (dir / "short.ppm").string();
        std::ofstream out(tpath, std::ios::binary);
        out << "P6\n2 2\n255\nXY";
        out.close();
        CHECK_THROWS_AS((void)io::read_pixmap(tpath), ParseError);
    }
}

TEST_CASE("pattern CSV round trip is exact") {
    const auto dir = temp_dir("drdam_csv_test");
    const std::vector<Pattern> patterns = {
        {0.1, -1.0 / 3.0, 5e-324, 1.2345678901234567e-5},
        {0.0, 1.0, 2.0, 3.0},
    };
    const std::string path = (dir / "p.csv").string();
    io::write_patterns_csv(path, patterns);
    CHECK(io::read_patterns_csv(path) == patterns);

    std::ofstream bad((dir / "bad.csv").string());
    bad << "1.0,abc\n";
    bad.close();
    CHECK_THROWS((void)io::read_patterns_csv((dir / "bad.csv").string()));
}

TEST_CASE("pixmap/pattern conversion and occlusion") {
    const std::vector<Pixmap> imgs = make_synthetic_images(2, 8, 6, 3, 3);
    CHECK(imgs.size() == 2);
    const Pattern x = pixmap_to_pattern(imgs[0]);
    CHECK(x.size() == 8 * 6 * 3);
    const double hi = 1.0 / std::sqrt(static_cast<double>(x.size()));
    for (double v : x) {
        CHECK(v >= 0.0);
        CHECK(v <= hi);
    }
    const Pixmap back = pattern_to_pixmap(x, 8, 6, 3);
    CHECK(back.pixels == imgs[0].pixels);

    const OccludedQuery oq = occlude_lower(x, 8, 6, 3, 0.5);
    for (std::size_t row = 0; row < 6; ++row) {
        for (std::size_t i = row * 24; i < (row + 1) * 24; ++i) {
            if (row < 3) {
                CHECK(oq.clamp[i]);
                CHECK(oq.query[i] == x[i]);
            } else {
                CHECK_FALSE(oq.clamp[i]);
                CHECK(oq.query[i] == 0.0);
            }
        }
    }
}

TEST_CASE("config parsing is strict about keys") {
    CHECK_THROWS_WITH_AS((void)parse_config_json(R"({"betas": [1.0]})"),
                         doctest::Contains("betas"), std::invalid_argument);
    CHECK_THROWS_WITH_AS((void)parse_config_json(R"({"descent": {"step": 0.1}})"),
                         doctest::Contains("descent.step"), std::invalid_argument);

    const ExperimentConfig cfg = parse_config_json(R"({
        "experiment": "retrieve",
        "beta": 10.0,
        "dim": [16],
        "memories": [4],
        "features": [64, 128],
        "queries": 3,
        "seeds": [7],
        "grad_path": "streaming",
        "descent": {"step_size": 0.2, "max_steps": 50, "tolerance": 1e-9}
    })");
    CHECK(cfg.experiment == Experiment::Retrieval);
    CHECK(cfg.betas == std::vector<double>{10.0});
    CHECK(cfg.grad_path == GradPath::Streaming);
    CHECK(cfg.descent.step_size == 0.2);

    // Round trip through the emitted JSON.
    const ExperimentConfig again = parse_config_json(config_to_json(cfg));
    CHECK(again.betas == cfg.betas);
    CHECK(again.feature_counts == cfg.feature_counts);
    CHECK(again.descent.max_steps == cfg.descent.max_steps);
}

TEST_CASE("experiment reruns emit byte-identical CSV") {
    ExperimentConfig cfg;
    cfg.experiment = Experiment::EnergyGradErr;
    cfg.betas = {1.0, 10.0};
    cfg.dims = {16};
    cfg.memory_counts = {8};
    cfg.feature_counts = {64, 128};
    cfg.queries = 6;
    cfg.seeds = {3};
    cfg.bound.overlay = true;
    cfg.bound.calibration_pairs = 50;

    const auto run_to_string = [&](std::size_t threads) {
        ExperimentConfig c = cfg;
        c.threads = threads;
        const ExperimentResult r = run_energy_grad_err(c);
        std::stringstream ss;
        io::write_metric_csv(ss, r.rows);
        return ss.str();
    };
    const std::string once = run_to_string(1);
    CHECK(once == run_to_string(1));
    CHECK(once == run_to_string(3)); // scheduling must not leak into results
    CHECK(once.find("mae_energy") != std::string::npos);
    CHECK(once.find("random_guess_baseline") != std::string::npos);
    CHECK(once.find("bound_tuned_step") != std::string::npos);
}

TEST_CASE("retrieval driver flags non-convergence instead of failing") {
    ExperimentConfig cfg;
    cfg.experiment = Experiment::Retrieval;
    cfg.betas = {10.0};
    cfg.dims = {16};
    cfg.memory_counts = {4};
    cfg.feature_counts = {64};
    cfg.query_classes = {"near"};
    cfg.queries = 3;
    cfg.seeds = {5};
    cfg.descent.max_steps = 2; // force non-convergence
    const ExperimentResult r = run_retrieval(cfg);
    bool saw_flag = false;
    for (const io::MetricRow& row : r.rows)
        if (row.metric_name == "nonconverged_exact" && row.value > 0) saw_flag = true;
    CHECK(saw_flag);
}

TEST_CASE("capacity sweep holds Y fixed across all rows") {
    ExperimentConfig cfg;
    cfg.experiment = Experiment::CapacitySweep;
    cfg.betas = {10.0};
    cfg.dims = {16};
    cfg.memory_counts = {1, 2, 4};
    cfg.feature_counts = {128};
    cfg.queries = 4;
    cfg.seeds = {2};
    const ExperimentResult r = run_capacity_sweep(cfg);
    REQUIRE(!r.rows.empty());
    for (const io::MetricRow& row : r.rows) CHECK(row.num_projections == 128);

    ExperimentConfig two = cfg;
    two.feature_counts = {64, 128};
    CHECK_THROWS_AS((void)run_capacity_sweep(two), std::invalid_argument);
}

TEST_CASE("basis ablation emits per-kind errors and winners") {
    ExperimentConfig cfg;
    cfg.experiment = Experiment::BasisAblation;
    cfg.betas = {1.0, 10.0};
    cfg.dims = {16};
    cfg.memory_counts = {12};
    cfg.feature_counts = {128};
    cfg.queries = 8;
    cfg.seeds = {4};
    const ExperimentResult r = run_basis_ablation(cfg);
    std::size_t winners = 0, errors = 0;
    for (const io::MetricRow& row : r.rows) {
        if (row.metric_name.rfind("winner_", 0) == 0) {
            ++winners;
            CHECK(row.value >= 0.0);
            CHECK(row.value <= 3.0);
        }
        if (row.metric_name.rfind("mae_", 0) == 0) ++errors;
    }
    CHECK(winners == 2 /*betas*/ * 1 /*Y*/ * 2 /*classes*/ * 2 /*metrics*/);
    CHECK(errors == 2 * 1 * 2 * 2 * 4 /*kinds*/);

    ExperimentConfig starved = cfg;
    starved.memory_counts = {600};
    starved.queries = 400;
    CHECK_THROWS_AS((void)run_basis_ablation(starved), std::invalid_argument);
}

TEST_CASE("image completion clamps visible pixels bitwise and writes artifacts") {
    const auto dir = temp_dir("drdam_image_test");
    ExperimentConfig cfg;
    cfg.experiment = Experiment::ImageComplete;
    cfg.betas = {40.0};
    cfg.feature_counts = {128};
    cfg.seeds = {6};
    cfg.image.count = 3;
    cfg.image.width = 8;
    cfg.image.height = 8;
    cfg.image.channels = 1;
    cfg.image.occlusion_fraction = 0.25;
    cfg.descent.max_steps = 60;
    cfg.out_dir = dir.string();
    const ExperimentResult r = run_image_complete(cfg);
    write_outputs(cfg, r);

    CHECK(std::filesystem::exists(dir / "image-complete.csv"));
    CHECK(std::filesystem::exists(dir / "y128_img0_exact.pgm"));
    CHECK(std::filesystem::exists(dir / "y128_img0_approx.pgm"));
    CHECK(std::filesystem::exists(dir / "y128_img0_exact_trace.csv"));

    // Clamped (visible) region of the outputs equals the query bit for bit;
    // the trace CSV has the "step,energy" schema.
    const std::vector<Pixmap> imgs = make_synthetic_images(
        3, 8, 8, 1, detail::derive_seed(6, 31, 0));
    const Pattern original = pixmap_to_pattern(imgs[0]);
    const OccludedQuery oq = occlude_lower(original, 8, 8, 1, 0.25);
    const Pixmap exact_out = io::read_pixmap((dir / "y128_img0_exact.pgm").string());
    const Pixmap query_out = io::read_pixmap((dir / "y128_img0_query.pgm").string());
    for (std::size_t i = 0; i < oq.clamp.size(); ++i)
        if (oq.clamp[i]) CHECK(exact_out.pixels[i] == query_out.pixels[i]);

    const std::string trace = slurp((dir / "y128_img0_exact_trace.csv").string());
    CHECK(trace.rfind("step,energy\n", 0) == 0);

    std::filesystem::remove_all(dir);
}

TEST_CASE("kernel-err driver emits slope rows") {
    ExperimentConfig cfg;
    cfg.experiment = Experiment::KernelErr;
    cfg.betas = {1.0};
    cfg.dims = {8};
    cfg.feature_counts = {64, 128, 256};
    cfg.queries = 40; // pair count
    cfg.seeds = {1, 2, 3, 4};
    const ExperimentResult r = run_kernel_err(cfg);
    bool saw_slope = false;
    for (const io::MetricRow& row : r.rows)
        if (row.metric_name == "rms_loglog_slope") {
            saw_slope = true;
            CHECK(row.value < -0.3);
            CHECK(row.value > -0.7);
        }
    CHECK(saw_slope);
}

TEST_CASE("bound-overlay driver reports satisfied bounds on toy sizes") {
    ExperimentConfig cfg;
    cfg.experiment = Experiment::BoundOverlay;
    cfg.betas = {2.0};
    cfg.dims = {8};
    cfg.memory_counts = {4};
    cfg.feature_counts = {256};
    cfg.seeds = {8};
    cfg.bound.instances = 5;
    cfg.bound.calibration_pairs = 200;
    cfg.descent.max_steps = 5;
    const ExperimentResult r = run_bound_overlay(cfg);
    double satisfied = -1.0;
    for (const io::MetricRow& row : r.rows)
        if (row.metric_name == "bound_satisfied_fraction") satisfied = row.value;
    CHECK(satisfied == 1.0);
}
