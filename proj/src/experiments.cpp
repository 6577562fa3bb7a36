#include "drdam/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "json.hpp"

#include "drdam/counter_rng.hpp"
#include "drdam/datasets.hpp"
#include "drdam/metrics.hpp"

namespace drdam {

using nlohmann::json;

const char* to_string(Experiment e) {
    switch (e) {
    case Experiment::KernelErr: return "kernel-err";
    case Experiment::EnergyGradErr: return "energy-grad-err";
    case Experiment::Retrieval: return "retrieve";
    case Experiment::ImageComplete: return "image-complete";
    case Experiment::BasisAblation: return "ablate-basis";
    case Experiment::CapacitySweep: return "capacity-sweep";
    case Experiment::BoundOverlay: return "bound-overlay";
    }
    return "?";
}

Experiment experiment_from_string(const std::string& name) {
    static const std::map<std::string, Experiment> kNames = {
        {"kernel-err", Experiment::KernelErr},
        {"energy-grad-err", Experiment::EnergyGradErr},
        {"retrieve", Experiment::Retrieval},
        {"image-complete", Experiment::ImageComplete},
        {"ablate-basis", Experiment::BasisAblation},
        {"capacity-sweep", Experiment::CapacitySweep},
        {"bound-overlay", Experiment::BoundOverlay},
    };
    const auto it = kNames.find(name);
    if (it == kNames.end()) throw std::invalid_argument("unknown experiment: " + name);
    return it->second;
}

void ExperimentConfig::validate() const {
    if (betas.empty() || dims.empty() || memory_counts.empty() || feature_counts.empty())
        throw std::invalid_argument("config: sweep lists must be non-empty");
    for (double b : betas)
        if (!(b > 0.0)) throw std::invalid_argument("config: beta must be positive");
    if (queries < 1) throw std::invalid_argument("config: queries must be >= 1");
    if (!(flip_fraction > 0.0) || !(flip_fraction < 1.0))
        throw std::invalid_argument("config: flip_fraction must lie in (0, 1)");
    if (seeds.empty()) throw std::invalid_argument("config: seeds must be non-empty");
    if (!(clip_epsilon > 0.0)) throw std::invalid_argument("config: clip_epsilon must be positive");
    for (const std::string& c : query_classes)
        if (c != "at" && c != "near" && c != "random")
            throw std::invalid_argument("config: unknown query class: " + c);
    if (!(image.occlusion_fraction > 0.0) || !(image.occlusion_fraction < 1.0))
        throw std::invalid_argument("config: occlusion_fraction must lie in (0, 1)");
}

namespace detail {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    return rng::hash4(master, rng::kCell, a, b);
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t count = std::min(threads, n);
    pool.reserve(count);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

} // namespace detail

// --- config parsing ---------------------------------------------------------

namespace {

void reject_unknown(const json& obj, const std::vector<std::string>& keys,
                    const std::string& scope) {
    for (const auto& item : obj.items()) {
        if (std::find(keys.begin(), keys.end(), item.key()) == keys.end())
            throw std::invalid_argument("config: unknown key '" + scope + item.key() + "'");
    }
}

template <class T> std::vector<T> as_list(const json& j, const std::string& key) {
    std::vector<T> out;
    if (j.is_array()) {
        for (const json& v : j) out.push_back(v.get<T>());
    } else {
        out.push_back(j.get<T>());
    }
    if (out.empty()) throw std::invalid_argument("config: '" + key + "' must be non-empty");
    return out;
}

} // namespace

ExperimentConfig parse_config_json(const std::string& text) {
    const json doc = json::parse(text);
    if (!doc.is_object()) throw std::invalid_argument("config: top level must be an object");
    reject_unknown(doc,
                   {"experiment", "beta", "dim", "memories", "features", "query_classes",
                    "queries", "flip_fraction", "seeds", "basis", "orthogonal", "clip_epsilon",
                    "grad_path", "descent", "image", "bound", "patterns_csv", "out", "threads",
                    "svg"},
                   "");

    ExperimentConfig cfg;
    if (doc.contains("experiment"))
        cfg.experiment = experiment_from_string(doc["experiment"].get<std::string>());
    if (doc.contains("beta")) cfg.betas = as_list<double>(doc["beta"], "beta");
    if (doc.contains("dim")) cfg.dims = as_list<std::size_t>(doc["dim"], "dim");
    if (doc.contains("memories"))
        cfg.memory_counts = as_list<std::size_t>(doc["memories"], "memories");
    if (doc.contains("features"))
        cfg.feature_counts = as_list<std::size_t>(doc["features"], "features");
    if (doc.contains("query_classes"))
        cfg.query_classes = as_list<std::string>(doc["query_classes"], "query_classes");
    if (doc.contains("queries")) cfg.queries = doc["queries"].get<std::size_t>();
    if (doc.contains("flip_fraction")) cfg.flip_fraction = doc["flip_fraction"].get<double>();
    if (doc.contains("seeds")) cfg.seeds = as_list<std::uint64_t>(doc["seeds"], "seeds");
    if (doc.contains("basis")) cfg.basis = basis_from_string(doc["basis"].get<std::string>());
    if (doc.contains("orthogonal")) cfg.orthogonal = doc["orthogonal"].get<bool>();
    if (doc.contains("clip_epsilon")) cfg.clip_epsilon = doc["clip_epsilon"].get<double>();
    if (doc.contains("grad_path")) {
        const std::string p = doc["grad_path"].get<std::string>();
        if (p == "streaming")
            cfg.grad_path = GradPath::Streaming;
        else if (p == "specialized-l2")
            cfg.grad_path = GradPath::SpecializedL2;
        else
            throw std::invalid_argument("config: unknown grad_path: " + p);
    }
    if (doc.contains("descent")) {
        const json& d = doc["descent"];
        reject_unknown(d, {"step_size", "max_steps", "tolerance"}, "descent.");
        if (d.contains("step_size")) cfg.descent.step_size = d["step_size"].get<double>();
        if (d.contains("max_steps")) cfg.descent.max_steps = d["max_steps"].get<std::size_t>();
        if (d.contains("tolerance")) cfg.descent.tolerance = d["tolerance"].get<double>();
    }
    if (doc.contains("image")) {
        const json& im = doc["image"];
        reject_unknown(im,
                       {"count", "width", "height", "channels", "occlusion_fraction", "paths",
                        "trace", "write_images"},
                       "image.");
        if (im.contains("count")) cfg.image.count = im["count"].get<std::size_t>();
        if (im.contains("width")) cfg.image.width = im["width"].get<std::size_t>();
        if (im.contains("height")) cfg.image.height = im["height"].get<std::size_t>();
        if (im.contains("channels")) cfg.image.channels = im["channels"].get<std::size_t>();
        if (im.contains("occlusion_fraction"))
            cfg.image.occlusion_fraction = im["occlusion_fraction"].get<double>();
        if (im.contains("paths")) cfg.image.paths = im["paths"].get<std::vector<std::string>>();
        if (im.contains("trace")) cfg.image.trace = im["trace"].get<bool>();
        if (im.contains("write_images")) cfg.image.write_images = im["write_images"].get<bool>();
    }
    if (doc.contains("bound")) {
        const json& b = doc["bound"];
        reject_unknown(b, {"c2", "calibration_pairs", "instances", "overlay"}, "bound.");
        if (b.contains("c2")) cfg.bound.c2 = b["c2"].get<double>();
        if (b.contains("calibration_pairs"))
            cfg.bound.calibration_pairs = b["calibration_pairs"].get<std::size_t>();
        if (b.contains("instances")) cfg.bound.instances = b["instances"].get<std::size_t>();
        if (b.contains("overlay")) cfg.bound.overlay = b["overlay"].get<bool>();
    }
    if (doc.contains("patterns_csv")) cfg.patterns_csv = doc["patterns_csv"].get<std::string>();
    if (doc.contains("out")) cfg.out_dir = doc["out"].get<std::string>();
    if (doc.contains("threads")) cfg.threads = doc["threads"].get<std::size_t>();
    if (doc.contains("svg")) cfg.svg = doc["svg"].get<bool>();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_json(text);
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json doc;
    doc["experiment"] = to_string(cfg.experiment);
    doc["beta"] = cfg.betas;
    doc["dim"] = cfg.dims;
    doc["memories"] = cfg.memory_counts;
    doc["features"] = cfg.feature_counts;
    doc["query_classes"] = cfg.query_classes;
    doc["queries"] = cfg.queries;
    doc["flip_fraction"] = cfg.flip_fraction;
    doc["seeds"] = cfg.seeds;
    doc["basis"] = to_string(cfg.basis);
    doc["orthogonal"] = cfg.orthogonal;
    doc["clip_epsilon"] = cfg.clip_epsilon;
    doc["grad_path"] = to_string(cfg.grad_path);
    doc["descent"] = {{"step_size", cfg.descent.step_size},
                      {"max_steps", cfg.descent.max_steps},
                      {"tolerance", cfg.descent.tolerance}};
    doc["image"] = {{"count", cfg.image.count},
                    {"width", cfg.image.width},
                    {"height", cfg.image.height},
                    {"channels", cfg.image.channels},
                    {"occlusion_fraction", cfg.image.occlusion_fraction},
                    {"paths", cfg.image.paths},
                    {"trace", cfg.image.trace},
                    {"write_images", cfg.image.write_images}};
    doc["bound"] = {{"c2", cfg.bound.c2},
                    {"calibration_pairs", cfg.bound.calibration_pairs},
                    {"instances", cfg.bound.instances},
                    {"overlay", cfg.bound.overlay}};
    doc["patterns_csv"] = cfg.patterns_csv;
    doc["out"] = cfg.out_dir;
    doc["threads"] = cfg.threads;
    doc["svg"] = cfg.svg;
    return doc.dump(2);
}

// --- shared driver machinery -------------------------------------------------

namespace {

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stderr_of_mean(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s2 = 0.0;
    for (double x : v) s2 += (x - m) * (x - m);
    s2 /= static_cast<double>(v.size() - 1);
    return std::sqrt(s2 / static_cast<double>(v.size()));
}

io::MetricRow make_row(const ExperimentConfig& cfg, double beta, std::size_t dim, std::size_t k,
                       std::size_t y, std::string query_class, std::string metric, double value,
                       double se, std::uint64_t seed) {
    if (!std::isfinite(value) || !std::isfinite(se))
        throw std::runtime_error("non-finite metric value for " + metric);
    io::MetricRow r;
    r.experiment = to_string(cfg.experiment);
    r.beta = beta;
    r.dim = dim;
    r.num_memories = k;
    r.num_projections = y;
    r.query_class = std::move(query_class);
    r.metric_name = std::move(metric);
    r.value = value;
    r.stderr_value = se;
    r.seed = seed;
    return r;
}

struct ExactRef {
    std::vector<double> energies;
    std::vector<Pattern> grads;
};

ExactRef exact_reference(const EnergySpec& spec, const MemoryMatrix& mem,
                         std::span<const Pattern> queries) {
    ExactRef ref;
    ref.energies.reserve(queries.size());
    ref.grads.reserve(queries.size());
    for (const Pattern& q : queries) {
        ref.energies.push_back(energy_exact(spec, mem, q));
        ref.grads.push_back(grad_exact(spec, mem, q));
    }
    return ref;
}

struct ApproxEval {
    std::vector<double> energies;
    std::vector<Pattern> grads;
};

ApproxEval approx_reference(const DistributedModel& model, std::span<const Pattern> queries) {
    ApproxEval out;
    out.energies.reserve(queries.size());
    out.grads.reserve(queries.size());
    for (const Pattern& q : queries) {
        out.energies.push_back(model.energy(q));
        out.grads.push_back(model.gradient(q));
    }
    return out;
}

std::vector<double> abs_errors(std::span<const double> a, std::span<const double> b) {
    std::vector<double> e(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) e[i] = std::abs(a[i] - b[i]);
    return e;
}

std::vector<double> grad_errors(std::span<const Pattern> a, std::span<const Pattern> b) {
    std::vector<double> e(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) e[i] = std::sqrt(vec::distance2(a[i], b[i]));
    return e;
}

} // namespace

// --- energy / gradient approximation sweep -----------------------------------

ExperimentResult run_energy_grad_err(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult res;
    res.notes.push_back("gradient path: " + std::string(to_string(cfg.grad_path)));
    res.notes.push_back("random-guess reference queries: stored patterns ('at' class); "
                        "baseline level = per-beta mean across Y, maximum over beta");
    if (cfg.bound.overlay)
        res.notes.push_back(
            "tuned-step bound overlay: C1 estimated per cell as the 99th percentile of "
            "|kernel - estimate|*sqrt(Y/D) over " +
            std::to_string(cfg.bound.calibration_pairs) +
            " calibration pairs drawn from the query/memory distribution; C2 = " +
            io::format_double(cfg.bound.c2));

    const ClipConfig clip{cfg.clip_epsilon};
    for (std::uint64_t seed : cfg.seeds) {
        for (std::size_t dim : cfg.dims) {
            for (std::size_t k : cfg.memory_counts) {
                const std::uint64_t fold = dim * 1315423911ULL + k;
                const std::vector<Pattern> all =
                    gen_binary_patterns(dim, k + cfg.queries, detail::derive_seed(seed, 1, fold));
                const std::vector<Pattern> stored(all.begin(),
                                                  all.begin() + static_cast<long>(k));
                const std::vector<Pattern> far(all.begin() + static_cast<long>(k), all.end());
                const std::size_t nq = std::min(cfg.queries, k);
                const std::vector<Pattern> at(stored.begin(),
                                              stored.begin() + static_cast<long>(nq));
                const std::vector<Pattern> near =
                    make_near_queries(at, cfg.flip_fraction, detail::derive_seed(seed, 2, fold));
                const std::vector<Pattern> fresh =
                    gen_binary_patterns(dim, nq, detail::derive_seed(seed, 3, fold));
                const MemoryMatrix mem = MemoryMatrix::from(dim, stored);

                const auto class_queries = [&](const std::string& c) -> const std::vector<Pattern>& {
                    if (c == "at") return at;
                    if (c == "near") return near;
                    return far;
                };

                // Exact references per beta (Y plays no role on this side).
                std::vector<std::map<std::string, ExactRef>> exact(cfg.betas.size());
                for (std::size_t bi = 0; bi < cfg.betas.size(); ++bi) {
                    const EnergySpec espec{Similarity::L2, cfg.betas[bi],
                                           Normalization::Identity};
                    for (const std::string& c : cfg.query_classes)
                        exact[bi].emplace(c, exact_reference(espec, mem, class_queries(c)));
                    exact[bi].emplace("baseline-ref", exact_reference(espec, mem, at));
                }

                const std::size_t ny = cfg.feature_counts.size();
                const std::size_t cells = cfg.betas.size() * ny;
                std::vector<std::vector<io::MetricRow>> cell_rows(cells);
                std::vector<double> base_e(cells, 0.0), base_g(cells, 0.0);

                detail::parallel_for(cells, cfg.threads, [&](std::size_t ci) {
                    const std::size_t bi = ci / ny;
                    const std::size_t yi = ci % ny;
                    const double beta = cfg.betas[bi];
                    const std::size_t y = cfg.feature_counts[yi];
                    FeatureMapSpec spec{cfg.basis, y, dim, beta,
                                        detail::derive_seed(seed, 4, fold * 97 + ci),
                                        cfg.orthogonal};
                    const DistributedMemory dm = proc_mems(
                        spec, stored, cfg.grad_path == GradPath::SpecializedL2);
                    const DistributedModel model(dm, clip, cfg.grad_path);

                    auto& rows = cell_rows[ci];
                    for (const std::string& c : cfg.query_classes) {
                        const ApproxEval ae = approx_reference(model, class_queries(c));
                        const ExactRef& ref = exact[bi].at(c);
                        const std::vector<double> ee = abs_errors(ref.energies, ae.energies);
                        const std::vector<double> ge = grad_errors(ref.grads, ae.grads);
                        rows.push_back(make_row(cfg, beta, dim, k, y, c, "mae_energy",
                                                mean_of(ee), stderr_of_mean(ee), seed));
                        rows.push_back(make_row(cfg, beta, dim, k, y, c, "mae_gradient",
                                                mean_of(ge), stderr_of_mean(ge), seed));
                        if (cfg.bound.overlay) {
                            std::vector<double> bounds(ref.energies.size());
                            // Calibrate C1 on (fresh query, stored memory) pairs
                            // through the cell's own feature map.
                            std::vector<Pattern> cx, cy;
                            cx.reserve(cfg.bound.calibration_pairs);
                            cy.reserve(cfg.bound.calibration_pairs);
                            for (std::size_t p = 0; p < cfg.bound.calibration_pairs; ++p) {
                                cx.push_back(fresh[p % fresh.size()]);
                                cy.push_back(stored[(p * 31 + p / fresh.size()) % k]);
                            }
                            const double c1 = calibrate_c1(spec, cx, cy);
                            for (std::size_t b = 0; b < bounds.size(); ++b) {
                                BoundParams bp;
                                bp.c1 = c1;
                                bp.c2 = cfg.bound.c2;
                                bp.beta = beta;
                                bp.num_memories = k;
                                bp.dim = dim;
                                bp.num_projections = y;
                                bp.steps = cfg.descent.max_steps;
                                bp.initial_energy = ref.energies[b];
                                bounds[b] = divergence_bound(bp, BoundKind::TunedStep);
                            }
                            rows.push_back(make_row(cfg, beta, dim, k, y, c, "bound_tuned_step",
                                                    mean_of(bounds), stderr_of_mean(bounds),
                                                    seed));
                        }
                    }

                    // Random-guess baseline: exact energies at stored patterns
                    // vs approximate energies/gradients at fresh random queries.
                    const ApproxEval fresh_eval = approx_reference(model, fresh);
                    const ExactRef& ref = exact[bi].at("baseline-ref");
                    const std::vector<double> be = abs_errors(ref.energies, fresh_eval.energies);
                    const std::vector<double> bg = grad_errors(ref.grads, fresh_eval.grads);
                    base_e[ci] = mean_of(be);
                    base_g[ci] = mean_of(bg);
                    rows.push_back(make_row(cfg, beta, dim, k, y, "baseline", "random_guess_mae",
                                            base_e[ci], stderr_of_mean(be), seed));
                    rows.push_back(make_row(cfg, beta, dim, k, y, "baseline",
                                            "random_guess_grad_mae", base_g[ci],
                                            stderr_of_mean(bg), seed));
                });

                for (auto& rows : cell_rows)
                    res.rows.insert(res.rows.end(), rows.begin(), rows.end());

                // Aggregated baseline level per the stated rule.
                std::vector<std::vector<double>> per_beta_e, per_beta_g;
                for (std::size_t bi = 0; bi < cfg.betas.size(); ++bi) {
                    per_beta_e.emplace_back(base_e.begin() + static_cast<long>(bi * ny),
                                            base_e.begin() + static_cast<long>((bi + 1) * ny));
                    per_beta_g.emplace_back(base_g.begin() + static_cast<long>(bi * ny),
                                            base_g.begin() + static_cast<long>((bi + 1) * ny));
                }
                res.rows.push_back(make_row(cfg, 0.0, dim, k, 0, "baseline",
                                            "random_guess_baseline",
                                            random_guess_level(per_beta_e), 0.0, seed));
                res.rows.push_back(make_row(cfg, 0.0, dim, k, 0, "baseline",
                                            "random_guess_gradient_baseline",
                                            random_guess_level(per_beta_g), 0.0, seed));
            }
        }
    }
    return res;
}

// --- capacity sweep: fixed Y, growing K --------------------------------------

ExperimentResult run_capacity_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.feature_counts.size() != 1)
        throw std::invalid_argument("capacity-sweep: exactly one Y must be configured");
    ExperimentResult res;
    const std::size_t y = cfg.feature_counts.front();
    res.notes.push_back("fixed Y = " + std::to_string(y) +
                        "; per-K query count equals the number of stored patterns");
    const ClipConfig clip{cfg.clip_epsilon};

    for (std::uint64_t seed : cfg.seeds) {
        for (std::size_t dim : cfg.dims) {
            for (double beta : cfg.betas) {
                const EnergySpec espec{Similarity::L2, beta, Normalization::Identity};
                const std::size_t nk = cfg.memory_counts.size();
                std::vector<std::vector<io::MetricRow>> cell_rows(nk);
                detail::parallel_for(nk, cfg.threads, [&](std::size_t ki) {
                    const std::size_t k = cfg.memory_counts[ki];
                    const std::uint64_t fold = dim * 1315423911ULL + k * 31 + ki;
                    const std::vector<Pattern> all = gen_binary_patterns(
                        dim, 2 * k, detail::derive_seed(seed, 11, fold));
                    const std::vector<Pattern> stored(all.begin(),
                                                      all.begin() + static_cast<long>(k));
                    const std::vector<Pattern> far(all.begin() + static_cast<long>(k), all.end());
                    const std::vector<Pattern> near = make_near_queries(
                        stored, cfg.flip_fraction, detail::derive_seed(seed, 12, fold));
                    const MemoryMatrix mem = MemoryMatrix::from(dim, stored);

                    FeatureMapSpec spec{cfg.basis, y, dim, beta,
                                        detail::derive_seed(seed, 13, fold), cfg.orthogonal};
                    const DistributedMemory dm =
                        proc_mems(spec, stored, cfg.grad_path == GradPath::SpecializedL2);
                    const DistributedModel model(dm, clip, cfg.grad_path);

                    const auto emit = [&](const std::string& c, std::span<const Pattern> qs) {
                        const ExactRef ref = exact_reference(espec, mem, qs);
                        const ApproxEval ae = approx_reference(model, qs);
                        const std::vector<double> ee = abs_errors(ref.energies, ae.energies);
                        const std::vector<double> ge = grad_errors(ref.grads, ae.grads);
                        cell_rows[ki].push_back(make_row(cfg, beta, dim, k, y, c, "mae_energy",
                                                         mean_of(ee), stderr_of_mean(ee), seed));
                        cell_rows[ki].push_back(make_row(cfg, beta, dim, k, y, c, "mae_gradient",
                                                         mean_of(ge), stderr_of_mean(ge), seed));
                    };
                    for (const std::string& c : cfg.query_classes) {
                        if (c == "at") emit(c, stored);
                        if (c == "near") emit(c, near);
                        if (c == "random") emit(c, far);
                    }
                });
                for (auto& rows : cell_rows)
                    res.rows.insert(res.rows.end(), rows.begin(), rows.end());
            }
        }
    }
    return res;
}

// --- retrieval: full descent under both representations ----------------------

ExperimentResult run_retrieval(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult res;
    res.notes.push_back("gradient path: " + std::string(to_string(cfg.grad_path)));
    res.notes.push_back("descent: step_size " + io::format_double(cfg.descent.step_size) +
                        ", max_steps " + std::to_string(cfg.descent.max_steps) + ", tolerance " +
                        io::format_double(cfg.descent.tolerance));
    const ClipConfig clip{cfg.clip_epsilon};

    for (std::uint64_t seed : cfg.seeds) {
        for (std::size_t dim : cfg.dims) {
            for (std::size_t k : cfg.memory_counts) {
                const std::uint64_t fold = dim * 1315423911ULL + k;
                const std::vector<Pattern> all =
                    gen_binary_patterns(dim, k + cfg.queries, detail::derive_seed(seed, 21, fold));
                const std::vector<Pattern> stored(all.begin(),
                                                  all.begin() + static_cast<long>(k));
                const std::vector<Pattern> far(all.begin() + static_cast<long>(k), all.end());
                const std::size_t nq = std::min(cfg.queries, k);
                const std::vector<Pattern> at(stored.begin(),
                                              stored.begin() + static_cast<long>(nq));
                const std::vector<Pattern> near =
                    make_near_queries(at, cfg.flip_fraction, detail::derive_seed(seed, 22, fold));
                const MemoryMatrix mem = MemoryMatrix::from(dim, stored);

                const std::size_t cells = cfg.betas.size() * cfg.feature_counts.size() *
                                          cfg.query_classes.size();
                std::vector<std::vector<io::MetricRow>> cell_rows(cells);
                detail::parallel_for(cells, cfg.threads, [&](std::size_t ci) {
                    const std::size_t nclass = cfg.query_classes.size();
                    const std::size_t ny = cfg.feature_counts.size();
                    const std::size_t bi = ci / (ny * nclass);
                    const std::size_t yi = (ci / nclass) % ny;
                    const std::string& c = cfg.query_classes[ci % nclass];
                    const double beta = cfg.betas[bi];
                    const std::size_t y = cfg.feature_counts[yi];

                    const std::vector<Pattern>& queries =
                        c == "at" ? at : (c == "near" ? near : far);
                    const EnergySpec espec{Similarity::L2, beta, Normalization::Identity};
                    const ExactModel exact_model(espec, mem);
                    FeatureMapSpec spec{cfg.basis, y, dim, beta,
                                        detail::derive_seed(seed, 23, fold * 97 + bi * ny + yi),
                                        cfg.orthogonal};
                    const DistributedMemory dm =
                        proc_mems(spec, stored, cfg.grad_path == GradPath::SpecializedL2);
                    const DistributedModel approx_model(dm, clip, cfg.grad_path);

                    std::vector<double> hams(queries.size()), steps_e(queries.size()),
                        steps_a(queries.size()), src_ham(queries.size());
                    std::size_t nonconv_e = 0, nonconv_a = 0, zero_count = 0;
                    for (std::size_t q = 0; q < queries.size(); ++q) {
                        const Trajectory te = descend(exact_model, queries[q], cfg.descent);
                        const Trajectory ta = descend(approx_model, queries[q], cfg.descent);
                        hams[q] = hamming_error(te.final_state(), ta.final_state());
                        steps_e[q] = static_cast<double>(te.steps_taken);
                        steps_a[q] = static_cast<double>(ta.steps_taken);
                        if (!te.converged) ++nonconv_e;
                        if (!ta.converged) ++nonconv_a;
                        if (hams[q] == 0.0) ++zero_count;
                        src_ham[q] = (c == "random")
                                         ? 0.0
                                         : hamming_error(te.final_state(), stored[q % k]);
                    }
                    auto& rows = cell_rows[ci];
                    rows.push_back(make_row(cfg, beta, dim, k, y, c, "mean_hamming",
                                            mean_of(hams), stderr_of_mean(hams), seed));
                    rows.push_back(make_row(cfg, beta, dim, k, y, c, "frac_exact_match",
                                            static_cast<double>(zero_count) /
                                                static_cast<double>(queries.size()),
                                            0.0, seed));
                    rows.push_back(make_row(cfg, beta, dim, k, y, c, "mean_steps_exact",
                                            mean_of(steps_e), stderr_of_mean(steps_e), seed));
                    rows.push_back(make_row(cfg, beta, dim, k, y, c, "mean_steps_approx",
                                            mean_of(steps_a), stderr_of_mean(steps_a), seed));
                    rows.push_back(make_row(cfg, beta, dim, k, y, c, "nonconverged_exact",
                                            static_cast<double>(nonconv_e), 0.0, seed));
                    rows.push_back(make_row(cfg, beta, dim, k, y, c, "nonconverged_approx",
                                            static_cast<double>(nonconv_a), 0.0, seed));
                    if (c != "random")
                        rows.push_back(make_row(cfg, beta, dim, k, y, c,
                                                "exact_vs_source_hamming", mean_of(src_ham),
                                                stderr_of_mean(src_ham), seed));
                });
                for (auto& rows : cell_rows)
                    res.rows.insert(res.rows.end(), rows.begin(), rows.end());
            }
        }
    }
    return res;
}

// --- image completion ---------------------------------------------------------

ExperimentResult run_image_complete(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.betas.size() != 1)
        throw std::invalid_argument("image-complete: exactly one beta must be configured");
    ExperimentResult res;
    const double beta = cfg.betas.front();
    const std::uint64_t seed = cfg.seeds.front();
    const ClipConfig clip{cfg.clip_epsilon};

    std::vector<Pixmap> images;
    if (!cfg.image.paths.empty()) {
        for (const std::string& p : cfg.image.paths) images.push_back(io::read_pixmap(p));
        for (const Pixmap& im : images)
            if (im.width != images.front().width || im.height != images.front().height ||
                im.channels != images.front().channels)
                throw ShapeError("image-complete: images disagree in shape");
    } else {
        images = make_synthetic_images(cfg.image.count, cfg.image.width, cfg.image.height,
                                       cfg.image.channels, detail::derive_seed(seed, 31, 0));
    }
    const std::size_t w = images.front().width, h = images.front().height,
                      ch = images.front().channels;
    const std::size_t dim = w * h * ch;
    res.notes.push_back("images: " + std::to_string(images.size()) + " of " + std::to_string(w) +
                        "x" + std::to_string(h) + "x" + std::to_string(ch) +
                        (cfg.image.paths.empty() ? " (synthetic)" : " (external)"));
    res.notes.push_back("occlusion: lower " + io::format_double(cfg.image.occlusion_fraction) +
                        " of rows zeroed; visible pixels clamped throughout the dynamics");
    res.notes.push_back("gradient path: " + std::string(to_string(cfg.grad_path)));
    res.notes.push_back("reference full-scale configuration: beta=60, Y=180000, eta=0.1, "
                        "300 steps at D=12288 (64x64x3)");

    std::vector<Pattern> patterns;
    patterns.reserve(images.size());
    for (const Pixmap& im : images) patterns.push_back(pixmap_to_pattern(im));
    const MemoryMatrix mem = MemoryMatrix::from(dim, patterns);
    const EnergySpec espec{Similarity::L2, beta, Normalization::Identity};
    const ExactModel exact_model(espec, mem);

    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    for (std::size_t y : cfg.feature_counts) {
        FeatureMapSpec spec{cfg.basis, y, dim, beta, detail::derive_seed(seed, 32, y),
                            cfg.orthogonal};
        const DistributedMemory dm =
            proc_mems(spec, patterns, cfg.grad_path == GradPath::SpecializedL2);
        const DistributedModel approx_model(dm, clip, cfg.grad_path);

        std::vector<std::vector<io::MetricRow>> img_rows(images.size());
        std::vector<double> mads(images.size()), l2s(images.size()), hams(images.size());
        std::mutex io_mutex;
        detail::parallel_for(images.size(), cfg.threads, [&](std::size_t i) {
            const OccludedQuery oq =
                occlude_lower(patterns[i], w, h, ch, cfg.image.occlusion_fraction);
            DescentConfig dc = cfg.descent;
            dc.clamp = oq.clamp;
            const Trajectory te = descend(exact_model, oq.query, dc, cfg.image.trace);
            const Trajectory ta = descend(approx_model, oq.query, dc, cfg.image.trace);

            double mad = 0.0;
            for (std::size_t j = 0; j < dim; ++j)
                mad += std::abs(te.final_state()[j] - ta.final_state()[j]);
            mad /= static_cast<double>(dim);
            mads[i] = mad;
            l2s[i] = std::sqrt(vec::distance2(te.final_state(), ta.final_state()));
            hams[i] = hamming_error(te.final_state(), ta.final_state());

            double mad_src = 0.0;
            for (std::size_t j = 0; j < dim; ++j)
                mad_src += std::abs(te.final_state()[j] - patterns[i][j]);
            mad_src /= static_cast<double>(dim);

            const std::string tag = "img" + std::to_string(i);
            auto& rows = img_rows[i];
            rows.push_back(make_row(cfg, beta, dim, images.size(), y, tag,
                                    "pixel_mad_between_models", mad, 0.0, seed));
            rows.push_back(
                make_row(cfg, beta, dim, images.size(), y, tag, "l2_between_models", l2s[i], 0.0, seed));
            rows.push_back(make_row(cfg, beta, dim, images.size(), y, tag,
                                    "hamming_between_models", hams[i], 0.0, seed));
            rows.push_back(make_row(cfg, beta, dim, images.size(), y, tag,
                                    "pixel_mad_exact_vs_original", mad_src, 0.0, seed));
            rows.push_back(make_row(cfg, beta, dim, images.size(), y, tag, "steps_exact",
                                    static_cast<double>(te.steps_taken), 0.0, seed));
            rows.push_back(make_row(cfg, beta, dim, images.size(), y, tag, "steps_approx",
                                    static_cast<double>(ta.steps_taken), 0.0, seed));
            if (!te.converged || !ta.converged)
                rows.push_back(make_row(cfg, beta, dim, images.size(), y, tag, "nonconverged",
                                        (te.converged ? 0.0 : 1.0) + (ta.converged ? 0.0 : 2.0),
                                        0.0, seed));

            std::lock_guard<std::mutex> lock(io_mutex);
            const std::string prefix =
                cfg.out_dir + "/y" + std::to_string(y) + "_" + tag;
            if (cfg.image.write_images) {
                io::write_pixmap(prefix + "_query." + (ch == 1 ? "pgm" : "ppm"),
                                 pattern_to_pixmap(oq.query, w, h, ch));
                io::write_pixmap(prefix + "_exact." + (ch == 1 ? "pgm" : "ppm"),
                                 pattern_to_pixmap(te.final_state(), w, h, ch));
                io::write_pixmap(prefix + "_approx." + (ch == 1 ? "pgm" : "ppm"),
                                 pattern_to_pixmap(ta.final_state(), w, h, ch));
            }
            if (cfg.image.trace) {
                io::write_energy_trace(prefix + "_exact_trace.csv", te);
                io::write_energy_trace(prefix + "_approx_trace.csv", ta);
            }
        });
        for (auto& rows : img_rows) res.rows.insert(res.rows.end(), rows.begin(), rows.end());
        res.rows.push_back(make_row(cfg, beta, dim, images.size(), y, "-",
                                    "mean_pixel_mad_between_models", mean_of(mads),
                                    stderr_of_mean(mads), seed));
        res.rows.push_back(make_row(cfg, beta, dim, images.size(), y, "-",
                                    "mean_l2_between_models", mean_of(l2s), stderr_of_mean(l2s),
                                    seed));
        res.rows.push_back(make_row(cfg, beta, dim, images.size(), y, "-",
                                    "mean_hamming_between_models", mean_of(hams),
                                    stderr_of_mean(hams), seed));
    }
    return res;
}

// --- basis-function ablation ---------------------------------------------------

ExperimentResult run_basis_ablation(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult res;
    res.notes.push_back("winner_kind values: 0=cos 1=sincos 2=exp 3=expexp");
    res.notes.push_back("gradient path: " + std::string(to_string(cfg.grad_path)));
    const ClipConfig clip{cfg.clip_epsilon};
    const std::uint64_t seed = cfg.seeds.front();
    const std::size_t dim = cfg.dims.front();
    const std::size_t k = cfg.memory_counts.front();

    std::vector<Pattern> data;
    if (!cfg.patterns_csv.empty()) {
        data = io::read_patterns_csv(cfg.patterns_csv);
        if (data.empty()) throw std::invalid_argument("ablate-basis: empty dataset");
        // Affine rescale of the raw values into [0, 1/sqrt(D)].
        double lo = data[0][0], hi = data[0][0];
        for (const Pattern& p : data)
            for (double v : p) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        const double target = 1.0 / std::sqrt(static_cast<double>(data[0].size()));
        const double span = hi > lo ? hi - lo : 1.0;
        for (Pattern& p : data)
            for (double& v : p) v = (v - lo) / span * target;
    } else {
        // Bundled surrogate of fixed size, like an external dataset would be.
        constexpr std::size_t kSurrogateSize = 900;
        data = make_ablation_dataset(dim, kSurrogateSize, detail::derive_seed(seed, 41, dim));
    }
    if (data.size() < k + cfg.queries)
        throw std::invalid_argument("ablate-basis: dataset too small for requested K");

    const std::vector<Pattern> stored(data.begin(), data.begin() + static_cast<long>(k));
    const std::vector<Pattern> heldout(data.begin() + static_cast<long>(k),
                                       data.begin() + static_cast<long>(k + cfg.queries));
    const std::size_t d = stored.front().size();
    const MemoryMatrix mem = MemoryMatrix::from(d, stored);

    constexpr BasisKind kKinds[] = {BasisKind::Cos, BasisKind::SinCos, BasisKind::Exp,
                                    BasisKind::ExpExp};
    struct CellKey {
        double beta;
        std::size_t y;
        std::string cls, metric;
        bool operator<(const CellKey& o) const {
            return std::tie(beta, y, cls, metric) < std::tie(o.beta, o.y, o.cls, o.metric);
        }
    };
    std::map<CellKey, std::pair<double, int>> best; // value, kind

    for (double beta : cfg.betas) {
        const EnergySpec espec{Similarity::L2, beta, Normalization::Identity};
        const ExactRef ref_at = exact_reference(espec, mem, stored);
        const ExactRef ref_out = exact_reference(espec, mem, heldout);
        for (std::size_t y : cfg.feature_counts) {
            const std::size_t nk = 4;
            std::vector<std::vector<io::MetricRow>> kind_rows(nk);
            detail::parallel_for(nk, cfg.threads, [&](std::size_t kidx) {
                const BasisKind kind = kKinds[kidx];
                FeatureMapSpec spec{kind, y, d, beta,
                                    detail::derive_seed(seed, 42, y * 8 + kidx), cfg.orthogonal};
                const DistributedMemory dm =
                    proc_mems(spec, stored, cfg.grad_path == GradPath::SpecializedL2);
                const DistributedModel model(dm, clip, cfg.grad_path);
                const auto emit = [&](const std::string& cls, std::span<const Pattern> qs,
                                      const ExactRef& ref) {
                    const ApproxEval ae = approx_reference(model, qs);
                    const std::vector<double> ee = abs_errors(ref.energies, ae.energies);
                    const std::vector<double> ge = grad_errors(ref.grads, ae.grads);
                    auto& rows = kind_rows[kidx];
                    io::MetricRow re = make_row(cfg, beta, d, k, y, cls,
                                                std::string("mae_energy_") + to_string(kind),
                                                mean_of(ee), stderr_of_mean(ee), seed);
                    io::MetricRow rg = make_row(cfg, beta, d, k, y, cls,
                                                std::string("mae_gradient_") + to_string(kind),
                                                mean_of(ge), stderr_of_mean(ge), seed);
                    rows.push_back(re);
                    rows.push_back(rg);
                };
                emit("at", stored, ref_at);
                emit("heldout", heldout, ref_out);
            });
            for (std::size_t kidx = 0; kidx < nk; ++kidx) {
                for (const io::MetricRow& r : kind_rows[kidx]) {
                    res.rows.push_back(r);
                    const std::string metric =
                        r.metric_name.substr(0, r.metric_name.rfind('_'));
                    const CellKey key{r.beta, r.num_projections, r.query_class, metric};
                    const auto it = best.find(key);
                    if (it == best.end() || r.value < it->second.first)
                        best[key] = {r.value, static_cast<int>(kidx)};
                }
            }
        }
    }
    for (const auto& [key, win] : best)
        res.rows.push_back(make_row(cfg, key.beta, d, k, key.y, key.cls,
                                    "winner_" + key.metric, static_cast<double>(win.second), 0.0,
                                    seed));
    return res;
}

// --- kernel approximation error ------------------------------------------------

ExperimentResult run_kernel_err(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult res;
    res.notes.push_back("pairs drawn uniformly from [0, 1/sqrt(D)]^D; one estimate per seed in "
                        "the configured ensemble");
    if (cfg.orthogonal)
        res.notes.push_back("orthogonal mode: per-pair variance compared against iid features "
                            "over the seed ensemble");

    for (std::size_t dim : cfg.dims) {
        const double hi = 1.0 / std::sqrt(static_cast<double>(dim));
        const std::size_t npairs = cfg.queries;
        std::vector<Pattern> xs(npairs, Pattern(dim)), ys(npairs, Pattern(dim));
        for (std::size_t p = 0; p < npairs; ++p)
            for (std::size_t j = 0; j < dim; ++j) {
                xs[p][j] = hi * rng::uniform(cfg.seeds.front(), rng::kInstance, 2 * p, j);
                ys[p][j] = hi * rng::uniform(cfg.seeds.front(), rng::kInstance, 2 * p + 1, j);
            }

        for (double beta : cfg.betas) {
            std::vector<double> truth(npairs);
            for (std::size_t p = 0; p < npairs; ++p)
                truth[p] = std::exp(-0.5 * beta * vec::distance2(xs[p], ys[p]));

            std::vector<double> rms_per_y;
            const std::size_t ny = cfg.feature_counts.size();
            std::vector<std::vector<io::MetricRow>> cell_rows(ny);
            std::vector<double> rms_store(ny, 0.0);
            detail::parallel_for(ny, cfg.threads, [&](std::size_t yi) {
                const std::size_t y = cfg.feature_counts[yi];
                std::vector<double> abs_err;
                abs_err.reserve(npairs * cfg.seeds.size());
                double sq = 0.0;
                // Per-pair estimate collections for the variance comparison.
                std::vector<std::vector<double>> est_orth(npairs), est_iid(npairs);
                for (std::uint64_t s : cfg.seeds) {
                    FeatureMapSpec spec{cfg.basis, y, dim, beta,
                                        detail::derive_seed(s, 51, dim * 131 + y),
                                        cfg.orthogonal};
                    const FeatureEvaluator ev(spec, true);
                    FeatureMapSpec spec_iid = spec;
                    spec_iid.orthogonal = false;
                    const FeatureEvaluator ev_iid(spec_iid, true);
                    std::vector<double> fx, fy;
                    for (std::size_t p = 0; p < npairs; ++p) {
                        ev.features(xs[p], fx);
                        ev.features(ys[p], fy);
                        const double est = vec::dot(fx, fy);
                        const double err = std::abs(truth[p] - est);
                        abs_err.push_back(err);
                        sq += err * err;
                        if (cfg.orthogonal) {
                            est_orth[p].push_back(est);
                            ev_iid.features(xs[p], fx);
                            ev_iid.features(ys[p], fy);
                            est_iid[p].push_back(vec::dot(fx, fy));
                        }
                    }
                }
                const double rms = std::sqrt(sq / static_cast<double>(abs_err.size()));
                rms_store[yi] = rms;
                auto& rows = cell_rows[yi];
                rows.push_back(make_row(cfg, beta, dim, 0, y, "-", "kernel_mae",
                                        mean_of(abs_err), stderr_of_mean(abs_err),
                                        cfg.seeds.front()));
                rows.push_back(
                    make_row(cfg, beta, dim, 0, y, "-", "kernel_rms", rms, 0.0, cfg.seeds.front()));
                if (cfg.orthogonal && cfg.seeds.size() >= 2) {
                    std::size_t wins = 0;
                    double ratio_sum = 0.0;
                    for (std::size_t p = 0; p < npairs; ++p) {
                        const double vo = stderr_of_mean(est_orth[p]) * stderr_of_mean(est_orth[p]) *
                                          static_cast<double>(est_orth[p].size());
                        const double vi = stderr_of_mean(est_iid[p]) * stderr_of_mean(est_iid[p]) *
                                          static_cast<double>(est_iid[p].size());
                        if (vo <= vi) ++wins;
                        ratio_sum += vi > 0.0 ? vo / vi : 1.0;
                    }
                    rows.push_back(make_row(cfg, beta, dim, 0, y, "-", "orth_var_win_fraction",
                                            static_cast<double>(wins) /
                                                static_cast<double>(npairs),
                                            0.0, cfg.seeds.front()));
                    rows.push_back(make_row(cfg, beta, dim, 0, y, "-", "orth_var_ratio_mean",
                                            ratio_sum / static_cast<double>(npairs), 0.0,
                                            cfg.seeds.front()));
                }
            });
            for (auto& rows : cell_rows) res.rows.insert(res.rows.end(), rows.begin(), rows.end());

            // Log-log slope of RMS error against Y.
            if (ny >= 2) {
                double sx = 0, sy = 0, sxx = 0, sxy = 0;
                for (std::size_t yi = 0; yi < ny; ++yi) {
                    const double lx = std::log(static_cast<double>(cfg.feature_counts[yi]));
                    const double ly = std::log(rms_store[yi]);
                    sx += lx;
                    sy += ly;
                    sxx += lx * lx;
                    sxy += lx * ly;
                }
                const double n = static_cast<double>(ny);
                const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
                res.rows.push_back(make_row(cfg, beta, dim, 0, 0, "-", "rms_loglog_slope", slope,
                                            0.0, cfg.seeds.front()));
            }
        }
    }
    return res;
}

// --- divergence bound overlay ---------------------------------------------------

ExperimentResult run_bound_overlay(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult res;
    res.notes.push_back("eta per instance from the tuned-step choice with C2 = " +
                        io::format_double(cfg.bound.c2) + "; trajectories run exactly L = " +
                        std::to_string(cfg.descent.max_steps) + " steps");
    res.notes.push_back("C1: 99th percentile of |kernel - estimate|*sqrt(Y/D) over " +
                        std::to_string(cfg.bound.calibration_pairs) + " uniform box pairs");
    res.notes.push_back("approximate gradient: specialized-l2 (companion store)");
    const ClipConfig clip{cfg.clip_epsilon};
    const std::uint64_t seed = cfg.seeds.front();

    for (std::size_t dim : cfg.dims) {
        for (std::size_t k : cfg.memory_counts) {
            for (double beta : cfg.betas) {
                for (std::size_t y : cfg.feature_counts) {
                    FeatureMapSpec spec{cfg.basis, y, dim, beta,
                                        detail::derive_seed(seed, 61, dim * 131 + y),
                                        cfg.orthogonal};

                    // Calibration pairs: uniform in the box.
                    const double hi = 1.0 / std::sqrt(static_cast<double>(dim));
                    std::vector<Pattern> cx(cfg.bound.calibration_pairs, Pattern(dim)),
                        cy(cfg.bound.calibration_pairs, Pattern(dim));
                    for (std::size_t p = 0; p < cfg.bound.calibration_pairs; ++p)
                        for (std::size_t j = 0; j < dim; ++j) {
                            cx[p][j] = hi * rng::uniform(seed, rng::kInstance, 2 * p, j);
                            cy[p][j] = hi * rng::uniform(seed, rng::kInstance, 2 * p + 1, j);
                        }
                    const double c1 = calibrate_c1(spec, cx, cy);

                    BoundParams bp;
                    bp.c1 = c1;
                    bp.c2 = cfg.bound.c2;
                    bp.beta = beta;
                    bp.num_memories = k;
                    bp.dim = dim;
                    bp.num_projections = y;
                    bp.steps = cfg.descent.max_steps;
                    const double eta = tuned_step_size(bp);
                    bp.step_size = eta;

                    std::vector<double> divs(cfg.bound.instances), b_thm(cfg.bound.instances),
                        b_cor(cfg.bound.instances);
                    std::size_t satisfied = 0;
                    for (std::size_t inst = 0; inst < cfg.bound.instances; ++inst) {
                        const std::uint64_t iseed = detail::derive_seed(seed, 62, inst);
                        const std::vector<Pattern> stored =
                            gen_binary_patterns(dim, k, iseed);
                        const MemoryMatrix mem = MemoryMatrix::from(dim, stored);
                        const std::vector<Pattern> q0 = gen_binary_patterns(
                            dim, 1, detail::derive_seed(seed, 63, inst));

                        const EnergySpec espec{Similarity::L2, beta, Normalization::Identity};
                        const ExactModel exact_model(espec, mem);
                        const DistributedMemory dm = proc_mems(spec, stored, true);
                        const DistributedModel approx_model(dm, clip, GradPath::SpecializedL2);

                        DescentConfig dc;
                        dc.step_size = eta;
                        dc.max_steps = cfg.descent.max_steps;
                        dc.tolerance = 1e-300; // compare at equal step counts
                        const Trajectory te = descend(exact_model, q0.front(), dc, true);
                        const Trajectory ta = descend(approx_model, q0.front(), dc, true);
                        divs[inst] = divergence(te, ta, cfg.descent.max_steps);

                        bp.initial_energy = energy_exact(espec, mem, q0.front());
                        b_thm[inst] = divergence_bound(bp, BoundKind::GeneralStep);
                        b_cor[inst] = divergence_bound(bp, BoundKind::TunedStep);
                        if (divs[inst] <= b_cor[inst]) ++satisfied;
                    }
                    res.rows.push_back(make_row(cfg, beta, dim, k, y, "-", "c1_estimate", c1,
                                                0.0, seed));
                    res.rows.push_back(
                        make_row(cfg, beta, dim, k, y, "-", "eta", eta, 0.0, seed));
                    res.rows.push_back(make_row(cfg, beta, dim, k, y, "-",
                                                "divergence_measured", mean_of(divs),
                                                stderr_of_mean(divs), seed));
                    res.rows.push_back(make_row(cfg, beta, dim, k, y, "-", "bound_general_step",
                                                mean_of(b_thm), stderr_of_mean(b_thm), seed));
                    res.rows.push_back(make_row(cfg, beta, dim, k, y, "-", "bound_tuned_step",
                                                mean_of(b_cor), stderr_of_mean(b_cor), seed));
                    res.rows.push_back(make_row(cfg, beta, dim, k, y, "-",
                                                "bound_satisfied_fraction",
                                                static_cast<double>(satisfied) /
                                                    static_cast<double>(cfg.bound.instances),
                                                0.0, seed));
                }
            }
        }
    }
    return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.experiment) {
    case Experiment::KernelErr: return run_kernel_err(cfg);
    case Experiment::EnergyGradErr: return run_energy_grad_err(cfg);
    case Experiment::Retrieval: return run_retrieval(cfg);
    case Experiment::ImageComplete: return run_image_complete(cfg);
    case Experiment::BasisAblation: return run_basis_ablation(cfg);
    case Experiment::CapacitySweep: return run_capacity_sweep(cfg);
    case Experiment::BoundOverlay: return run_bound_overlay(cfg);
    }
    throw std::logic_error("unhandled experiment");
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const std::string base = cfg.out_dir + "/" + to_string(cfg.experiment);
    io::write_metric_csv_file(base + ".csv", result.rows);

    std::ofstream meta(base + "_meta.txt", std::ios::binary);
    if (!meta) throw std::runtime_error("cannot open for writing: " + base + "_meta.txt");
    for (const std::string& n : result.notes) meta << n << '\n';
    meta << "config:\n" << config_to_json(cfg) << '\n';

    if (cfg.svg) {
        // One chart per metric family: value against log2(Y), one series per
        // (beta, query_class).
        std::map<std::string, std::map<std::string, io::Series>> charts;
        for (const io::MetricRow& r : result.rows) {
            if (r.num_projections == 0 || r.value <= 0.0) continue;
            const std::string key = r.metric_name;
            const std::string label =
                "b" + io::format_double(r.beta) + "/" + r.query_class;
            io::Series& s = charts[key][label];
            s.label = label;
            s.points.emplace_back(std::log2(static_cast<double>(r.num_projections)),
                                  std::log10(r.value));
        }
        for (auto& [metric, series_map] : charts) {
            std::vector<io::Series> series;
            for (auto& [label, s] : series_map) {
                std::sort(s.points.begin(), s.points.end());
                series.push_back(std::move(s));
            }
            io::write_svg_chart(base + "_" + metric + ".svg",
                                metric + " (log10) vs log2(Y)", series);
        }
    }
}

} // namespace drdam
