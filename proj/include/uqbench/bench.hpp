#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "uqbench/designs.hpp"
#include "uqbench/domain.hpp"
#include "uqbench/errors.hpp"
#include "uqbench/gp.hpp"
#include "uqbench/io.hpp"
#include "uqbench/polychaos.hpp"
#include "uqbench/random.hpp"
#include "uqbench/simulators.hpp"
#include "uqbench/validation.hpp"

namespace uqbench::bench {

namespace fs = std::filesystem;
using io::json;

enum class Method { PceRegression, PceQuadrature, GpSquaredExponential, GpMatern };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::PceRegression: return "pce-reg";
        case Method::PceQuadrature: return "pce-quad";
        case Method::GpSquaredExponential: return "gp-se";
        case Method::GpMatern: return "gp-matern";
    }
    return "unknown";
}

inline Method method_from_string(const std::string& s) {
    for (auto m : {Method::PceRegression, Method::PceQuadrature, Method::GpSquaredExponential, Method::GpMatern}) {
        if (s == to_string(m)) return m;
    }
    throw ConfigError("unknown surrogate method '" + s + "' (expected pce-reg, pce-quad, gp-se or gp-matern)");
}

inline bool is_gp(Method m) { return m == Method::GpSquaredExponential || m == Method::GpMatern; }

inline gp::KernelFamily kernel_of(Method m) {
    return m == Method::GpMatern ? gp::KernelFamily::Matern52 : gp::KernelFamily::SquaredExponential;
}

// Regression needs the Sobol classes, projection the tensor grid; GPs fit anywhere.
inline bool pairs_with(Method m, int design_class) {
    switch (m) {
        case Method::PceRegression: return design_class == 1 || design_class == 2;
        case Method::PceQuadrature: return design_class == 3;
        default: return true;
    }
}

struct SimulatorSource {
    std::string builtin = "toy";
    json params = json::object();
    std::optional<sim::ExternalSpec> external;
    bool cache = true;  // persistent cache for external simulators
};

struct ExperimentConfig {
    std::string name = "experiment";
    InputSpace space = InputSpace::standard(2);
    SimulatorSource simulator;
    std::vector<int> classes{1, 2, 3};
    std::vector<int> orders{1, 2, 3, 4};
    std::vector<Method> methods{Method::PceRegression, Method::PceQuadrature, Method::GpSquaredExponential,
                                Method::GpMatern};
    std::size_t validation_size = 1000;
    std::uint64_t seed = 1;
    fs::path output = "uqbench-results";
    bool scramble = true;
    int max_order = 4;
    std::size_t bootstrap_replicates = 1000;
    std::size_t posterior_samples = 1000;
    int gp_starts = 5;

    void validate() const {
        if (classes.empty()) throw ConfigError("experiment needs at least one design class");
        for (int c : classes) {
            if (c < 1 || c > 3) throw ConfigError("design class must be 1, 2 or 3, got " + std::to_string(c));
        }
        if (orders.empty()) throw ConfigError("experiment needs at least one truncation order");
        for (int p : orders) {
            if (p < 1 || p > max_order) {
                throw ConfigError("truncation order " + std::to_string(p) + " outside 1.." + std::to_string(max_order));
            }
        }
        if (methods.empty()) throw ConfigError("experiment needs at least one surrogate method");
        bool any = false;
        for (auto m : methods) {
            for (int c : classes) any = any || pairs_with(m, c);
        }
        if (!any) throw ConfigError("no requested method pairs with any requested design class");
        if (validation_size < 2) throw ConfigError("validation size must be at least 2");
        if (bootstrap_replicates < 100) throw ConfigError("bootstrap needs at least 100 replicates");
        if (gp_starts < 1) throw ConfigError("GP fitting needs at least one start");
        if (simulator.external && simulator.external->command && space.dim() == 0) {
            throw ConfigError("external simulator needs an input space");
        }
    }
};

inline ExperimentConfig config_from_json(const json& j, const fs::path& base = {}) {
    ExperimentConfig c;
    try {
        c.name = j.value("name", c.name);
        if (j.contains("space")) {
            const auto& s = j.at("space");
            c.space = s.is_string() ? io::input_space_from_json(io::read_json(base / s.get<std::string>()))
                                    : io::input_space_from_json(s);
        } else if (j.contains("dimension")) {
            c.space = InputSpace::standard(j.at("dimension").get<std::size_t>());
        }
        if (j.contains("simulator")) {
            const auto& s = j.at("simulator");
            if (s.is_string()) {
                c.simulator.builtin = s.get<std::string>();
            } else if (s.contains("external")) {
                c.simulator.builtin.clear();
                c.simulator.external = sim::external_spec_from_json(s.at("external"), base);
                c.simulator.cache = s.value("cache", true);
            } else {
                c.simulator.builtin = s.at("builtin").get<std::string>();
                c.simulator.params = s;
                c.simulator.params.erase("builtin");
            }
        }
        if (j.contains("classes")) c.classes = j.at("classes").get<std::vector<int>>();
        c.max_order = j.value("max_order", c.max_order);
        if (j.contains("orders")) c.orders = j.at("orders").get<std::vector<int>>();
        if (j.contains("methods")) {
            c.methods.clear();
            for (const auto& m : j.at("methods")) c.methods.push_back(method_from_string(m.get<std::string>()));
        }
        c.validation_size = j.value("validation_size", c.validation_size);
        c.seed = j.value("seed", c.seed);
        if (j.contains("output")) c.output = base / j.at("output").get<std::string>();
        c.scramble = j.value("scramble", c.scramble);
        c.bootstrap_replicates = j.value("bootstrap_replicates", c.bootstrap_replicates);
        c.posterior_samples = j.value("posterior_samples", c.posterior_samples);
        c.gp_starts = j.value("gp_starts", c.gp_starts);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed experiment config: ") + e.what());
    }
    std::sort(c.classes.begin(), c.classes.end());
    c.classes.erase(std::unique(c.classes.begin(), c.classes.end()), c.classes.end());
    std::sort(c.orders.begin(), c.orders.end());
    c.orders.erase(std::unique(c.orders.begin(), c.orders.end()), c.orders.end());
    if (!c.simulator.external) {
        auto probe = sim::make_builtin(c.simulator.builtin, c.simulator.params);
        if (probe->dim() && probe->dim() != c.space.dim()) {
            throw ConfigError("builtin '" + c.simulator.builtin + "' takes " + std::to_string(probe->dim()) +
                              " inputs but the space has " + std::to_string(c.space.dim()));
        }
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const fs::path& path) {
    return config_from_json(io::read_json(path), path.parent_path());
}

// Config echo for the result file. The output directory is left out so a run
// is reproducible wherever it is written.
inline json to_json(const ExperimentConfig& c) {
    json sim;
    if (c.simulator.external) {
        const auto& e = *c.simulator.external;
        sim = {{"external", {{"name", e.name}, {"timeout", e.timeout_seconds}}}, {"cache", c.simulator.cache}};
        if (e.command) sim["external"]["command"] = *e.command;
        if (e.directory) sim["external"]["directory"] = e.directory->generic_string();
    } else {
        sim = c.simulator.params;
        sim["builtin"] = c.simulator.builtin;
    }
    std::vector<std::string> methods;
    for (auto m : c.methods) methods.emplace_back(to_string(m));
    return {{"name", c.name},
            {"space", io::to_json(c.space)},
            {"simulator", sim},
            {"classes", c.classes},
            {"orders", c.orders},
            {"methods", methods},
            {"validation_size", c.validation_size},
            {"seed", c.seed},
            {"scramble", c.scramble},
            {"max_order", c.max_order},
            {"bootstrap_replicates", c.bootstrap_replicates},
            {"posterior_samples", c.posterior_samples},
            {"gp_starts", c.gp_starts}};
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct Cell {
    Method method = Method::PceRegression;
    int design_class = 1;
    int order = 1;
    std::size_t size = 0;
    bool ok = false;
    std::string error;
    std::vector<std::string> warnings;
    std::optional<validation::MetricsReport> report;
    json model = json::object();  // fitted-model summary
    double seconds = 0.0;
};

struct ClassDesigns {
    int design_class = 1;
    std::vector<int> orders;
    std::vector<std::size_t> sizes;
    bool nested = true;  // every smaller design is an exact prefix of the largest
};

struct Seeds {
    std::uint64_t sobol = 0;
    std::uint64_t validation = 0;
    std::uint64_t reference = 0;
};

struct RunResult {
    ExperimentConfig config;
    std::string simulator_id;
    Seeds seeds;
    validation::Reference reference;
    std::vector<ClassDesigns> designs;
    std::vector<Cell> cells;
    sim::CacheStats simulator;
    double seconds = 0.0;

    // Every cell produced a report.
    bool complete() const {
        return std::all_of(cells.begin(), cells.end(), [](const Cell& c) { return c.ok; });
    }
};

inline Seeds derive_seeds(const ExperimentConfig& c) {
    return {c.scramble ? (split_seed(c.seed, "sobol") | 1u) : 0, split_seed(c.seed, "validation"), split_seed(c.seed, "reference")};
}

// Seed for one (method, class, size) cell.
inline std::uint64_t cell_seed(std::uint64_t master, Method m, int design_class, std::size_t size) {
    return split_seed(split_seed(master, to_string(m), static_cast<std::uint64_t>(design_class)), "size", size);
}

namespace detail {

inline json summarize(const pce::Model& model) {
    return {{"terms", model.basis().size()},
            {"scheme", pce::to_string(model.basis().scheme().kind)},
            {"condition_estimate", model.diagnostics().condition_estimate},
            {"residual_norm", model.diagnostics().residual_norm}};
}

inline json summarize(const gp::Model& model) {
    std::vector<std::string> terms;
    for (const auto& t : model.mean_basis().terms) terms.push_back(gp::MeanBasis::describe(t));
    const auto& l = model.kernel().lengths;
    return {{"family", io::family_name(model.kernel().family)},
            {"lengths", std::vector<double>(l.data(), l.data() + l.size())},
            {"mean_terms", terms},
            {"lambda2", model.lambda2()},
            {"jitter", model.jitter()},
            {"log_likelihood", model.log_likelihood()}};
}

}  // namespace detail

struct Progress {
    virtual ~Progress() = default;
    virtual void cell_done(const Cell&) {}
};

/// Runs every compatible (method, class, order) cell of the experiment.
///
/// Class-1 and class-2 designs are prefixes of one Sobol sequence; class-3
/// designs are Gauss-Legendre grids with p + 1 nodes per input. The simulator
/// runs once per distinct point. Fit failures are recorded in their cell;
/// simulator failures abort the run.
inline RunResult run_experiment(const ExperimentConfig& config, Progress* progress = nullptr) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    RunResult result;
    result.config = config;
    result.seeds = derive_seeds(config);

    std::unique_ptr<sim::Simulator> simulator;
    std::optional<fs::path> cache_file;
    if (config.simulator.external) {
        simulator = std::make_unique<sim::ExternalSimulator>(*config.simulator.external, config.space);
        if (config.simulator.cache) cache_file = sim::cache_file_for(*simulator);
    } else {
        simulator = sim::make_builtin(config.simulator.builtin, config.simulator.params);
    }
    result.simulator_id = simulator->id();
    sim::Evaluator evaluator(*simulator, cache_file);
    const std::size_t n = config.space.dim();

    validation::ValidationSet vset{latin_hypercube(config.validation_size, n, result.seeds.validation), {}};
    vset.outputs = evaluator.evaluate(vset.design);
    validation::Options vopt;
    vopt.bootstrap_replicates = config.bootstrap_replicates;
    vopt.posterior_samples = config.posterior_samples;
    vopt.seed = result.seeds.reference;
    result.reference = validation::simulator_reference(vset, vopt);

    std::size_t sobol_max = 0;
    for (int c : config.classes) {
        if (c == 3) continue;
        for (int p : config.orders) {
            sobol_max = std::max(sobol_max, design_class_size(n, static_cast<std::size_t>(p), c));
        }
    }
    const Design sequence = sobol_max ? sobol(sobol_max, n, result.seeds.sobol) : Design{};

    for (int c : config.classes) {
        ClassDesigns cd{c, config.orders, {}, true};
        for (int p : config.orders) {
            const std::size_t m = design_class_size(n, static_cast<std::size_t>(p), c);
            cd.sizes.push_back(m);
            Design design;
            if (c == 3) {
                design = tensor_grid(std::vector<int>(n, p + 1));
            } else {
                design = sequence.prefix(m);
                // The prefix must match a freshly generated design of that size.
                cd.nested = cd.nested && sobol(m, n, result.seeds.sobol).points == design.points;
            }
            const auto y = evaluator.evaluate(design);

            for (auto method : config.methods) {
                if (!pairs_with(method, c)) continue;
                const auto tc = std::chrono::steady_clock::now();
                Cell cell{method, c, p, m, false, {}, {}, std::nullopt, json::object(), 0.0};
                const std::uint64_t seed = cell_seed(config.seed, method, c, m);
                validation::Options copt = vopt;
                copt.seed = split_seed(seed, "metrics");
                try {
                    validation::MetricsReport report;
                    if (method == Method::PceRegression) {
                        const pce::Basis basis(n, pce::TruncationScheme::total_order(p));
                        const auto model = pce::fit_regression(design, y, basis);
                        cell.warnings = model.diagnostics().warnings;
                        cell.model = detail::summarize(model);
                        report = validation::evaluate_surrogate([&](std::span<const double> z) { return model.predict(z); },
                                                                vset, result.reference);
                    } else if (method == Method::PceQuadrature) {
                        const pce::Basis basis(n, pce::TruncationScheme::tensor_product(p));
                        const auto model = pce::fit_projection(design, y, basis);
                        cell.model = detail::summarize(model);
                        report = validation::evaluate_surrogate([&](std::span<const double> z) { return model.predict(z); },
                                                                vset, result.reference);
                    } else {
                        gp::FitOptions fopt;
                        fopt.starts = config.gp_starts;
                        fopt.seed = split_seed(seed, "fit");
                        const auto model = gp::fit(design, y, kernel_of(method), fopt);
                        cell.warnings = model.warnings();
                        cell.model = detail::summarize(model);
                        report = validation::gp_metric_intervals(model, vset, result.reference, copt);
                    }
                    report.surrogate = to_string(method);
                    cell.report = std::move(report);
                    cell.ok = true;
                } catch (const Error& e) {
                    cell.error = e.what();
                }
                cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - tc).count();
                if (progress) progress->cell_done(cell);
                result.cells.push_back(std::move(cell));
            }
        }
        result.designs.push_back(std::move(cd));
    }
    result.simulator = evaluator.stats();
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Everything except wall-clock time and cache traffic, which vary between runs.
inline json to_json(const RunResult& r) {
    json designs = json::array();
    for (const auto& d : r.designs) {
        designs.push_back({{"class", d.design_class},
                           {"orders", d.orders},
                           {"sizes", d.sizes},
                           {"kind", d.design_class == 3 ? "grid" : "sobol"},
                           {"nested", d.nested}});
    }
    json cells = json::array();
    for (const auto& c : r.cells) {
        json cell = {{"method", to_string(c.method)}, {"class", c.design_class}, {"p", c.order},
                     {"m", c.size},                   {"status", c.ok ? "ok" : "failed"}};
        if (!c.error.empty()) cell["error"] = c.error;
        cell["warnings"] = c.warnings;
        cell["model"] = c.model;
        if (c.report) cell["report"] = io::to_json(*c.report);
        cells.push_back(std::move(cell));
    }
    return {{"config", to_json(r.config)},
            {"seeds", {{"master", r.config.seed}, {"sobol", r.seeds.sobol}, {"validation", r.seeds.validation},
                       {"reference", r.seeds.reference}}},
            {"simulator", {{"id", r.simulator_id}, {"calls", r.simulator.unique_points}}},
            {"reference", io::to_json(r.reference)},
            {"designs", designs},
            {"cells", cells},
            {"complete", r.complete()}};
}

inline json timing_json(const RunResult& r) {
    json cells = json::array();
    for (const auto& c : r.cells) {
        cells.push_back({{"method", to_string(c.method)}, {"class", c.design_class}, {"m", c.size}, {"seconds", c.seconds}});
    }
    return {{"seconds", r.seconds},
            {"simulator",
             {{"unique_points", r.simulator.unique_points},
              {"fresh_evaluations", r.simulator.fresh},
              {"cache_hits", r.simulator.persistent_hits},
              {"invocations", r.simulator.batches}}},
            {"cells", cells}};
}

inline const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{"rmse", "mean", "sd", "exceed2", "exceed3"};
    return names;
}

inline const validation::IntervalEstimate& metric(const validation::MetricsReport& r, const std::string& name) {
    if (name == "rmse") return r.rmse;
    if (name == "mean") return r.mean;
    if (name == "sd") return r.sd;
    if (name == "exceed2") return r.exceed2;
    if (name == "exceed3") return r.exceed3;
    throw ConfigError("unknown metric '" + name + "'");
}

inline const validation::IntervalEstimate* reference_metric(const validation::Reference& r, const std::string& name) {
    if (name == "mean") return &r.mean;
    if (name == "sd") return &r.sd;
    if (name == "exceed2") return &r.exceed2;
    if (name == "exceed3") return &r.exceed3;
    return nullptr;
}

/// Metrics against design size for one class, long format.
inline std::string class_csv(const RunResult& r, int design_class) {
    std::string out = "method,class,p,m,metric,point,lo,hi,interval\n";
    for (const auto& c : r.cells) {
        if (c.design_class != design_class || !c.report) continue;
        for (const auto& name : metric_names()) {
            const auto& e = metric(*c.report, name);
            out += std::string(to_string(c.method)) + ',' + std::to_string(c.design_class) + ',' + std::to_string(c.order) +
                   ',' + std::to_string(c.size) + ',' + name + ',' + io::format_double(e.point) + ',' +
                   io::format_double(e.lo) + ',' + io::format_double(e.hi) + ',' + validation::to_string(e.method) + '\n';
        }
    }
    return out;
}

inline std::string reference_csv(const validation::Reference& r) {
    std::string out = "metric,point,lo,hi\n";
    for (const auto& name : metric_names()) {
        if (const auto* e = reference_metric(r, name)) {
            out += name + ',' + io::format_double(e->point) + ',' + io::format_double(e->lo) + ',' +
                   io::format_double(e->hi) + '\n';
        }
    }
    return out;
}

}  // namespace uqbench::bench
