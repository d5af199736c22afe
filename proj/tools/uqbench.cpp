// uqbench command-line interface.
//
//   uqbench design   --kind sobol|lhs|grid --m M --n N --out design.csv
//   uqbench fit      --method pce-reg|pce-quad|gp-se|gp-matern --design d.csv --outputs y.csv --out model.json
//   uqbench predict  --model model.json --design probes.csv --out predictions.csv
//   uqbench validate --design v.csv --outputs y.csv (--model model.json | --predictions p.csv) --out report.json
//   uqbench bench    --config experiment.json
//
// Exit status: 0 on success, 1 when a benchmark finished with failed cells,
// 2 on errors.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "uqbench/bench.hpp"
#include "uqbench/designs.hpp"
#include "uqbench/gp.hpp"
#include "uqbench/io.hpp"
#include "uqbench/polychaos.hpp"
#include "uqbench/report.hpp"
#include "uqbench/validation.hpp"

namespace {

using namespace uqbench;
namespace fs = std::filesystem;

struct Global {
    std::optional<std::uint64_t> seed;
};

Design load_design(const std::string& path, const std::string& space) {
    if (space.empty()) return io::read_design(path);
    return io::read_native_design(path, io::input_space_from_json(io::read_json(space)));
}

// ---------------------------------------------------------------------------

struct DesignArgs {
    std::string kind;
    std::size_t m = 0;
    std::size_t n = 0;
    std::vector<int> orders;
    std::string space;
    std::string out;
};

int run_design(const DesignArgs& a, const Global& g) {
    const std::uint64_t seed = g.seed.value_or(0);
    Design d;
    if (a.kind == "sobol") {
        d = sobol(a.m, a.n, seed);
    } else if (a.kind == "lhs") {
        d = latin_hypercube(a.m, a.n, seed);
    } else {
        std::vector<int> orders = a.orders;
        if (orders.empty()) {
            const auto k = static_cast<int>(std::lround(std::pow(static_cast<double>(a.m), 1.0 / static_cast<double>(a.n))));
            if (k < 1 || ipow(static_cast<std::size_t>(k), a.n) != a.m) {
                throw ConfigError("grid size " + std::to_string(a.m) + " is not a perfect " + std::to_string(a.n) +
                                  "-th power; pass --orders");
            }
            orders.assign(a.n, k);
        } else if (orders.size() == 1) {
            orders.assign(a.n, orders.front());
        } else if (orders.size() != a.n) {
            throw ConfigError("--orders has " + std::to_string(orders.size()) + " entries for n = " + std::to_string(a.n));
        }
        d = tensor_grid(std::span<const int>(orders));
    }
    if (a.space.empty()) {
        io::write_design(a.out, d);
    } else {
        const auto space = io::input_space_from_json(io::read_json(a.space));
        if (space.dim() != d.dim()) throw ConfigError("input space dimension does not match --n");
        io::write_text(a.out, io::native_design_csv(d, space));
    }
    std::cerr << "wrote " << d.size() << " points to " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct FitArgs {
    std::string method;
    int p = -1;
    std::string design;
    std::string outputs;
    std::string space;
    std::string out;
    int starts = 5;
};

int run_fit(const FitArgs& a, const Global& g) {
    const auto method = bench::method_from_string(a.method);
    const Design d = load_design(a.design, a.space);
    const auto y = io::read_values(a.outputs);
    io::json model;
    std::vector<std::string> warnings;
    if (method == bench::Method::PceRegression || method == bench::Method::PceQuadrature) {
        if (a.p < 0) throw ConfigError("polynomial chaos fits need --p");
        if (method == bench::Method::PceRegression) {
            const auto m = pce::fit_regression(d, y, pce::Basis(d.dim(), pce::TruncationScheme::total_order(a.p)));
            warnings = m.diagnostics().warnings;
            model = io::to_json(m);
        } else {
            const auto m = pce::fit_projection(d, y, pce::Basis(d.dim(), pce::TruncationScheme::tensor_product(a.p)));
            model = io::to_json(m);
        }
    } else {
        gp::FitOptions opt;
        opt.starts = a.starts;
        opt.seed = g.seed.value_or(opt.seed);
        const auto m = gp::fit(d, y, bench::kernel_of(method), opt);
        warnings = m.warnings();
        model = io::to_json(m);
    }
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    io::write_json(a.out, model);
    std::cerr << "wrote " << a.method << " model to " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

// Mean and (for GPs) variance at every point.
struct Predictions {
    std::vector<double> mean;
    std::optional<std::vector<double>> variance;
};

Predictions predict_with(const io::json& model, const Design& d) {
    Predictions out;
    const auto type = model.value("type", "");
    if (type == "pce") {
        const auto m = io::pce_from_json(model);
        for (std::size_t i = 0; i < d.size(); ++i) out.mean.push_back(m.predict(d.point(i)));
    } else if (type == "gp") {
        const auto m = io::gp_from_json(model);
        out.variance.emplace();
        for (std::size_t i = 0; i < d.size(); ++i) {
            const auto p = m.predict(d.point(i));
            out.mean.push_back(p.mean);
            out.variance->push_back(p.variance);
        }
    } else {
        throw ConfigError("model file has unknown type '" + type + "'");
    }
    return out;
}

struct PredictArgs {
    std::string model;
    std::string design;
    std::string space;
    std::string out;
};

int run_predict(const PredictArgs& a) {
    const auto d = load_design(a.design, a.space);
    const auto p = predict_with(io::read_json(a.model), d);
    std::string csv = p.variance ? "mean,variance\n" : "mean\n";
    for (std::size_t i = 0; i < p.mean.size(); ++i) {
        csv += io::format_double(p.mean[i]);
        if (p.variance) csv += "," + io::format_double((*p.variance)[i]);
        csv += "\n";
    }
    io::write_text(a.out, csv);
    std::cerr << "wrote " << p.mean.size() << " predictions to " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct ValidateArgs {
    std::string design;
    std::string outputs;
    std::string model;
    std::string predictions;
    std::string space;
    std::string out;
    std::string pdf;
    std::size_t bootstrap = 1000;
    std::size_t samples = 1000;
};

int run_validate(const ValidateArgs& a, const Global& g) {
    validation::ValidationSet vset{load_design(a.design, a.space), io::read_values(a.outputs)};
    vset.validate();
    validation::Options opt;
    opt.bootstrap_replicates = a.bootstrap;
    opt.posterior_samples = a.samples;
    opt.seed = g.seed.value_or(opt.seed);
    const auto ref = validation::simulator_reference(vset, opt);
    validation::MetricsReport report;
    if (!a.model.empty()) {
        const auto model = io::read_json(a.model);
        if (model.value("type", "") == "gp") {
            report = validation::gp_metric_intervals(io::gp_from_json(model), vset, ref, opt);
        } else {
            report = validation::evaluate_predictions(predict_with(model, vset.design).mean, vset, ref);
        }
        report.surrogate = model.value("type", "") == "gp" ? model.value("family", "gp") : "pce";
    } else {
        const auto table = io::read_csv(a.predictions);
        std::vector<double> preds;
        for (const auto& row : table.rows) preds.push_back(row.at(0));
        report = validation::evaluate_predictions(preds, vset, ref);
        report.surrogate = "predictions";
    }
    io::write_json(a.out, {{"report", io::to_json(report)}, {"reference", io::to_json(ref)}});
    if (!a.pdf.empty()) io::write_text(a.pdf, io::pdf_csv(report.pdf));
    std::cout << "rmse " << io::format_double(report.rmse.point) << "\n";
    std::cout << "mean " << io::format_double(report.mean.point) << " (simulator " << io::format_double(ref.mean.point) << ")\n";
    std::cout << "sd   " << io::format_double(report.sd.point) << " (simulator " << io::format_double(ref.sd.point) << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
    std::string config;
    std::string out;
    bool quiet = false;
};

struct StderrProgress : bench::Progress {
    void cell_done(const bench::Cell& c) override {
        std::cerr << bench::to_string(c.method) << " class " << c.design_class << " m=" << c.size << ": "
                  << (c.ok ? "ok" : "FAILED " + c.error) << "\n";
    }
};

int run_bench(const BenchArgs& a, const Global& g) {
    auto config = bench::load_config(a.config);
    if (g.seed) config.seed = *g.seed;
    if (!a.out.empty()) config.output = a.out;
    StderrProgress progress;
    const auto result = bench::run_experiment(config, a.quiet ? nullptr : &progress);
    bench::write_run(result, config.output);
    std::size_t failed = 0;
    for (const auto& c : result.cells) failed += c.ok ? 0 : 1;
    std::cerr << result.cells.size() - failed << "/" << result.cells.size() << " cells produced a report; results in "
              << config.output.string() << "\n";
    return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Surrogate benchmark harness: polynomial chaos and Gaussian process emulators"};
    app.require_subcommand(1);
    Global global;
    app.add_option("--seed", global.seed, "Master seed (overrides config and defaults)");

    DesignArgs da;
    auto* design = app.add_subcommand("design", "Generate a design on the standard cube");
    design->add_option("--kind", da.kind, "sobol, lhs or grid")->required()->check(CLI::IsMember({"sobol", "lhs", "grid"}));
    design->add_option("--m", da.m, "Number of points");
    design->add_option("--n", da.n, "Input dimension")->required();
    design->add_option("--orders", da.orders, "Nodes per dimension for grids");
    design->add_option("--space", da.space, "Input space JSON; writes native-unit coordinates");
    design->add_option("--out", da.out, "Output CSV")->required();

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "Fit a surrogate to simulator runs");
    fit->add_option("--method", fa.method, "pce-reg, pce-quad, gp-se or gp-matern")->required();
    fit->add_option("--p", fa.p, "Truncation order for polynomial chaos");
    fit->add_option("--design", fa.design, "Design CSV")->required()->check(CLI::ExistingFile);
    fit->add_option("--outputs", fa.outputs, "Outputs CSV")->required()->check(CLI::ExistingFile);
    fit->add_option("--space", fa.space, "Input space JSON; the design is in native units");
    fit->add_option("--starts", fa.starts, "Likelihood optimization starts for GPs");
    fit->add_option("--out", fa.out, "Model JSON")->required();

    PredictArgs pa;
    auto* predict = app.add_subcommand("predict", "Evaluate a fitted surrogate");
    predict->add_option("--model", pa.model, "Model JSON")->required()->check(CLI::ExistingFile);
    predict->add_option("--design", pa.design, "Probe points CSV")->required()->check(CLI::ExistingFile);
    predict->add_option("--space", pa.space, "Input space JSON; probes are in native units");
    predict->add_option("--out", pa.out, "Predictions CSV")->required();

    ValidateArgs va;
    auto* validate = app.add_subcommand("validate", "Score a surrogate on a validation set");
    validate->add_option("--design", va.design, "Validation design CSV")->required()->check(CLI::ExistingFile);
    validate->add_option("--outputs", va.outputs, "Simulator outputs at the validation design")->required()->check(CLI::ExistingFile);
    auto* model_opt = validate->add_option("--model", va.model, "Model JSON")->check(CLI::ExistingFile);
    auto* pred_opt = validate->add_option("--predictions", va.predictions, "Predictions CSV (first column)")->check(CLI::ExistingFile);
    model_opt->excludes(pred_opt);
    validate->add_option("--space", va.space, "Input space JSON; the design is in native units");
    validate->add_option("--bootstrap", va.bootstrap, "Bootstrap replicates");
    validate->add_option("--samples", va.samples, "Posterior samples for GP intervals");
    validate->add_option("--pdf", va.pdf, "Also write the density curve as CSV");
    validate->add_option("--out", va.out, "Report JSON")->required();

    BenchArgs ba;
    auto* benchmark = app.add_subcommand("bench", "Run a full benchmark experiment");
    benchmark->add_option("--config", ba.config, "Experiment JSON")->required()->check(CLI::ExistingFile);
    benchmark->add_option("--out", ba.out, "Output directory (overrides the config)");
    benchmark->add_flag("--quiet", ba.quiet, "No per-cell progress");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    try {
        if (*design) {
            if (da.kind != "grid" && da.m == 0) throw ConfigError("--m is required");
            return run_design(da, global);
        }
        if (*fit) return run_fit(fa, global);
        if (*predict) return run_predict(pa);
        if (*validate) {
            if (va.model.empty() && va.predictions.empty()) throw ConfigError("validate needs --model or --predictions");
            return run_validate(va, global);
        }
        if (*benchmark) return run_bench(ba, global);
    } catch (const std::exception& e) {
        std::cerr << "uqbench: error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
