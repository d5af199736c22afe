// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "oracles.hpp"
#include "uqbench/bench.hpp"
#include "uqbench/report.hpp"

using namespace uqbench;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

std::vector<double> toy_outputs(const Design& d) {
    std::vector<double> y;
    for (std::size_t i = 0; i < d.size(); ++i) y.push_back(oracle::toy(d.point(i)[0], d.point(i)[1]));
    return y;
}

// 1. Gauss-Legendre exactness
Outcome quadrature_exactness() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (int k = 1; k <= 16; ++k) {
        const auto rule = gauss_legendre_1d(k);
        for (int d = 0; d <= 2 * k - 1; ++d) {
            double s = 0.0;
            for (int i = 0; i < k; ++i) s += rule.weights[static_cast<std::size_t>(i)] * std::pow(rule.nodes[static_cast<std::size_t>(i)], d);
            worst = std::max(worst, std::abs(s - oracle::uniform_moment(d)));
        }
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-12 && t < 1.0, fmt("max error %.2e, %.3f s", worst, t)};
}

// Total-order Legendre expansion evaluated through the closed-form oracle.
double legendre_series(const std::vector<pce::MultiIndex>& idx, const std::vector<double>& a, std::span<const double> z) {
    double s = 0.0;
    for (std::size_t t = 0; t < idx.size(); ++t) {
        double term = a[t];
        for (std::size_t j = 0; j < z.size(); ++j) term *= oracle::legendre_closed_form(idx[t][j], z[j]);
        s += term;
    }
    return s;
}

// 2. Projection reproduces a degree-3 tensor polynomial; regression recovers coefficients.
Outcome pce_exactness() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    double c[4][4];
    for (auto& row : c) {
        for (double& v : row) v = u(rng);
    }
    auto poly = [&](double x, double y) {
        double s = 0.0;
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) s += c[i][j] * std::pow(x, i) * std::pow(y, j);
        }
        return s;
    };
    const Design grid = tensor_grid({4, 4});
    std::vector<double> y;
    for (std::size_t i = 0; i < grid.size(); ++i) y.push_back(poly(grid.point(i)[0], grid.point(i)[1]));
    const auto proj = pce::fit_projection(grid, y, pce::Basis(2, pce::TruncationScheme::tensor_product(3)));
    const Design probes = latin_hypercube(1000, 2, 77);
    double scale = 0.0, worst_proj = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) scale = std::max(scale, std::abs(poly(probes.point(i)[0], probes.point(i)[1])));
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const double f = poly(probes.point(i)[0], probes.point(i)[1]);
        worst_proj = std::max(worst_proj, std::abs(proj.predict(probes.point(i)) - f) / scale);
    }

    double worst_reg = 0.0;
    for (auto [n, p] : {std::pair{2, 3}, std::pair{4, 2}, std::pair{5, 3}}) {
        const pce::Basis basis(static_cast<std::size_t>(n), pce::TruncationScheme::total_order(p));
        std::vector<double> a(basis.size());
        for (double& v : a) v = u(rng);
        const Design d = sobol(2 * basis.size(), static_cast<std::size_t>(n), 1234);
        std::vector<double> yr;
        for (std::size_t i = 0; i < d.size(); ++i) yr.push_back(legendre_series(basis.indices(), a, d.point(i)));
        const auto model = pce::fit_regression(d, yr, basis);
        for (std::size_t t = 0; t < a.size(); ++t) {
            worst_reg = std::max(worst_reg, std::abs(model.coefficients()[static_cast<Eigen::Index>(t)] - a[t]));
        }
    }
    const double t = seconds_since(t0);
    return {worst_proj <= 1e-10 && worst_reg <= 1e-8 && t < 1.0,
            fmt("projection rel error %.2e, regression coefficient error %.2e, %.3f s", worst_proj, worst_reg, t)};
}

// 3. Interpolation at design points
Outcome interpolation() {
    double worst = 0.0;
    double worst_var = 0.0;
    std::string notes;
    auto range_of = [](const std::vector<double>& y) {
        return *std::max_element(y.begin(), y.end()) - *std::min_element(y.begin(), y.end());
    };
    auto check = [&](const Design& d, const std::vector<double>& y, const std::function<double(std::span<const double>)>& f) {
        const double r = range_of(y);
        for (std::size_t i = 0; i < d.size(); ++i) worst = std::max(worst, std::abs(f(d.point(i)) - y[i]) / r);
    };
    for (int p = 1; p <= 4; ++p) {
        const pce::Basis basis(2, pce::TruncationScheme::total_order(p));
        const Design d = sobol(basis.size(), 2, 99);
        const auto y = toy_outputs(d);
        const auto model = pce::fit_regression(d, y, basis);
        check(d, y, [&](std::span<const double> z) { return model.predict(z); });

        const Design g = tensor_grid({p + 1, p + 1});
        const auto yg = toy_outputs(g);
        const auto proj = pce::fit_projection(g, yg, pce::Basis(2, pce::TruncationScheme::tensor_product(p)));
        check(g, yg, [&](std::span<const double> z) { return proj.predict(z); });
    }
    for (auto family : {gp::KernelFamily::SquaredExponential, gp::KernelFamily::Matern52}) {
        for (std::size_t m : {12u, 20u, 30u}) {
            const Design d = sobol(m, 2, 99);
            const auto y = toy_outputs(d);
            const auto model = gp::fit(d, y, family);
            check(d, y, [&](std::span<const double> z) { return model.predict(z).mean; });
            for (std::size_t i = 0; i < d.size(); ++i) {
                worst_var = std::max(worst_var, model.predict(d.point(i)).variance / model.lambda2());
            }
        }
    }
    return {worst <= 1e-6 && worst_var <= 1e-8,
            fmt("max |error|/range %.2e, max variance/lambda2 %.2e", worst, worst_var)};
}

// 4. Likelihood gradient against central differences in log(delta)
Outcome gradient_check() {
    const Design d = sobol(20, 2, 5);
    const auto y = toy_outputs(d);
    const gp::MeanBasis mean{{{0, 0}, {1, 0}, {0, 1}}};
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> logu(std::log(0.05), std::log(1.0));
    const double h = 1e-5;
    const double jitter = 1e-8;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto family = trial % 2 ? gp::KernelFamily::Matern52 : gp::KernelFamily::SquaredExponential;
        Eigen::VectorXd lengths(2);
        lengths << std::exp(logu(rng)), std::exp(logu(rng));
        Eigen::VectorXd grad;
        gp::log_marginal_likelihood(lengths, d, y, mean, family, &grad, jitter);
        for (int j = 0; j < 2; ++j) {
            const auto at = [&](double s) {
                Eigen::VectorXd l = lengths;
                l[j] = std::exp(std::log(l[j]) + s);
                return gp::log_marginal_likelihood(l, d, y, mean, family, nullptr, jitter);
            };
            const double fd = oracle::central_difference(at, 0.0, h);
            worst = std::max(worst, std::abs(grad[j] - fd) / std::max(1.0, std::abs(fd)));
        }
    }
    return {worst <= 1e-5, fmt("max relative error %.2e over 20 configurations", worst)};
}

// Toy experiment on class 2 only.
bench::ExperimentConfig toy_class2(std::uint64_t seed, std::vector<int> orders, std::vector<bench::Method> methods) {
    bench::ExperimentConfig c;
    c.name = "toy";
    c.classes = {2};
    c.orders = std::move(orders);
    c.methods = std::move(methods);
    c.seed = seed;
    return c;
}

// sd of exp(-z1) tanh(5 z2) under the uniform density, from a 64 x 64 rule.
double toy_sd_oracle() {
    const auto r = oracle::gauss_legendre(64);
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < 64; ++i) {
        for (std::size_t j = 0; j < 64; ++j) {
            const double w = r.weights[i] * r.weights[j];
            const double f = oracle::toy(r.nodes[i], r.nodes[j]);
            m1 += w * f;
            m2 += w * f * f;
        }
    }
    return std::sqrt(m2 - m1 * m1);
}

// 5. Toy class-2 moments at m = 30
Outcome toy_moments() {
    const auto t0 = Clock::now();
    const double sd_true = toy_sd_oracle();
    const double sd_closed = std::sqrt(std::sinh(2.0) / 2.0 * (1.0 - std::tanh(5.0) / 5.0));
    const auto r = bench::run_experiment(
        toy_class2(2024, {4}, {bench::Method::PceRegression, bench::Method::GpSquaredExponential, bench::Method::GpMatern}));
    bool ok = r.complete() && std::abs(sd_true - sd_closed) < 1e-10;
    double worst_mean = 0.0, worst_sd = 0.0;
    for (const auto& c : r.cells) {
        if (!c.report) continue;
        worst_mean = std::max(worst_mean, std::abs(c.report->mean.point));
        worst_sd = std::max(worst_sd, std::abs(c.report->sd.point - sd_true) / sd_true);
    }
    const double t = seconds_since(t0);
    ok = ok && worst_mean <= 0.05 && worst_sd <= 0.05 && t < 30.0;
    return {ok, fmt("oracle sd %.6f, max |mean| %.4f, max sd rel error %.4f", sd_true, worst_mean, worst_sd) +
                    fmt(", %.1f s", t)};
}

// 6. Matern GP beats regression PCE on class 2
Outcome toy_ordering() {
    const auto t0 = Clock::now();
    std::string detail;
    bool ok = true;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto config = toy_class2(seed, {1, 2, 3, 4}, {bench::Method::PceRegression, bench::Method::GpMatern});
        const auto r = bench::run_experiment(config);
        std::map<std::size_t, std::pair<double, double>> rmse;  // size -> (pce, gp)
        for (const auto& c : r.cells) {
            const double v = c.report ? c.report->rmse.point : std::numeric_limits<double>::infinity();
            (c.method == bench::Method::GpMatern ? rmse[c.size].second : rmse[c.size].first) = v;
        }
        int wins = 0;
        for (const auto& [m, pr] : rmse) wins += pr.second < pr.first;
        ok = ok && wins >= 3;
        detail += "seed " + std::to_string(seed) + ": " + std::to_string(wins) + "/4; ";
    }
    const double t = seconds_since(t0);
    ok = ok && t < 120.0;
    return {ok, detail + fmt("%.1f s", t)};
}

// 7. Exceedance on standard normals
Outcome exceedance_oracle() {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(1'000'000);
    for (double& x : v) x = g(rng);
    const double mu = validation::empirical_mean(v);
    const double sd = validation::empirical_sd(v);
    const double e2 = validation::exceedance(v, mu, sd, 2.0);
    const double e3 = validation::exceedance(v, mu, sd, 3.0);
    const bool ok = std::abs(e2 - oracle::normal_tail(2.0)) <= 0.0005 && std::abs(e3 - oracle::normal_tail(3.0)) <= 0.0002 &&
                    std::abs(0.02275 - oracle::normal_tail(2.0)) < 1e-5 && std::abs(0.00135 - oracle::normal_tail(3.0)) < 1e-5;
    return {ok, fmt("kappa=2: %.5f, kappa=3: %.5f", e2, e3)};
}

// 8. Every density curve from the sample toy experiment integrates to one
Outcome kde_normalization(const bench::RunResult& r) {
    double worst = std::abs(validation::trapezoid(r.reference.pdf.grid, r.reference.pdf.density) - 1.0);
    std::size_t curves = 1;
    for (const auto& c : r.cells) {
        if (!c.report) continue;
        worst = std::max(worst, std::abs(validation::trapezoid(c.report->pdf.grid, c.report->pdf.density) - 1.0));
        ++curves;
    }
    return {worst <= 1e-2 && r.complete(), fmt("%.0f curves, max |integral - 1| %.2e", static_cast<double>(curves), worst)};
}

// 9. Two command-line runs give identical result files
Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / ("uqbench-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path config = fs::path(UQBENCH_SAMPLES_DIR) / "toy_experiment.json";
    bool ok = true;
    for (const char* out : {"a", "b"}) {
        const std::string cmd = std::string("'") + UQBENCH_CLI + "' --seed 31 bench --quiet --config '" + config.string() +
                                "' --out '" + (dir / out).string() + "' >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        ok = ok && WIFEXITED(status) && WEXITSTATUS(status) == 0;
    }
    std::string a, b;
    if (ok) {
        a = io::read_text(dir / "a" / "result.json");
        b = io::read_text(dir / "b" / "result.json");
    }
    fs::remove_all(dir);
    ok = ok && !a.empty() && a == b;
    return {ok, fmt("result.json %.0f bytes", static_cast<double>(a.size())) + (a == b ? ", identical" : ", differ")};
}

// 10. Sobol prefix property
Outcome sobol_prefix() {
    bool ok = true;
    std::size_t checked = 0;
    for (std::size_t n : {2u, 4u, 5u}) {
        std::size_t largest = design_class_size(n, 4, 2);
        for (std::uint64_t seed : {0ull, 1ull, 0x9e3779b97f4a7c15ull}) {
            const Design full = sobol(largest, n, seed);
            for (int c : {1, 2}) {
                for (std::size_t p = 1; p <= 4; ++p) {
                    const std::size_t m = design_class_size(n, p, c);
                    ok = ok && sobol(m, n, seed).points == full.points.topRows(static_cast<Eigen::Index>(m));
                    ++checked;
                }
            }
        }
    }
    return {ok, fmt("%.0f prefixes checked", static_cast<double>(checked))};
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](int id, const char* name, const Outcome& o) {
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    };
    auto guarded = [](const std::function<Outcome()>& f) {
        try {
            return f();
        } catch (const std::exception& e) {
            return Outcome{false, std::string("exception: ") + e.what()};
        }
    };

    report(1, "quadrature exactness", guarded(quadrature_exactness));
    report(2, "polynomial chaos exactness", guarded(pce_exactness));
    report(3, "interpolation at design points", guarded(interpolation));
    report(4, "likelihood gradient", guarded(gradient_check));
    report(5, "toy moments at m=30", guarded(toy_moments));
    report(6, "toy ordering, Matern vs regression", guarded(toy_ordering));
    report(7, "exceedance oracle", guarded(exceedance_oracle));
    report(8, "density normalization", guarded([] {
               return kde_normalization(bench::run_experiment(bench::load_config(fs::path(UQBENCH_SAMPLES_DIR) / "toy_experiment.json")));
           }));
    report(9, "bench determinism", guarded(determinism));
    report(10, "Sobol prefix property", guarded(sobol_prefix));
    std::printf("%d of 10 criteria failed\n", failed);
    return failed ? 1 : 0;
}
