#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uqbench/designs.hpp"
#include "uqbench/errors.hpp"
#include "uqbench/gp.hpp"
#include "uqbench/random.hpp"

namespace uqbench::validation {

/// Simulator runs on an independent validation design.
struct ValidationSet {
    Design design;
    std::vector<double> outputs;

    void validate() const {
        if (design.size() < 2) throw SizeError("validation set needs at least two points");
        if (outputs.size() != design.size()) throw SizeError("validation outputs do not match validation design");
        for (double v : outputs) {
            if (!std::isfinite(v)) throw DomainError("validation outputs must be finite");
        }
    }
};

enum class IntervalMethod { None, Bootstrap, PosteriorResampling };

inline const char* to_string(IntervalMethod m) {
    switch (m) {
        case IntervalMethod::None: return "none";
        case IntervalMethod::Bootstrap: return "bootstrap";
        case IntervalMethod::PosteriorResampling: return "posterior-resampling";
    }
    return "unknown";
}

// Percentile intervals need not contain the point estimate; only lo <= hi holds.
struct IntervalEstimate {
    double point = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    IntervalMethod method = IntervalMethod::None;
    std::optional<double> sample_average;  // posterior resampling only

    static IntervalEstimate point_only(double v) { return {v, v, v, IntervalMethod::None, std::nullopt}; }
};

struct PdfCurve {
    std::vector<double> grid;
    std::vector<double> density;
    std::vector<double> lo;  // empty unless a band was computed
    std::vector<double> hi;
};

struct MetricsReport {
    std::string surrogate;
    IntervalEstimate rmse;
    IntervalEstimate mean;
    IntervalEstimate sd;
    IntervalEstimate exceed2;
    IntervalEstimate exceed3;
    PdfCurve pdf;
};

// ---------------------------------------------------------------------------
// Point metrics
// ---------------------------------------------------------------------------

inline double rmse(std::span<const double> preds, std::span<const double> truths) {
    if (preds.size() != truths.size()) {
        throw SizeError("rmse: " + std::to_string(preds.size()) + " predictions vs " + std::to_string(truths.size()) +
                        " truths");
    }
    if (preds.empty()) throw SizeError("rmse of an empty set");
    double s = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double d = preds[i] - truths[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(preds.size()));
}

inline double empirical_mean(std::span<const double> v) {
    if (v.empty()) throw SizeError("mean of an empty set");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Population standard deviation (divide by m'), two-pass.
inline double empirical_sd(std::span<const double> v) {
    const double mu = empirical_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size()));
}

/// Fraction of predictions >= mu + kappa sigma.
inline double exceedance(std::span<const double> preds, double mu, double sigma, double kappa) {
    if (sigma < 0.0) throw DomainError("exceedance needs sigma >= 0");
    if (preds.empty()) return 0.0;
    const double threshold = mu + kappa * sigma;
    std::size_t count = 0;
    for (double p : preds) count += p >= threshold ? 1 : 0;
    return static_cast<double>(count) / static_cast<double>(preds.size());
}

/// Linear interpolation between order statistics at position q (n - 1).
inline double percentile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw SizeError("percentile of an empty set");
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double percentile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    return percentile_sorted(values, q);
}

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

using Statistic = std::function<double(std::span<const double>)>;

/// Percentile bootstrap: B resamples with replacement, each from its own
/// stream split_seed(seed, "bootstrap", b), and the (1-level)/2 and
/// (1+level)/2 percentiles of the replicated statistic.
inline IntervalEstimate bootstrap_ci(std::span<const double> values, const Statistic& statistic, std::size_t B = 1000,
                                     double level = 0.95, std::uint64_t seed = 1) {
    if (B < 100) throw ConfigError("bootstrap needs at least 100 replicates");
    if (values.empty()) throw SizeError("bootstrap of an empty set");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("bootstrap level must lie in (0, 1)");
    const std::size_t m = values.size();
    std::vector<double> reps(B);
    std::vector<double> resample(m);
    for (std::size_t b = 0; b < B; ++b) {
        Engine rng = make_engine(split_seed(seed, "bootstrap", b));
        std::uniform_int_distribution<std::size_t> pick(0, m - 1);
        for (std::size_t i = 0; i < m; ++i) resample[i] = values[pick(rng)];
        reps[b] = statistic(resample);
    }
    std::sort(reps.begin(), reps.end());
    IntervalEstimate out;
    out.point = statistic(values);
    out.lo = percentile_sorted(reps, 0.5 * (1.0 - level));
    out.hi = percentile_sorted(reps, 0.5 * (1.0 + level));
    out.method = IntervalMethod::Bootstrap;
    return out;
}

// ---------------------------------------------------------------------------
// Kernel density estimation
// ---------------------------------------------------------------------------

/// h = 0.9 min(s, IQR / 1.34) m^{-1/5}, with s the sample (m - 1) standard
/// deviation and IQR from linearly interpolated quartiles.
inline double silverman_bandwidth(std::span<const double> values) {
    const std::size_t m = values.size();
    if (m < 2) throw SizeError("bandwidth selection needs at least two values");
    const double mu = empirical_mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - mu) * (v - mu);
    const double s = std::sqrt(ss / static_cast<double>(m - 1));
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double iqr = percentile_sorted(sorted, 0.75) - percentile_sorted(sorted, 0.25);
    double spread = std::min(s, iqr / 1.34);
    if (!(spread > 0.0)) spread = s;  // heavy ties in the middle half
    if (!(spread > 0.0)) throw DomainError("bandwidth selection on data with zero spread");
    return 0.9 * spread * std::pow(static_cast<double>(m), -0.2);
}

// Gaussian-kernel contributions beyond this many bandwidths are below 1e-15 and skipped.
inline constexpr double kKernelCutoff = 8.5;

namespace detail {

// Equally spaced within rounding: g_i = g_0 + i step.
inline bool uniform_spacing(std::span<const double> grid) {
    if (grid.size() < 3) return false;
    const double step = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
    if (!(step > 0.0)) return false;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double expected = grid.front() + step * static_cast<double>(i);
        if (std::abs(grid[i] - expected) > 1e-9 * step) return false;
    }
    return true;
}

// Uniform grid: each kernel is evaluated outward from its nearest node with the
// exact recurrence phi(u + d) = phi(u) exp(-u d - d^2 / 2), so only two
// exponentials are needed per value.
inline void kde_uniform(std::span<const double> values, double bandwidth, std::span<const double> grid,
                        std::vector<double>& out) {
    const std::size_t G = grid.size();
    const double g0 = grid.front();
    const double step = (grid.back() - g0) / static_cast<double>(G - 1);
    const double d = step / bandwidth;
    const double shrink = std::exp(-d * d);
    const auto reach = static_cast<long>(std::ceil(kKernelCutoff * bandwidth / step));
    for (double v : values) {
        const long c = std::lround((v - g0) / step);
        const long first = std::max(0L, c - reach);
        const long last = std::min(static_cast<long>(G) - 1, c + reach);
        if (first > last) continue;
        const long start = std::clamp(c, first, last);
        const double u0 = (g0 + step * static_cast<double>(start) - v) / bandwidth;
        const double phi0 = std::exp(-0.5 * u0 * u0);
        out[static_cast<std::size_t>(start)] += phi0;
        const double base = std::exp(-u0 * d - 0.5 * d * d);
        double phi = phi0;
        double factor = base;
        for (long k = start + 1; k <= last; ++k) {
            phi *= factor;
            factor *= shrink;
            out[static_cast<std::size_t>(k)] += phi;
        }
        phi = phi0;
        factor = phi0 > 0.0 ? std::exp(u0 * d - 0.5 * d * d) : 0.0;
        for (long k = start - 1; k >= first; --k) {
            phi *= factor;
            factor *= shrink;
            out[static_cast<std::size_t>(k)] += phi;
        }
    }
}

}  // namespace detail

/// f(g) = 1/(m h) sum_i phi((g - v_i) / h) at every grid point.
inline std::vector<double> kde(std::span<const double> values, double bandwidth, std::span<const double> grid) {
    if (!(bandwidth > 0.0)) throw DomainError("kde needs a positive bandwidth");
    if (grid.empty()) throw SizeError("kde needs a non-empty grid");
    if (values.empty()) throw SizeError("kde of an empty set");
    const double norm = 1.0 / (static_cast<double>(values.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
    std::vector<double> out(grid.size(), 0.0);
    if (detail::uniform_spacing(grid)) {
        detail::kde_uniform(values, bandwidth, grid, out);
        for (double& f : out) f *= norm;
        return out;
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double inv_h = 1.0 / bandwidth;
    const double reach = kKernelCutoff * bandwidth;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto first = std::lower_bound(sorted.begin(), sorted.end(), grid[g] - reach);
        const auto last = std::upper_bound(first, sorted.end(), grid[g] + reach);
        double s = 0.0;
        for (auto it = first; it != last; ++it) {
            const double u = (grid[g] - *it) * inv_h;
            s += std::exp(-0.5 * u * u);
        }
        out[g] = s * norm;
    }
    return out;
}

/// `points` equally spaced values over [min - 5h, max + 5h].
inline std::vector<double> kde_grid(std::span<const double> values, double bandwidth, std::size_t points = 512) {
    if (points < 2) throw SizeError("kde grid needs at least two points");
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    const double a = *mn - 5.0 * bandwidth;
    const double b = *mx + 5.0 * bandwidth;
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) {
        grid[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    return grid;
}

/// The shared grid, extended on the same lattice wherever [v - 5h, v + 5h]
/// of some value falls outside it (the rule that sized the shared grid).
/// Between extension runs the density is below phi(5) / (m h), so the
/// trapezoid rule across a gap adds a negligible amount.
inline std::vector<double> covering_grid(std::span<const double> shared, std::span<const double> values, double bandwidth) {
    if (shared.size() < 2 || values.empty()) return {shared.begin(), shared.end()};
    const double a = shared.front();
    const double step = (shared.back() - a) / static_cast<double>(shared.size() - 1);
    const auto last = static_cast<long long>(shared.size()) - 1;
    const double reach = 5.0 * bandwidth;
    std::vector<std::pair<long long, long long>> spans;
    for (double v : values) {
        // 1e-9 slack: the shared window itself is built from min - 5h and max + 5h
        const auto lo = static_cast<long long>(std::floor((v - reach - a) / step + 1e-9));
        const auto hi = static_cast<long long>(std::ceil((v + reach - a) / step - 1e-9));
        if (lo < 0) spans.emplace_back(lo, std::min(hi, -1LL));
        if (hi > last) spans.emplace_back(std::max(lo, last + 1), hi);
    }
    if (spans.empty()) return {shared.begin(), shared.end()};
    std::sort(spans.begin(), spans.end());
    std::vector<double> grid;
    long long next = std::numeric_limits<long long>::min();
    bool inserted_shared = false;
    auto emit_shared = [&] {
        grid.insert(grid.end(), shared.begin(), shared.end());
        inserted_shared = true;
    };
    for (auto [lo, hi] : spans) {
        if (lo > last && !inserted_shared) {
            emit_shared();
            next = std::max(next, last + 1);
        }
        for (long long k = std::max(lo, next); k <= hi; ++k) grid.push_back(a + step * static_cast<double>(k));
        next = std::max(next, hi + 1);
    }
    if (!inserted_shared) emit_shared();
    return grid;
}

inline double trapezoid(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    return s;
}

// ---------------------------------------------------------------------------
// Metric suite
// ---------------------------------------------------------------------------

struct Options {
    std::size_t bootstrap_replicates = 1000;
    std::size_t posterior_samples = 1000;
    double level = 0.95;
    std::size_t kde_points = 512;
    std::size_t sampling_cap = 2000;
    std::uint64_t seed = 1;
};

/// Simulator-side quantities every surrogate is compared against: moments and
/// exceedance probabilities with bootstrap intervals, plus the bandwidth, grid
/// and density shared by all surrogate PDFs.
struct Reference {
    IntervalEstimate mean;
    IntervalEstimate sd;
    IntervalEstimate exceed2;
    IntervalEstimate exceed3;
    double bandwidth = 0.0;
    PdfCurve pdf;

    double threshold(double kappa) const { return mean.point + kappa * sd.point; }
};

inline Reference simulator_reference(const ValidationSet& vset, const Options& options = {}) {
    vset.validate();
    const std::span<const double> y = vset.outputs;
    Reference ref;
    const auto seed = split_seed(options.seed, "reference");
    auto exceed_stat = [](double kappa) {
        return [kappa](std::span<const double> v) {
            return exceedance(v, empirical_mean(v), empirical_sd(v), kappa);
        };
    };
    ref.mean = bootstrap_ci(y, empirical_mean, options.bootstrap_replicates, options.level, split_seed(seed, "mean"));
    ref.sd = bootstrap_ci(y, empirical_sd, options.bootstrap_replicates, options.level, split_seed(seed, "sd"));
    ref.exceed2 = bootstrap_ci(y, exceed_stat(2.0), options.bootstrap_replicates, options.level, split_seed(seed, "exceed2"));
    ref.exceed3 = bootstrap_ci(y, exceed_stat(3.0), options.bootstrap_replicates, options.level, split_seed(seed, "exceed3"));
    ref.bandwidth = silverman_bandwidth(y);
    ref.pdf.grid = kde_grid(y, ref.bandwidth, options.kde_points);
    ref.pdf.density = kde(y, ref.bandwidth, ref.pdf.grid);
    return ref;
}

struct PointMetrics {
    double rmse, mean, sd, exceed2, exceed3;
};

inline PointMetrics point_metrics(std::span<const double> preds, std::span<const double> truths, const Reference& ref) {
    return {rmse(preds, truths), empirical_mean(preds), empirical_sd(preds),
            exceedance(preds, ref.mean.point, ref.sd.point, 2.0), exceedance(preds, ref.mean.point, ref.sd.point, 3.0)};
}

using PredictFn = std::function<double(std::span<const double>)>;

/// Point estimates of every metric for a surrogate's predictions at the
/// validation design. Exceedance thresholds come from the simulator outputs.
inline MetricsReport evaluate_predictions(std::span<const double> preds, const ValidationSet& vset, const Reference& ref) {
    const auto pm = point_metrics(preds, vset.outputs, ref);
    MetricsReport report;
    report.rmse = IntervalEstimate::point_only(pm.rmse);
    report.mean = IntervalEstimate::point_only(pm.mean);
    report.sd = IntervalEstimate::point_only(pm.sd);
    report.exceed2 = IntervalEstimate::point_only(pm.exceed2);
    report.exceed3 = IntervalEstimate::point_only(pm.exceed3);
    report.pdf.grid = covering_grid(ref.pdf.grid, preds, ref.bandwidth);
    report.pdf.density = kde(preds, ref.bandwidth, report.pdf.grid);
    return report;
}

inline std::vector<double> predict_all(const PredictFn& predict, const Design& design) {
    std::vector<double> preds(design.size());
    for (std::size_t i = 0; i < design.size(); ++i) preds[i] = predict(design.point(i));
    return preds;
}

inline MetricsReport evaluate_surrogate(const PredictFn& predict, const ValidationSet& vset, const Reference& ref) {
    return evaluate_predictions(predict_all(predict, vset.design), vset, ref);
}

inline MetricsReport evaluate_surrogate(const PredictFn& predict, const ValidationSet& vset, const Options& options = {}) {
    return evaluate_surrogate(predict, vset, simulator_reference(vset, options));
}

/// GP metrics with posterior-resampling intervals: S joint posterior draws at
/// the validation points, every metric computed per draw, and the 2.5/97.5
/// percentiles reported around the posterior-mean point estimate. The PDF band
/// is the pointwise percentile envelope of the per-draw density curves.
inline MetricsReport gp_metric_intervals(const gp::Model& model, const ValidationSet& vset, const Reference& ref,
                                         const Options& options = {}) {
    vset.validate();
    std::vector<double> means(vset.design.size());
    for (std::size_t i = 0; i < means.size(); ++i) means[i] = model.predict(vset.design.point(i)).mean;
    MetricsReport report = evaluate_predictions(means, vset, ref);

    const std::size_t S = options.posterior_samples;
    if (S == 0 || !model.has_finite_variance()) return report;
    const Eigen::MatrixXd draws = model.sample_posterior(vset.design.points, S, split_seed(options.seed, "posterior"),
                                                         options.sampling_cap);
    std::array<std::vector<double>, 5> per_metric;
    for (auto& v : per_metric) v.resize(S);
    const std::size_t G = report.pdf.grid.size();
    std::vector<std::vector<double>> curves(G, std::vector<double>(S));
    std::vector<double> row(static_cast<std::size_t>(draws.cols()));
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t i = 0; i < row.size(); ++i) row[i] = draws(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i));
        const auto pm = point_metrics(row, vset.outputs, ref);
        per_metric[0][s] = pm.rmse;
        per_metric[1][s] = pm.mean;
        per_metric[2][s] = pm.sd;
        per_metric[3][s] = pm.exceed2;
        per_metric[4][s] = pm.exceed3;
        const auto curve = kde(row, ref.bandwidth, report.pdf.grid);
        for (std::size_t g = 0; g < G; ++g) curves[g][s] = curve[g];
    }
    const double qlo = 0.5 * (1.0 - options.level);
    const double qhi = 0.5 * (1.0 + options.level);
    IntervalEstimate* slots[5] = {&report.rmse, &report.mean, &report.sd, &report.exceed2, &report.exceed3};
    for (std::size_t k = 0; k < 5; ++k) {
        auto& v = per_metric[k];
        slots[k]->sample_average = empirical_mean(v);
        std::sort(v.begin(), v.end());
        slots[k]->lo = percentile_sorted(v, qlo);
        slots[k]->hi = percentile_sorted(v, qhi);
        slots[k]->method = IntervalMethod::PosteriorResampling;
    }
    report.pdf.lo.resize(G);
    report.pdf.hi.resize(G);
    for (std::size_t g = 0; g < G; ++g) {
        std::sort(curves[g].begin(), curves[g].end());
        report.pdf.lo[g] = percentile_sorted(curves[g], qlo);
        report.pdf.hi[g] = percentile_sorted(curves[g], qhi);
    }
    return report;
}

}  // namespace uqbench::validation
