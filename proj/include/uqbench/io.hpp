#pragma once

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "uqbench/designs.hpp"
#include "uqbench/domain.hpp"
#include "uqbench/errors.hpp"
#include "uqbench/gp.hpp"
#include "uqbench/polychaos.hpp"
#include "uqbench/random.hpp"
#include "uqbench/validation.hpp"

namespace uqbench::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Round-trip rendering, %.17g.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const fs::path& path, std::string_view text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> header;  // empty when the file has none
    std::vector<std::vector<double>> rows;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline bool parse_number(std::string_view s, double& v) {
    if (s == "inf" || s == "+inf") {
        v = std::numeric_limits<double>::infinity();
        return true;
    }
    if (s == "-inf") {
        v = -std::numeric_limits<double>::infinity();
        return true;
    }
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace detail

/// Numeric CSV with an optional header row. Blank lines are skipped; every row
/// must have the same number of fields.
inline CsvTable parse_csv(std::string_view text, const std::string& source) {
    CsvTable table;
    std::size_t line_no = 0;
    std::size_t width = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string_view line = detail::trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split(line);
        std::vector<double> row(fields.size());
        bool numeric = true;
        for (std::size_t j = 0; j < fields.size(); ++j) numeric = numeric && detail::parse_number(fields[j], row[j]);
        if (!numeric) {
            if (table.header.empty() && table.rows.empty()) {
                for (auto f : fields) table.header.emplace_back(f);
                width = fields.size();
                continue;
            }
            throw IoError(source + ":" + std::to_string(line_no) + ": non-numeric field");
        }
        if (width == 0) width = row.size();
        if (row.size() != width) {
            throw IoError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) + " fields, got " +
                          std::to_string(row.size()));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline CsvTable read_csv(const fs::path& path) { return parse_csv(read_text(path), path.string()); }

/// Header `x1,...,xn[,weight]`, one point per row.
inline std::string design_csv(const Design& d, const std::vector<std::string>& names = {}) {
    std::string out;
    for (std::size_t j = 0; j < d.dim(); ++j) {
        if (j) out += ',';
        out += names.empty() ? "x" + std::to_string(j + 1) : names[j];
    }
    if (d.weights) out += ",weight";
    out += '\n';
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto z = d.point(i);
        for (std::size_t j = 0; j < z.size(); ++j) {
            if (j) out += ',';
            out += format_double(z[j]);
        }
        if (d.weights) out += "," + format_double((*d.weights)[i]);
        out += '\n';
    }
    return out;
}

inline void write_design(const fs::path& path, const Design& d) { write_text(path, design_csv(d)); }

/// Reads a design file. A trailing `weight` column marks a tensor grid.
inline Design read_design(const fs::path& path) {
    const auto table = read_csv(path);
    if (table.rows.empty()) throw IoError("'" + path.string() + "' contains no design points");
    const bool weighted = !table.header.empty() && table.header.back() == "weight";
    const std::size_t n = table.rows.front().size() - (weighted ? 1 : 0);
    if (n == 0) throw IoError("'" + path.string() + "' has no coordinate columns");
    Design d;
    d.points.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(n));
    if (weighted) {
        d.kind = DesignKind::TensorGrid;
        d.weights.emplace();
    }
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        for (std::size_t j = 0; j < n; ++j) d.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = table.rows[i][j];
        if (weighted) d.weights->push_back(table.rows[i][n]);
    }
    validate(d);
    return d;
}

/// Native-unit points from a design on the standard cube.
inline std::string native_design_csv(const Design& d, const InputSpace& space) {
    Design native = d;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto x = from_standard(space, d.point(i));
        for (std::size_t j = 0; j < x.size(); ++j) native.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[j];
    }
    return design_csv(native, space.names());
}

/// Reads native-unit points and maps them onto the standard cube.
inline Design read_native_design(const fs::path& path, const InputSpace& space) {
    const auto table = read_csv(path);
    if (table.rows.empty()) throw IoError("'" + path.string() + "' contains no design points");
    const bool weighted = !table.header.empty() && table.header.back() == "weight";
    const std::size_t n = table.rows.front().size() - (weighted ? 1 : 0);
    if (n != space.dim()) {
        throw IoError("'" + path.string() + "' has " + std::to_string(n) + " coordinate columns, space has " +
                      std::to_string(space.dim()));
    }
    Design d;
    d.points.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(n));
    if (weighted) {
        d.kind = DesignKind::TensorGrid;
        d.weights.emplace();
    }
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto z = to_standard(space, std::span<const double>(table.rows[i].data(), n));
        for (std::size_t j = 0; j < n; ++j) d.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = z[j];
        if (weighted) d.weights->push_back(table.rows[i][n]);
    }
    validate(d);
    return d;
}

/// One column; the header defaults to `y`.
inline std::string values_csv(std::span<const double> y, std::string_view header = "y") {
    std::string out(header);
    out += '\n';
    for (double v : y) out += format_double(v) + '\n';
    return out;
}

inline std::vector<double> parse_values(const CsvTable& table, const std::string& source) {
    std::vector<double> y;
    y.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        if (row.size() != 1) throw IoError(source + ": expected one value per row, got " + std::to_string(row.size()));
        y.push_back(row[0]);
    }
    return y;
}

inline std::vector<double> read_values(const fs::path& path) { return parse_values(read_csv(path), path.string()); }

// ---------------------------------------------------------------------------
// JSON: input space
// ---------------------------------------------------------------------------

inline json to_json(const InputSpace& space) {
    json bounds = json::array();
    for (const auto& b : space.bounds()) bounds.push_back({b.lower, b.upper});
    return {{"names", space.names()}, {"bounds", bounds}};
}

inline InputSpace input_space_from_json(const json& j) {
    if (!j.is_object() || !j.contains("bounds")) throw ConfigError("input space needs a 'bounds' array");
    std::vector<std::string> names;
    if (j.contains("names")) names = j.at("names").get<std::vector<std::string>>();
    std::vector<Bounds> bounds;
    for (const auto& b : j.at("bounds")) {
        if (!b.is_array() || b.size() != 2) throw ConfigError("each bound must be a [lower, upper] pair");
        bounds.push_back({b[0].get<double>(), b[1].get<double>()});
    }
    return InputSpace(std::move(names), std::move(bounds));
}

// ---------------------------------------------------------------------------
// JSON: surrogate models
// ---------------------------------------------------------------------------

inline json to_json(const pce::Model& model) {
    const auto& b = model.basis();
    const auto& c = model.coefficients();
    return {{"type", "pce"},
            {"scheme", pce::to_string(b.scheme().kind)},
            {"p", b.scheme().order},
            {"n", b.dim()},
            {"method", pce::to_string(model.method())},
            {"indices", b.indices()},
            {"coefficients", std::vector<double>(c.data(), c.data() + c.size())},
            {"diagnostics",
             {{"condition_estimate", model.diagnostics().condition_estimate},
              {"residual_norm", model.diagnostics().residual_norm},
              {"warnings", model.diagnostics().warnings}}}};
}

inline pce::Model pce_from_json(const json& j) {
    if (j.value("type", "") != "pce") throw ConfigError("model file is not a polynomial chaos model");
    const auto scheme_name = j.at("scheme").get<std::string>();
    const int p = j.at("p").get<int>();
    pce::TruncationScheme scheme;
    if (scheme_name == pce::to_string(pce::Truncation::TotalOrder)) {
        scheme = pce::TruncationScheme::total_order(p);
    } else if (scheme_name == pce::to_string(pce::Truncation::TensorProduct)) {
        scheme = pce::TruncationScheme::tensor_product(p);
    } else {
        throw ConfigError("unknown truncation scheme '" + scheme_name + "'");
    }
    pce::Basis basis(j.at("n").get<std::size_t>(), scheme);
    if (j.at("indices").get<std::vector<pce::MultiIndex>>() != basis.indices()) {
        throw ConfigError("model multi-indices do not match the canonical ordering");
    }
    const auto coeffs = j.at("coefficients").get<std::vector<double>>();
    const auto method = j.at("method").get<std::string>() == pce::to_string(pce::FitMethod::Regression)
                            ? pce::FitMethod::Regression
                            : pce::FitMethod::SpectralProjection;
    pce::FitDiagnostics diag;
    if (j.contains("diagnostics")) {
        const auto& d = j.at("diagnostics");
        diag.condition_estimate = d.value("condition_estimate", 1.0);
        diag.residual_norm = d.value("residual_norm", 0.0);
        diag.warnings = d.value("warnings", std::vector<std::string>{});
    }
    return pce::Model(std::move(basis), Eigen::Map<const Eigen::VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size())),
                      method, std::move(diag));
}

inline const char* family_name(gp::KernelFamily f) {
    return f == gp::KernelFamily::SquaredExponential ? "squared_exponential" : "matern52";
}

inline gp::KernelFamily family_from_name(const std::string& s) {
    if (s == "squared_exponential") return gp::KernelFamily::SquaredExponential;
    if (s == "matern52") return gp::KernelFamily::Matern52;
    throw ConfigError("unknown kernel family '" + s + "'");
}

/// FNV-1a over the 17-digit rendering of every coordinate and output.
inline std::string training_digest(const PointMatrix& points, std::span<const double> y) {
    std::uint64_t h = fnv1a("uqbench-training");
    for (Eigen::Index i = 0; i < points.size(); ++i) h = fnv1a(format_double(points.data()[i]) + ",", h);
    for (double v : y) h = fnv1a(format_double(v) + ";", h);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline json to_json(const gp::Model& model) {
    const auto& l = model.kernel().lengths;
    const auto& beta = model.beta();
    std::vector<std::string> terms;
    for (const auto& t : model.mean_basis().terms) terms.push_back(gp::MeanBasis::describe(t));
    json points = json::array();
    for (Eigen::Index i = 0; i < model.points().rows(); ++i) {
        const auto row = model.points().row(i);
        points.push_back(std::vector<double>(row.data(), row.data() + row.size()));
    }
    const auto& y = model.outputs();
    return {{"type", "gp"},
            {"family", family_name(model.kernel().family)},
            {"lengths", std::vector<double>(l.data(), l.data() + l.size())},
            {"mean_basis", model.mean_basis().terms},
            {"mean_terms", terms},
            {"beta", std::vector<double>(beta.data(), beta.data() + beta.size())},
            {"lambda2", model.lambda2()},
            {"jitter", model.jitter()},
            {"log_likelihood", model.log_likelihood()},
            {"seed", model.seed()},
            {"warnings", model.warnings()},
            {"digest", training_digest(model.points(), std::span<const double>(y.data(), static_cast<std::size_t>(y.size())))},
            {"points", points},
            {"outputs", std::vector<double>(y.data(), y.data() + y.size())}};
}

/// Rebuilds a GP from its file. Factorizations are recomputed at the stored
/// lengths and jitter; the digest guards against edited training data.
inline gp::Model gp_from_json(const json& j) {
    if (j.value("type", "") != "gp") throw ConfigError("model file is not a Gaussian process model");
    const auto pts = j.at("points").get<std::vector<std::vector<double>>>();
    const auto y = j.at("outputs").get<std::vector<double>>();
    if (pts.empty() || pts.size() != y.size()) throw ConfigError("GP model file has inconsistent training data");
    Design d;
    d.points.resize(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(pts.front().size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].size() != pts.front().size()) throw ConfigError("GP model training points have mixed dimensions");
        for (std::size_t k = 0; k < pts[i].size(); ++k) d.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = pts[i][k];
    }
    if (training_digest(d.points, y) != j.at("digest").get<std::string>()) {
        throw ConfigError("GP model digest does not match its training data");
    }
    const auto lengths = j.at("lengths").get<std::vector<double>>();
    gp::Kernel kernel(family_from_name(j.at("family").get<std::string>()),
                      Eigen::Map<const Eigen::VectorXd>(lengths.data(), static_cast<Eigen::Index>(lengths.size())));
    gp::MeanBasis mean{j.at("mean_basis").get<std::vector<std::vector<int>>>()};
    return gp::Model::at_lengths(d, y, std::move(kernel), std::move(mean), j.at("jitter").get<double>(),
                                 j.value("seed", std::uint64_t{0}));
}

// ---------------------------------------------------------------------------
// JSON: metrics
// ---------------------------------------------------------------------------

inline json to_json(const validation::IntervalEstimate& e) {
    json j = {{"point", e.point}, {"lo", e.lo}, {"hi", e.hi}, {"method", validation::to_string(e.method)}};
    if (e.sample_average) j["sample_average"] = *e.sample_average;
    return j;
}

inline json to_json(const validation::PdfCurve& c) {
    json j = {{"grid", c.grid}, {"density", c.density}};
    if (!c.lo.empty()) {
        j["lo"] = c.lo;
        j["hi"] = c.hi;
    }
    return j;
}

inline json to_json(const validation::MetricsReport& r) {
    return {{"surrogate", r.surrogate}, {"rmse", to_json(r.rmse)},       {"mean", to_json(r.mean)},
            {"sd", to_json(r.sd)},      {"exceed2", to_json(r.exceed2)}, {"exceed3", to_json(r.exceed3)},
            {"pdf", to_json(r.pdf)}};
}

inline json to_json(const validation::Reference& r) {
    return {{"mean", to_json(r.mean)},       {"sd", to_json(r.sd)},         {"exceed2", to_json(r.exceed2)},
            {"exceed3", to_json(r.exceed3)}, {"bandwidth", r.bandwidth}, {"pdf", to_json(r.pdf)}};
}

/// Columns value,density,lo,hi; lo and hi repeat the density when no band exists.
inline std::string pdf_csv(const validation::PdfCurve& c) {
    std::string out = "value,density,lo,hi\n";
    const bool band = !c.lo.empty();
    for (std::size_t g = 0; g < c.grid.size(); ++g) {
        out += format_double(c.grid[g]) + ',' + format_double(c.density[g]) + ',' +
               format_double(band ? c.lo[g] : c.density[g]) + ',' + format_double(band ? c.hi[g] : c.density[g]) + '\n';
    }
    return out;
}

}  // namespace uqbench::io
