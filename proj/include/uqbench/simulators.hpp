#pragma once

#include <boost/process.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "uqbench/designs.hpp"
#include "uqbench/domain.hpp"
#include "uqbench/errors.hpp"
#include "uqbench/io.hpp"

namespace uqbench::sim {

namespace fs = std::filesystem;
using io::json;

/// Deterministic black box evaluated on points of the standard cube.
class Simulator {
public:
    virtual ~Simulator() = default;
    // Identifies the simulator in cache files.
    virtual std::string id() const = 0;
    // Required input dimension, or 0 for any.
    virtual std::size_t dim() const { return 0; }
    // One output per row.
    virtual std::vector<double> run(const PointMatrix& points) = 0;
};

// ---------------------------------------------------------------------------
// Builtins
// ---------------------------------------------------------------------------

// exp(-z1) tanh(5 z2)
inline double toy_function(double z1, double z2) { return std::exp(-z1) * std::tanh(5.0 * z2); }

class PointwiseSimulator : public Simulator {
public:
    std::vector<double> run(const PointMatrix& points) override {
        if (dim() && static_cast<std::size_t>(points.cols()) != dim()) {
            throw DomainError("simulator '" + id() + "' takes " + std::to_string(dim()) + " inputs, got " +
                              std::to_string(points.cols()));
        }
        std::vector<double> y(static_cast<std::size_t>(points.rows()));
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            y[static_cast<std::size_t>(i)] = eval(std::span<const double>(points.data() + i * points.cols(),
                                                                          static_cast<std::size_t>(points.cols())));
        }
        return y;
    }

protected:
    virtual double eval(std::span<const double> z) const = 0;
};

class ToySimulator final : public PointwiseSimulator {
public:
    std::string id() const override { return "toy"; }
    std::size_t dim() const override { return 2; }

protected:
    double eval(std::span<const double> z) const override { return toy_function(z[0], z[1]); }
};

/// prod_j (1 + sum_{k=1}^{d} z_j^k / k): tensor degree d in every input.
class ProductPolynomial final : public PointwiseSimulator {
public:
    explicit ProductPolynomial(int degree) : degree_(degree) {
        if (degree < 0) throw ConfigError("product polynomial degree must be >= 0");
    }
    std::string id() const override { return "product-polynomial-" + std::to_string(degree_); }

protected:
    double eval(std::span<const double> z) const override {
        double f = 1.0;
        for (double x : z) {
            double factor = 1.0;
            double power = 1.0;
            for (int k = 1; k <= degree_; ++k) {
                power *= x;
                factor += power / k;
            }
            f *= factor;
        }
        return f;
    }

private:
    int degree_;
};

// sum_j z_j^2
class QuadraticBowl final : public PointwiseSimulator {
public:
    std::string id() const override { return "quadratic-bowl"; }

protected:
    double eval(std::span<const double> z) const override {
        double s = 0.0;
        for (double x : z) s += x * x;
        return s;
    }
};

inline std::vector<std::string> builtin_names() { return {"toy", "product-polynomial", "quadratic-bowl"}; }

inline std::unique_ptr<Simulator> make_builtin(const std::string& name, const json& params = json::object()) {
    if (name == "toy") return std::make_unique<ToySimulator>();
    if (name == "product-polynomial") return std::make_unique<ProductPolynomial>(params.value("degree", 2));
    if (name == "quadratic-bowl") return std::make_unique<QuadraticBowl>();
    throw ConfigError("unknown builtin simulator '" + name + "'");
}

// ---------------------------------------------------------------------------
// External black boxes
// ---------------------------------------------------------------------------

/// File-exchange coupling. The request file is a CSV of native-unit inputs
/// with the space's names as header; the response is one output per row,
/// optionally under a header.
///
/// Command mode runs `command` through /bin/sh. `{request}` and `{response}`
/// in the command are replaced by the file paths; without placeholders both
/// paths are appended as arguments.
///
/// Directory mode drops `request-<digest>.csv` into a watched directory and
/// waits for `response-<digest>.csv` to appear next to it.
struct ExternalSpec {
    std::optional<std::string> command;
    std::optional<fs::path> directory;
    fs::path workdir = "uqbench-exchange";
    double timeout_seconds = 3600.0;
    std::string name = "external";
    fs::path start_dir;  // command working directory; empty means the current one
};

inline ExternalSpec external_spec_from_json(const json& j, const fs::path& base = {}) {
    ExternalSpec spec;
    if (j.contains("command")) spec.command = j.at("command").get<std::string>();
    if (j.contains("directory")) spec.directory = base / j.at("directory").get<std::string>();
    if (spec.command.has_value() == spec.directory.has_value()) {
        throw ConfigError("external simulator needs exactly one of 'command' or 'directory'");
    }
    if (j.contains("workdir")) spec.workdir = base / j.at("workdir").get<std::string>();
    spec.timeout_seconds = j.value("timeout", spec.timeout_seconds);
    if (!(spec.timeout_seconds > 0.0)) throw ConfigError("external simulator timeout must be positive");
    spec.name = j.value("name", spec.command ? *spec.command : spec.directory->string());
    spec.start_dir = base;
    return spec;
}

class ExternalSimulator final : public Simulator {
public:
    ExternalSimulator(ExternalSpec spec, InputSpace space) : spec_(std::move(spec)), space_(std::move(space)) {}

    // Native bounds are part of the identity: the same program under another
    // input space sees different inputs for the same cube point.
    std::string id() const override { return "external:" + spec_.name + ":" + io::to_json(space_).dump(); }
    std::size_t dim() const override { return space_.dim(); }
    std::size_t invocations() const noexcept { return invocations_; }

    std::vector<double> run(const PointMatrix& points) override {
        Design d;
        d.points = points;
        const std::string request = io::native_design_csv(d, space_);
        ++invocations_;
        const fs::path response = spec_.command ? run_command(request) : run_directory(request);
        auto table = io::read_csv(response);
        if (table.rows.size() != static_cast<std::size_t>(points.rows())) {
            throw SimulatorError("response file '" + response.string() + "' has " + std::to_string(table.rows.size()) +
                                 " rows, expected " + std::to_string(points.rows()));
        }
        return io::parse_values(table, response.string());
    }

private:
    fs::path run_command(const std::string& request) {
        fs::create_directories(spec_.workdir);
        const fs::path req = fs::absolute(spec_.workdir / "request.csv");
        const fs::path resp = fs::absolute(spec_.workdir / "response.csv");
        fs::remove(resp);
        io::write_text(req, request);

        std::string cmd = *spec_.command;
        const bool placeholders = cmd.find("{request}") != std::string::npos || cmd.find("{response}") != std::string::npos;
        auto replace_all = [&](const std::string& key, const std::string& value) {
            for (auto pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos + value.size())) {
                cmd.replace(pos, key.size(), value);
            }
        };
        const std::string qreq = "'" + req.string() + "'";
        const std::string qresp = "'" + resp.string() + "'";
        if (placeholders) {
            replace_all("{request}", qreq);
            replace_all("{response}", qresp);
        } else {
            cmd += " " + qreq + " " + qresp;
        }

        namespace bp = boost::process;
        const fs::path cwd = spec_.start_dir.empty() ? fs::current_path() : fs::absolute(spec_.start_dir);
        bp::child child("/bin/sh", "-c", cmd, bp::std_in.close(), bp::start_dir(cwd.string()));
        const auto limit = std::chrono::duration<double>(spec_.timeout_seconds);
        if (!child.wait_for(std::chrono::duration_cast<std::chrono::milliseconds>(limit))) {
            child.terminate();
            throw SimulatorError("external command timed out after " + io::format_double(spec_.timeout_seconds) + " s: " + cmd);
        }
        if (child.exit_code() != 0) {
            throw SimulatorError("external command exited with status " + std::to_string(child.exit_code()) + ": " + cmd);
        }
        if (!fs::exists(resp)) throw SimulatorError("external command wrote no response file '" + resp.string() + "'");
        return resp;
    }

    fs::path run_directory(const std::string& request) {
        const fs::path& dir = *spec_.directory;
        fs::create_directories(dir);
        char tag[17];
        std::snprintf(tag, sizeof tag, "%016llx", static_cast<unsigned long long>(fnv1a(request)));
        const fs::path req = dir / ("request-" + std::string(tag) + ".csv");
        const fs::path resp = dir / ("response-" + std::string(tag) + ".csv");
        if (!fs::exists(resp)) {
            // Write-then-rename so watchers never see a partial request.
            const fs::path tmp = dir / ("request-" + std::string(tag) + ".tmp");
            io::write_text(tmp, request);
            fs::rename(tmp, req);
            const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(spec_.timeout_seconds);
            while (!fs::exists(resp)) {
                if (std::chrono::steady_clock::now() > deadline) {
                    throw SimulatorError("no response '" + resp.string() + "' after " +
                                         io::format_double(spec_.timeout_seconds) + " s");
                }
                std::this_thread::sleep_for(std::chrono::milliseconds(50));
            }
        }
        return resp;
    }

    ExternalSpec spec_;
    InputSpace space_;
    std::size_t invocations_ = 0;
};

// ---------------------------------------------------------------------------
// Evaluation cache
// ---------------------------------------------------------------------------

/// `UQBENCH_CACHE_DIR`, else `$XDG_CACHE_HOME/uqbench`, else `~/.cache/uqbench`.
inline fs::path default_cache_dir() {
    if (const char* dir = std::getenv("UQBENCH_CACHE_DIR"); dir && *dir) return dir;
    if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) return fs::path(xdg) / "uqbench";
    if (const char* home = std::getenv("HOME"); home && *home) return fs::path(home) / ".cache" / "uqbench";
    return fs::temp_directory_path() / "uqbench-cache";
}

// 17-digit coordinates joined by commas.
inline std::string point_key(std::span<const double> z) {
    std::string key;
    for (std::size_t j = 0; j < z.size(); ++j) {
        if (j) key += ',';
        key += io::format_double(z[j]);
    }
    return key;
}

struct CacheStats {
    std::size_t unique_points = 0;   // distinct points requested through this evaluator
    std::size_t fresh = 0;           // points the simulator actually ran
    std::size_t persistent_hits = 0; // points served from the cache file
    std::size_t batches = 0;         // simulator invocations
};

/// Runs every distinct point once. With a cache file, results persist across
/// processes: one CSV row per point, coordinates then output.
class Evaluator {
public:
    explicit Evaluator(Simulator& simulator, std::optional<fs::path> cache_file = std::nullopt)
        : sim_(simulator), cache_file_(std::move(cache_file)) {
        if (cache_file_ && fs::exists(*cache_file_)) {
            const auto table = io::read_csv(*cache_file_);
            for (const auto& row : table.rows) {
                if (row.size() < 2) continue;
                stored_[point_key(std::span<const double>(row.data(), row.size() - 1))] = row.back();
            }
        }
    }

    std::vector<double> evaluate(const Design& design) {
        if (sim_.dim() && design.dim() != sim_.dim()) {
            throw DomainError("simulator '" + sim_.id() + "' takes " + std::to_string(sim_.dim()) + " inputs, design has " +
                              std::to_string(design.dim()));
        }
        std::vector<std::string> keys(design.size());
        std::vector<std::size_t> missing;
        std::set<std::string> pending;
        for (std::size_t i = 0; i < design.size(); ++i) {
            keys[i] = point_key(design.point(i));
            if (requested_.insert(keys[i]).second) {
                ++stats_.unique_points;
                if (stored_.count(keys[i])) ++stats_.persistent_hits;
            }
            if (!stored_.count(keys[i]) && pending.insert(keys[i]).second) missing.push_back(i);
        }
        if (!missing.empty()) {
            PointMatrix batch(static_cast<Eigen::Index>(missing.size()), static_cast<Eigen::Index>(design.dim()));
            for (std::size_t r = 0; r < missing.size(); ++r) {
                batch.row(static_cast<Eigen::Index>(r)) = design.points.row(static_cast<Eigen::Index>(missing[r]));
            }
            ++stats_.batches;
            const auto out = sim_.run(batch);
            if (out.size() != missing.size()) {
                throw SimulatorError("simulator '" + sim_.id() + "' returned " + std::to_string(out.size()) +
                                     " outputs for " + std::to_string(missing.size()) + " points");
            }
            std::string appended;
            for (std::size_t r = 0; r < missing.size(); ++r) {
                if (!std::isfinite(out[r])) {
                    throw SimulatorError("simulator '" + sim_.id() + "' returned a non-finite output at point (" +
                                         keys[missing[r]] + ")");
                }
                stored_[keys[missing[r]]] = out[r];
                appended += keys[missing[r]] + "," + io::format_double(out[r]) + "\n";
            }
            stats_.fresh += missing.size();
            if (cache_file_) append(appended);
        }
        std::vector<double> y(design.size());
        for (std::size_t i = 0; i < design.size(); ++i) y[i] = stored_.at(keys[i]);
        return y;
    }

    const CacheStats& stats() const noexcept { return stats_; }
    std::size_t requested_keys() const noexcept { return requested_.size(); }

private:
    void append(const std::string& rows) {
        fs::create_directories(cache_file_->parent_path());
        std::ofstream out(*cache_file_, std::ios::app | std::ios::binary);
        if (!out) throw IoError("cannot append to cache file '" + cache_file_->string() + "'");
        out << rows;
    }

    Simulator& sim_;
    std::optional<fs::path> cache_file_;
    std::map<std::string, double> stored_;
    std::set<std::string> requested_;
    CacheStats stats_;
};

// Cache file for a simulator: <dir>/<fnv1a(id)>.csv
inline fs::path cache_file_for(const Simulator& sim, const fs::path& dir = default_cache_dir()) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(sim.id())));
    return dir / (std::string(buf) + ".csv");
}

}  // namespace uqbench::sim
