#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "uqbench/bench.hpp"
#include "uqbench/io.hpp"
#include "uqbench/plots.hpp"

namespace uqbench::bench {

/// Output directory layout:
///   result.json            run result (deterministic for a given config)
///   timing.json            wall-clock and cache traffic
///   reference.csv          simulator metrics with bootstrap intervals
///   class<c>.csv           metrics against design size
///   pdf/...csv             density curves
///   plots/...svg           figures
inline std::vector<std::filesystem::path> write_run(const RunResult& r, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::vector<fs::path> written;
    auto put = [&](const fs::path& p, const std::string& text) {
        io::write_text(p, text);
        written.push_back(p);
    };
    put(dir / "result.json", to_json(r).dump(2) + "\n");
    put(dir / "timing.json", timing_json(r).dump(2) + "\n");
    put(dir / "reference.csv", reference_csv(r.reference));
    put(dir / "pdf" / "simulator.csv", io::pdf_csv(r.reference.pdf));
    for (const auto& d : r.designs) put(dir / ("class" + std::to_string(d.design_class) + ".csv"), class_csv(r, d.design_class));
    for (const auto& c : r.cells) {
        if (!c.report) continue;
        put(dir / "pdf" / ("class" + std::to_string(c.design_class) + "_" + to_string(c.method) + "_m" +
                           std::to_string(c.size) + ".csv"),
            io::pdf_csv(c.report->pdf));
    }
    for (auto& p : plots::emit_plots(r, dir / "plots")) written.push_back(std::move(p));
    return written;
}

}  // namespace uqbench::bench
