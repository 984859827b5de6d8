#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "experiment_config.hpp"
#include "meerts/harness.hpp"

namespace meerts::io {

/// Fixed six-decimal form; NaN prints as NA.
std::string format_number(double v);

/// RFC 4180 quoting: fields containing a comma, quote, CR or LF are quoted.
std::string csv_escape(std::string_view field);

/// FNV-1a 64-bit digest, hex encoded.
std::string fnv1a_hex(std::string_view bytes);

using Cell = std::variant<std::string, double, std::int64_t>;

/// Column-ordered table rendered either as CSV (header + LF rows) or as a JSON
/// array of records (NaN becomes null).
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    std::string to_csv() const;
    std::string to_json() const;
    std::string render(OutputFormat format) const;
};

/// step, algorithm, component, msd_db. Steps are 1-based.
Table msd_curves_table(const RunResult& result);
/// step, algorithm, component, mse_db.
Table mse_curves_table(const RunResult& result);
/// algorithm, component, steady_state_msd_db, mean_fpi_count, wallclock_sec.
/// wallclock_sec is NA unless timing is true.
Table summary_table(const RunResult& result, bool timing);

struct SweepResult {
    std::string scenario;
    std::vector<SweepPoint> points;
};

/// parameter, value, scenario, algorithm, <component>_msd_db..., mean_fpi_count, wallclock_sec.
/// One row per swept value per algorithm.
Table sweep_summary_table(SweepParameter parameter, const std::vector<SweepResult>& sweeps, bool timing);
/// parameter, value, scenario, step, algorithm, component, msd_db.
Table sweep_curves_table(SweepParameter parameter, const std::vector<SweepResult>& sweeps);

/// One output file, named and fully rendered before anything is written.
struct OutputFile {
    std::string name;
    std::string content;
};

std::vector<OutputFile> run_outputs(const ExperimentConfig& cfg, const RunResult& result);
std::vector<OutputFile> sweep_outputs(const ExperimentConfig& cfg, const std::vector<SweepResult>& sweeps);

nlohmann::ordered_json run_statistics(const RunResult& result);

/**
 * Manifest: the resolved config (replayable with --config), run statistics
 * and a digest of every other output file. Ends with a newline.
 */
std::string manifest_text(std::string_view command, const ExperimentConfig& cfg,
                          const nlohmann::ordered_json& statistics, const std::vector<OutputFile>& files);

inline constexpr const char* kManifestName = "manifest.json";

/// Creates dir and writes each file in order. Throws Error on I/O failure.
void write_outputs(const std::filesystem::path& dir, const std::vector<OutputFile>& files);

}  // namespace meerts::io
