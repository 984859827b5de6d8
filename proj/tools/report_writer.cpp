#include "report_writer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace meerts::io {

std::string format_number(double v) {
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    // "-0.000000" and "0.000000" are the same value
    if (std::string_view(buf) == "-0.000000") return "0.000000";
    return buf;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------

namespace {

std::string cell_csv(const Cell& c) {
    if (const auto* s = std::get_if<std::string>(&c)) return csv_escape(*s);
    if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
    return std::to_string(std::get<std::int64_t>(c));
}

nlohmann::ordered_json cell_json(const Cell& c) {
    if (const auto* s = std::get_if<std::string>(&c)) return *s;
    if (const auto* d = std::get_if<double>(&c)) {
        if (!std::isfinite(*d)) return nullptr;
        return *d;
    }
    return std::get<std::int64_t>(c);
}

}  // namespace

std::string Table::to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(columns[i]);
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += cell_csv(row[i]);
        }
        out += '\n';
    }
    return out;
}

std::string Table::to_json() const {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        nlohmann::ordered_json rec = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size(); ++i) rec[columns[i]] = cell_json(row[i]);
        arr.push_back(std::move(rec));
    }
    return arr.dump(1) + "\n";
}

std::string Table::render(OutputFormat format) const { return format == OutputFormat::json ? to_json() : to_csv(); }

// ---------------------------------------------------------------------------

namespace {

Table curves_table(const RunResult& result, const char* value_column, Matrix AlgorithmSummary::* curve) {
    Table t;
    t.columns = {"step", "algorithm", "component", value_column};
    if (result.algorithms.empty()) return t;
    const Index T = (result.algorithms.front().*curve).rows();
    for (Index k = 0; k < T; ++k)
        for (const auto& a : result.algorithms)
            for (std::size_t c = 0; c < result.components.size(); ++c)
                t.rows.push_back({static_cast<std::int64_t>(k + 1), std::string(algorithm_name(a.algorithm)),
                                  result.components[c], (a.*curve)(k, static_cast<Index>(c))});
    return t;
}

double wallclock(const AlgorithmSummary& a, bool timing) {
    return timing ? a.wallclock_sec : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

Table msd_curves_table(const RunResult& result) { return curves_table(result, "msd_db", &AlgorithmSummary::msd_db); }

Table mse_curves_table(const RunResult& result) { return curves_table(result, "mse_db", &AlgorithmSummary::mse_db); }

Table summary_table(const RunResult& result, bool timing) {
    Table t;
    t.columns = {"algorithm", "component", "steady_state_msd_db", "mean_fpi_count", "wallclock_sec"};
    for (const auto& a : result.algorithms)
        for (std::size_t c = 0; c < result.components.size(); ++c)
            t.rows.push_back({std::string(algorithm_name(a.algorithm)), result.components[c],
                              a.steady_state_db[static_cast<Index>(c)], a.mean_fpi_count(), wallclock(a, timing)});
    return t;
}

Table sweep_summary_table(SweepParameter parameter, const std::vector<SweepResult>& sweeps, bool timing) {
    Table t;
    t.columns = {"parameter", "value", "scenario", "algorithm"};
    std::vector<std::string> components;
    for (const auto& s : sweeps)
        if (!s.points.empty() && s.points.front().result.components.size() > components.size())
            components = s.points.front().result.components;
    for (const auto& c : components) t.columns.push_back(c + "_msd_db");
    t.columns.push_back("mean_fpi_count");
    t.columns.push_back("wallclock_sec");

    const std::string pname(sweep_parameter_name(parameter));
    for (const auto& s : sweeps) {
        for (const auto& p : s.points) {
            for (const auto& a : p.result.algorithms) {
                std::vector<Cell> row{pname, p.value, s.scenario, std::string(algorithm_name(a.algorithm))};
                // Scenarios with fewer states leave the extra columns empty;
                // the full-state value always sits in the last column.
                const auto& comps = p.result.components;
                for (std::size_t c = 0; c < components.size(); ++c) {
                    const std::string& want = components[c];
                    double v = std::numeric_limits<double>::quiet_NaN();
                    for (std::size_t k = 0; k < comps.size(); ++k)
                        if (comps[k] == want) v = a.steady_state_db[static_cast<Index>(k)];
                    row.push_back(v);
                }
                row.push_back(a.mean_fpi_count());
                row.push_back(wallclock(a, timing));
                t.rows.push_back(std::move(row));
            }
        }
    }
    return t;
}

Table sweep_curves_table(SweepParameter parameter, const std::vector<SweepResult>& sweeps) {
    Table t;
    t.columns = {"parameter", "value", "scenario", "step", "algorithm", "component", "msd_db"};
    const std::string pname(sweep_parameter_name(parameter));
    for (const auto& s : sweeps) {
        for (const auto& p : s.points) {
            const Table curves = msd_curves_table(p.result);
            for (const auto& r : curves.rows) t.rows.push_back({pname, p.value, s.scenario, r[0], r[1], r[2], r[3]});
        }
    }
    return t;
}

// ---------------------------------------------------------------------------

namespace {

std::string ext(OutputFormat f) { return f == OutputFormat::json ? ".json" : ".csv"; }

nlohmann::ordered_json nan_to_null(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

}  // namespace

nlohmann::ordered_json run_statistics(const RunResult& result) {
    nlohmann::ordered_json j;
    j["scenario"] = result.scenario;
    j["runs_requested"] = result.runs_requested;
    j["runs_used"] = result.runs_used;
    j["runs_dropped"] = result.runs_dropped;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(result.input_checksum));
    j["input_checksum"] = std::string(buf);
    auto algs = nlohmann::ordered_json::array();
    for (const auto& a : result.algorithms) {
        nlohmann::ordered_json e;
        e["algorithm"] = std::string(algorithm_name(a.algorithm));
        e["forward_fpi_count"] = nan_to_null(a.forward_iterations);
        e["backward_fpi_count"] = nan_to_null(a.backward_iterations);
        e["failures"] = a.failures;
        e["covariance_repairs"] = a.covariance_repairs;
        algs.push_back(std::move(e));
    }
    j["algorithms"] = std::move(algs);
    return j;
}

std::vector<OutputFile> run_outputs(const ExperimentConfig& cfg, const RunResult& result) {
    const std::string e = ext(cfg.format);
    std::vector<OutputFile> files;
    files.push_back({"msd_curves" + e, msd_curves_table(result).render(cfg.format)});
    files.push_back({"mse_curves" + e, mse_curves_table(result).render(cfg.format)});
    files.push_back({"summary" + e, summary_table(result, cfg.timing).render(cfg.format)});
    files.push_back({kManifestName, manifest_text("run", cfg, run_statistics(result), files)});
    return files;
}

std::vector<OutputFile> sweep_outputs(const ExperimentConfig& cfg, const std::vector<SweepResult>& sweeps) {
    const SweepParameter p = cfg.sweep ? cfg.sweep->parameter : SweepParameter::sigma;
    const std::string e = ext(cfg.format);
    std::vector<OutputFile> files;
    files.push_back({"sweep_summary" + e, sweep_summary_table(p, sweeps, cfg.timing).render(cfg.format)});
    files.push_back({"sweep_curves" + e, sweep_curves_table(p, sweeps).render(cfg.format)});
    auto stats = nlohmann::ordered_json::array();
    for (const auto& s : sweeps) {
        for (const auto& pt : s.points) {
            nlohmann::ordered_json j;
            j["value"] = pt.value;
            j.update(run_statistics(pt.result));
            stats.push_back(std::move(j));
        }
    }
    files.push_back({kManifestName, manifest_text("sweep", cfg, stats, files)});
    return files;
}

std::string manifest_text(std::string_view command, const ExperimentConfig& cfg,
                          const nlohmann::ordered_json& statistics, const std::vector<OutputFile>& files) {
    nlohmann::ordered_json m;
    m["manifest_version"] = 1;
    m["command"] = std::string(command);
    m["config"] = config_to_json(cfg);
    m["results"] = statistics;
    auto outs = nlohmann::ordered_json::array();
    for (const auto& f : files) outs.push_back({{"file", f.name}, {"fnv1a64", fnv1a_hex(f.content)}});
    m["outputs"] = std::move(outs);
    return m.dump(2) + "\n";
}

void write_outputs(const std::filesystem::path& dir, const std::vector<OutputFile>& files) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
    for (const auto& f : files) {
        const auto path = dir / f.name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(f.content.data(), static_cast<std::streamsize>(f.content.size()));
        if (!out) throw Error("cannot write " + path.string());
    }
}

}  // namespace meerts::io
