// meerts: run Monte-Carlo experiments, parameter sweeps and complexity reports.
//
// Exit status: 0 success, 1 I/O or internal error, 2 invalid config or
// arguments, 3 numerical abort during an experiment.

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "experiment_config.hpp"
#include "meerts/theory_analysis.hpp"
#include "report_writer.hpp"

namespace {

using namespace meerts;
using namespace meerts::io;

constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string format;
    unsigned jobs = 0;
    bool timing = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "Experiment config (YAML, or a manifest.json from an earlier run)")
        ->required();
    cmd->add_option("--seed", o.seed, "Override the config seed");
    cmd->add_option("--out-dir", o.out_dir, "Override output.dir");
    cmd->add_option("--format", o.format, "Override output.format")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--jobs", o.jobs, "Worker threads for Monte-Carlo runs (default: $MEERTS_JOBS, else hardware threads)")
        ->check(CLI::Range(1u, 1024u));
    cmd->add_flag("--timing", o.timing, "Record wall-clock time per run (outputs are then not byte-reproducible)");
}

ExperimentConfig resolve(const CommonOptions& o) {
    ExperimentConfig cfg = load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
    if (!o.format.empty()) cfg.format = *parse_output_format(o.format);
    if (o.timing) cfg.timing = true;
    return cfg;
}

/// --jobs, else MEERTS_JOBS, else the hardware thread count.
unsigned resolve_jobs(unsigned flag) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv("MEERTS_JOBS"); env && *env) {
        const std::string_view s(env);
        unsigned v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || v < 1 || v > 1024)
            throw ConfigError("MEERTS_JOBS: expected an integer in [1, 1024], got '" + std::string(s) + "'");
        return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

RunOptions run_options(const ExperimentConfig& cfg, const CommonOptions& o) {
    RunOptions opts;
    opts.seed = cfg.seed;
    opts.jobs = resolve_jobs(o.jobs);
    return opts;
}

void print_summary(const RunResult& r) {
    std::printf("%s: %zu of %zu runs used\n", r.scenario.c_str(), r.runs_used, r.runs_requested);
    std::printf("  %-10s", "algorithm");
    for (const auto& c : r.components) std::printf(" %10s", c.c_str());
    std::printf(" %8s\n", "M");
    for (const auto& a : r.algorithms) {
        std::printf("  %-10s", std::string(algorithm_name(a.algorithm)).c_str());
        for (Index c = 0; c < a.steady_state_db.size(); ++c) std::printf(" %10.3f", a.steady_state_db[c]);
        const double m = a.mean_fpi_count();
        if (std::isnan(m))
            std::printf(" %8s\n", "-");
        else
            std::printf(" %8.3f\n", m);
    }
}

int cmd_run(const CommonOptions& o) {
    const ExperimentConfig cfg = resolve(o);
    const RunResult result = run_scenario(cfg.scenario, cfg.algorithms, cfg.mee, run_options(cfg, o));
    write_outputs(cfg.output_dir, run_outputs(cfg, result));
    print_summary(result);
    std::printf("results written to %s\n", cfg.output_dir.c_str());
    return 0;
}

int cmd_sweep(const CommonOptions& o) {
    const ExperimentConfig cfg = resolve(o);
    if (!cfg.sweep) throw ConfigError(o.config + ": sweep: missing required field");
    const auto& sw = *cfg.sweep;
    const std::vector<ScenarioSpec> targets = sw.scenarios.empty() ? std::vector{cfg.scenario} : sw.scenarios;

    std::vector<SweepResult> results;
    for (const auto& spec : targets) {
        MeeConfig mee = cfg.mee;
        mee.sigma = spec.mee_sigma;
        SweepResult r{spec.name, sweep(sw.parameter, sw.values, spec, cfg.algorithms, mee, run_options(cfg, o))};
        for (const auto& p : r.points) {
            std::printf("%s = %g\n", std::string(sweep_parameter_name(sw.parameter)).c_str(), p.value);
            print_summary(p.result);
        }
        results.push_back(std::move(r));
    }
    write_outputs(cfg.output_dir, sweep_outputs(cfg, results));
    std::printf("results written to %s\n", cfg.output_dir.c_str());
    return 0;
}

int cmd_complexity(std::int64_t n, std::int64_t m, std::int64_t mf, std::int64_t mb) {
    if (n < 1 || m < 1 || mf < 1 || mb < 1) {
        std::fprintf(stderr, "complexity: n, m, Mf and Mb must be positive integers\n");
        return kExitConfig;
    }
    std::printf("n = %lld, m = %lld, Mf = %lld, Mb = %lld\n", static_cast<long long>(n), static_cast<long long>(m),
                static_cast<long long>(mf), static_cast<long long>(mb));
    std::printf("O(n^3) and O(m^3) terms are counted with unit coefficient.\n\n");
    std::printf("%-24s %14s\n", "smoother", "operations");
    std::printf("%-24s %14lld\n", "MC-RTSL", static_cast<long long>(flops_mc_rtsl(n, m)));
    std::printf("%-24s %14lld\n", "MEE-RTS", static_cast<long long>(flops_mee_rts(n, m, mf, mb)));
    std::printf("%-24s %14lld\n", "  MC forward", static_cast<long long>(flops_mc_forward(n, m)));
    std::printf("%-24s %14lld\n", "  MC backward", static_cast<long long>(flops_mc_backward(n, m)));
    std::printf("%-24s %14lld\n", "  MEE forward", static_cast<long long>(flops_mee_forward(n, m, mf)));
    std::printf("%-24s %14lld\n", "  MEE backward", static_cast<long long>(flops_mee_backward(n, mb)));
    std::printf("\nbackward pass, per time step and per fixed-point iteration\n");
    std::printf("%-22s %16s %10s %8s\n", "equation", "multiplications", "additions", "special");
    for (const auto& row : backward_cost_table(n))
        std::printf("%-22s %16lld %10lld %8lld\n", row.equation.c_str(), static_cast<long long>(row.multiplications),
                    static_cast<long long>(row.additions), static_cast<long long>(row.special));
    return 0;
}

int cmd_list_scenarios() {
    for (const auto& s : scenario_catalog()) {
        std::printf("%s\n", s.name.c_str());
        std::printf("  %s\n", s.description.c_str());
        std::printf("  model %s, dt %g, horizon %zu, runs %zu, mee_sigma %g, mcc_sigma %g\n",
                    std::string(model_kind_name(s.model)).c_str(), s.dt, s.horizon, s.mc_runs, s.mee_sigma,
                    s.mcc_sigma);
        std::string q;
        for (const auto& c : s.process_noise.components) q += (q.empty() ? "" : ", ") + describe(c);
        std::printf("  process noise: %s%s\n", q.c_str(), s.process_noise.shaping.size() ? " (shaped)" : "");
        for (std::size_t k = 0; k < s.measurement_noise.size(); ++k) {
            std::string r;
            for (const auto& c : s.measurement_noise[k].components) r += (r.empty() ? "" : ", ") + describe(c);
            std::printf("  measurement noise [%zu]: %s\n", k, r.c_str());
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust state estimation experiments: MEE-RTS smoother and baselines"};
    app.require_subcommand(1);

    CommonOptions run_opts;
    CLI::App* run = app.add_subcommand("run", "Run every configured algorithm on one scenario");
    add_common(run, run_opts);

    CommonOptions sweep_opts;
    CLI::App* sw = app.add_subcommand("sweep", "Repeat a run over the values of sigma, tau or lambda");
    add_common(sw, sweep_opts);

    std::int64_t n = 0, m = 0, mf = 0, mb = 0;
    CLI::App* cx = app.add_subcommand("complexity", "Print operation counts for state size n, measurement size m");
    cx->add_option("n", n, "State dimension")->required();
    cx->add_option("m", m, "Measurement dimension")->required();
    cx->add_option("Mf", mf, "Forward fixed-point iterations")->required();
    cx->add_option("Mb", mb, "Backward fixed-point iterations")->required();

    CLI::App* ls = app.add_subcommand("list-scenarios", "List the built-in scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*run) return cmd_run(run_opts);
        if (*sw) return cmd_sweep(sweep_opts);
        if (*cx) return cmd_complexity(n, m, mf, mb);
        if (*ls) return cmd_list_scenarios();
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitConfig;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical abort: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    }
    return 0;
}
