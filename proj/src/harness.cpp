#include "meerts/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "meerts/forward_filters.hpp"
#include "meerts/smoothers.hpp"

namespace meerts {

namespace {

constexpr std::size_t kBlockSize = 8;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr Algorithm kAllAlgorithms[] = {Algorithm::kf,     Algorithm::rts,     Algorithm::mckf,
                                        Algorithm::mc_rts, Algorithm::mee_kf,  Algorithm::mee_rts,
                                        Algorithm::mee_erts};

}  // namespace

std::string_view algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::kf: return "KF";
        case Algorithm::rts: return "RTS";
        case Algorithm::mckf: return "MCKF";
        case Algorithm::mc_rts: return "MC-RTS";
        case Algorithm::mee_kf: return "MEE-KF";
        case Algorithm::mee_rts: return "MEE-RTS";
        case Algorithm::mee_erts: return "MEE-ERTS";
    }
    return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
    for (auto a : kAllAlgorithms)
        if (algorithm_name(a) == name) return a;
    if (name == "R-MEEKF") return Algorithm::mee_kf;
    return std::nullopt;
}

bool uses_fixed_point(Algorithm a) {
    return a == Algorithm::mee_kf || a == Algorithm::mee_rts || a == Algorithm::mee_erts;
}

bool is_smoother(Algorithm a) {
    return a == Algorithm::rts || a == Algorithm::mc_rts || a == Algorithm::mee_rts || a == Algorithm::mee_erts;
}

double AlgorithmSummary::mean_fpi_count() const {
    if (!uses_fixed_point(algorithm)) return kNaN;
    if (!is_smoother(algorithm)) return forward_iterations;
    return 0.5 * (forward_iterations + backward_iterations);
}

const AlgorithmSummary& RunResult::at(Algorithm a) const {
    for (const auto& s : algorithms)
        if (s.algorithm == a) return s;
    throw ConfigError("run result has no entry for " + std::string(algorithm_name(a)));
}

std::string_view sweep_parameter_name(SweepParameter p) {
    switch (p) {
        case SweepParameter::sigma: return "sigma";
        case SweepParameter::tau: return "tau";
        case SweepParameter::lambda: return "lambda";
    }
    return "unknown";
}

std::optional<SweepParameter> parse_sweep_parameter(std::string_view name) {
    for (auto p : {SweepParameter::sigma, SweepParameter::tau, SweepParameter::lambda})
        if (sweep_parameter_name(p) == name) return p;
    return std::nullopt;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t fnv1a(const Vector& v, std::uint64_t h) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(v.data());
    for (std::size_t i = 0; i < static_cast<std::size_t>(v.size()) * sizeof(double); ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

struct AlgoRun {
    std::vector<Vector> estimates;
    double forward_iterations = kNaN;
    double backward_iterations = kNaN;
    double seconds = 0.0;
    std::size_t repairs = 0;
    bool failed = false;
    std::string error;
};

struct PassCache {
    std::optional<ForwardPass> pass;
    double seconds = 0.0;
    bool failed = false;
    std::string error;
};

std::vector<Vector> means_of(const std::vector<GaussianBelief>& beliefs) {
    std::vector<Vector> out;
    out.reserve(beliefs.size());
    for (const auto& b : beliefs) out.push_back(b.mean);
    return out;
}

class RunExecutor {
public:
    RunExecutor(const ScenarioSpec& spec, const MeeConfig& cfg)
        : spec_(spec), cfg_(cfg), nonlinear_(spec.nonlinear_model()) {
        if (!spec.nonlinear()) linear_ = spec.linear_model();
    }

    std::vector<AlgoRun> execute(const SimulatedRun& sim, std::span<const Algorithm> algorithms) const {
        std::map<ForwardKind, PassCache> linear_passes;
        std::map<ForwardKind, PassCache> extended_passes;
        std::vector<AlgoRun> out;
        out.reserve(algorithms.size());
        for (Algorithm a : algorithms) out.push_back(run_one(a, sim, linear_passes, extended_passes));
        return out;
    }

private:
    ForwardSettings settings(ForwardKind kind) const {
        ForwardSettings s;
        s.kind = kind;
        s.mcc_sigma = spec_.mcc_sigma;
        s.mee = cfg_;
        return s;
    }

    PassCache& pass(ForwardKind kind, bool extended, const SimulatedRun& sim,
                    std::map<ForwardKind, PassCache>& linear_passes,
                    std::map<ForwardKind, PassCache>& extended_passes) const {
        auto& cache = extended ? extended_passes : linear_passes;
        auto it = cache.find(kind);
        if (it != cache.end()) return it->second;
        PassCache& c = cache[kind];
        const auto start = Clock::now();
        try {
            if (extended)
                c.pass = run_forward(nonlinear_, sim.init, sim.trajectory.measurements, settings(kind));
            else
                c.pass = run_forward(*linear_, sim.init, sim.trajectory.measurements, settings(kind));
        } catch (const NumericalError& e) {
            c.failed = true;
            c.error = e.what();
        }
        c.seconds = seconds_since(start);
        return c;
    }

    AlgoRun run_one(Algorithm a, const SimulatedRun& sim, std::map<ForwardKind, PassCache>& linear_passes,
                    std::map<ForwardKind, PassCache>& extended_passes) const {
        ForwardKind kind = ForwardKind::kalman;
        if (a == Algorithm::mckf || a == Algorithm::mc_rts) kind = ForwardKind::correntropy;
        if (uses_fixed_point(a)) kind = ForwardKind::mee;
        const bool extended = spec_.nonlinear() || a == Algorithm::mee_erts;

        AlgoRun r;
        PassCache& c = pass(kind, extended, sim, linear_passes, extended_passes);
        r.seconds = c.seconds;
        if (c.failed) {
            r.failed = true;
            r.error = c.error;
            return r;
        }
        const ForwardPass& fp = *c.pass;
        if (kind == ForwardKind::mee) r.forward_iterations = fp.mean_iterations();
        if (!is_smoother(a)) {
            r.estimates = means_of(fp.filtered);
            return r;
        }

        const auto start = Clock::now();
        try {
            SmootherOutput so;
            if (extended) {
                switch (a) {
                    case Algorithm::rts: so = rts_smooth(fp, nonlinear_); break;
                    case Algorithm::mc_rts: so = mc_rts_backward(fp, nonlinear_, spec_.mcc_sigma); break;
                    default: so = mee_rts_backward(fp, nonlinear_, cfg_); break;
                }
            } else {
                switch (a) {
                    case Algorithm::rts: so = rts_smooth(fp.filtered, fp.predicted, *linear_); break;
                    case Algorithm::mc_rts:
                        so = mc_rts_backward(fp.filtered, fp.predicted, *linear_, spec_.mcc_sigma);
                        break;
                    default: so = mee_rts_backward(fp.filtered, fp.predicted, *linear_, cfg_); break;
                }
            }
            if (uses_fixed_point(a)) {
                // the last step is the filtered boundary and carries no iteration
                const auto& it = so.iterations;
                r.backward_iterations =
                    it.size() > 1 ? std::accumulate(it.begin(), it.end() - 1, 0.0) / double(it.size() - 1) : 0.0;
            }
            r.repairs = so.covariance_repairs;
            r.estimates = means_of(so.smoothed);
        } catch (const NumericalError& e) {
            r.failed = true;
            r.error = e.what();
        }
        r.seconds += seconds_since(start);
        return r;
    }

    const ScenarioSpec& spec_;
    const MeeConfig& cfg_;
    NonlinearStateSpace nonlinear_;
    std::optional<LinearStateSpace> linear_;
};

/// Partial sums over one block of runs, reduced in block order.
struct BlockSums {
    std::vector<Matrix> sum_db;
    std::vector<Matrix> sum_sq;
    std::vector<double> sum_forward_iterations;
    std::vector<double> sum_backward_iterations;
    std::vector<double> sum_seconds;
    std::vector<std::size_t> failures;
    std::vector<std::size_t> repairs;
    std::size_t runs_used = 0;
    std::size_t runs_dropped = 0;
    std::uint64_t checksum = 0;
    std::vector<std::string> errors;

    BlockSums(std::size_t algos, std::size_t T, Index cols)
        : sum_db(algos, Matrix::Zero(static_cast<Index>(T), cols)),
          sum_sq(algos, Matrix::Zero(static_cast<Index>(T), cols)),
          sum_forward_iterations(algos, 0.0),
          sum_backward_iterations(algos, 0.0),
          sum_seconds(algos, 0.0),
          failures(algos, 0),
          repairs(algos, 0) {}
};

void accumulate_run(BlockSums& sums, const SimulatedRun& sim, const std::vector<AlgoRun>& runs) {
    bool any_failed = false;
    for (std::size_t a = 0; a < runs.size(); ++a) {
        if (runs[a].failed) {
            ++sums.failures[a];
            any_failed = true;
            if (sums.errors.size() < 4) sums.errors.push_back(runs[a].error);
        }
    }
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& y : sim.trajectory.measurements) h = fnv1a(y, h);
    sums.checksum ^= h;
    if (any_failed) {
        ++sums.runs_dropped;
        return;
    }
    ++sums.runs_used;
    const auto& states = sim.trajectory.states;
    const Index n = states.front().size();
    for (std::size_t a = 0; a < runs.size(); ++a) {
        const AlgoRun& r = runs[a];
        Matrix& db = sums.sum_db[a];
        Matrix& sq = sums.sum_sq[a];
        for (std::size_t t = 0; t < states.size(); ++t) {
            const Vector err = states[t] - r.estimates[t];
            const Index ti = static_cast<Index>(t);
            for (Index i = 0; i < n; ++i) {
                const double e2 = err[i] * err[i];
                db(ti, i) += 10.0 * std::log10(std::max(e2, kMsdFloor));
                sq(ti, i) += e2;
            }
            const double full = err.squaredNorm();
            db(ti, n) += 10.0 * std::log10(std::max(full, kMsdFloor));
            sq(ti, n) += full;
        }
        if (!std::isnan(r.forward_iterations)) sums.sum_forward_iterations[a] += r.forward_iterations;
        if (!std::isnan(r.backward_iterations)) sums.sum_backward_iterations[a] += r.backward_iterations;
        sums.sum_seconds[a] += r.seconds;
        sums.repairs[a] += r.repairs;
    }
}

void merge(BlockSums& total, const BlockSums& block) {
    for (std::size_t a = 0; a < total.sum_db.size(); ++a) {
        total.sum_db[a] += block.sum_db[a];
        total.sum_sq[a] += block.sum_sq[a];
        total.sum_forward_iterations[a] += block.sum_forward_iterations[a];
        total.sum_backward_iterations[a] += block.sum_backward_iterations[a];
        total.sum_seconds[a] += block.sum_seconds[a];
        total.failures[a] += block.failures[a];
        total.repairs[a] += block.repairs[a];
    }
    total.runs_used += block.runs_used;
    total.runs_dropped += block.runs_dropped;
    total.checksum ^= block.checksum;
    for (const auto& e : block.errors)
        if (total.errors.size() < 4) total.errors.push_back(e);
}

void check_algorithms(const ScenarioSpec& spec, std::span<const Algorithm> algorithms) {
    if (algorithms.empty()) throw ConfigError("algorithms: at least one algorithm is required");
    for (std::size_t i = 0; i < algorithms.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j)
            if (algorithms[i] == algorithms[j])
                throw ConfigError("algorithms: " + std::string(algorithm_name(algorithms[i])) + " listed twice");
        if (spec.nonlinear() && algorithms[i] == Algorithm::mee_rts)
            throw ConfigError("algorithms: MEE-RTS needs a linear model; use MEE-ERTS for scenario '" +
                              spec.name + "'");
    }
}

}  // namespace

RunResult run_scenario(const ScenarioSpec& spec, std::span<const Algorithm> algorithms, const MeeConfig& cfg,
                       const RunOptions& options) {
    spec.validate();
    cfg.validate();
    check_algorithms(spec, algorithms);

    const std::size_t T = spec.horizon;
    const Index n = spec.state_dim();
    const std::size_t A = algorithms.size();
    const std::size_t runs = spec.mc_runs;
    const std::size_t blocks = (runs + kBlockSize - 1) / kBlockSize;

    const RunExecutor executor(spec, cfg);
    std::vector<std::optional<BlockSums>> partial(blocks);
    std::atomic<std::size_t> next_block{0};
    std::mutex error_mutex;
    std::exception_ptr fatal;

    auto worker = [&] {
        for (;;) {
            const std::size_t b = next_block.fetch_add(1);
            if (b >= blocks) return;
            try {
                BlockSums sums(A, T, n + 1);
                const std::size_t end = std::min(runs, (b + 1) * kBlockSize);
                for (std::size_t r = b * kBlockSize; r < end; ++r) {
                    RunStreams streams = RunStreams::for_run(options.seed, r);
                    const SimulatedRun sim = simulate_trajectory(spec, streams);
                    accumulate_run(sums, sim, executor.execute(sim, algorithms));
                }
                partial[b] = std::move(sums);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!fatal) fatal = std::current_exception();
                next_block = blocks;
            }
        }
    };

    const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(blocks)));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    BlockSums total(A, T, n + 1);
    for (auto& p : partial) merge(total, *p);

    for (std::size_t a = 0; a < A; ++a) {
        if (static_cast<double>(total.failures[a]) > kMaxFailureRate * static_cast<double>(runs)) {
            std::ostringstream os;
            os << algorithm_name(algorithms[a]) << " failed on " << total.failures[a] << " of " << runs
               << " runs of scenario '" << spec.name << "'";
            if (!total.errors.empty()) os << "; first error: " << total.errors.front();
            throw NumericalError(os.str());
        }
    }
    if (total.runs_used == 0) throw NumericalError("every run of scenario '" + spec.name + "' was dropped");

    RunResult result;
    result.scenario = spec.name;
    for (Index i = 0; i < n; ++i) result.components.push_back("x" + std::to_string(i + 1));
    result.components.push_back("full");
    result.runs_requested = runs;
    result.runs_used = total.runs_used;
    result.runs_dropped = total.runs_dropped;
    result.input_checksum = total.checksum;

    const double used = static_cast<double>(total.runs_used);
    const std::size_t window = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(kSteadyStateFraction * double(T))));
    for (std::size_t a = 0; a < A; ++a) {
        AlgorithmSummary s;
        s.algorithm = algorithms[a];
        s.msd_db = total.sum_db[a] / used;
        s.mse_db = (total.sum_sq[a] / used).unaryExpr([](double v) { return 10.0 * std::log10(std::max(v, kMsdFloor)); });
        s.steady_state_db = s.msd_db.bottomRows(static_cast<Index>(window)).colwise().mean().transpose();
        if (uses_fixed_point(s.algorithm)) {
            s.forward_iterations = total.sum_forward_iterations[a] / used;
            s.backward_iterations = is_smoother(s.algorithm) ? total.sum_backward_iterations[a] / used : kNaN;
        } else {
            s.forward_iterations = kNaN;
            s.backward_iterations = kNaN;
        }
        s.wallclock_sec = total.sum_seconds[a] / used;
        s.failures = total.failures[a];
        s.covariance_repairs = total.repairs[a];
        result.algorithms.push_back(std::move(s));
    }
    return result;
}

// ---------------------------------------------------------------------------

void apply_sweep_value(SweepParameter p, double value, ScenarioSpec& spec, MeeConfig& cfg) {
    switch (p) {
        case SweepParameter::sigma:
            if (!(value > 0.0)) throw ConfigError("sweep.values: sigma must be > 0");
            cfg.sigma = value;
            return;
        case SweepParameter::tau:
            if (!(value > 0.0)) throw ConfigError("sweep.values: tau must be > 0");
            cfg.tau = value;
            return;
        case SweepParameter::lambda:
            if (!(value >= 0.0 && value <= 1.0)) throw ConfigError("sweep.values: lambda must lie in [0, 1]");
            for (auto& noise : spec.measurement_noise) {
                for (auto& law : noise.components) {
                    if (auto* mg = std::get_if<MixedGaussian>(&law.law)) {
                        mg->lambda = value;
                    } else if (auto* mix = std::get_if<Mixture>(&law.law); mix && mix->weights.size() == 2) {
                        mix->weights = {value, 1.0 - value};
                    } else {
                        throw ConfigError("sweep.parameter: lambda needs mixed-gaussian or two-component mixture "
                                          "measurement noise");
                    }
                }
            }
            return;
    }
}

std::vector<SweepPoint> sweep(SweepParameter parameter, std::span<const double> values, const ScenarioSpec& spec,
                              std::span<const Algorithm> algorithms, const MeeConfig& cfg,
                              const RunOptions& options) {
    if (values.empty()) throw ConfigError("sweep.values must not be empty");
    std::vector<SweepPoint> out;
    out.reserve(values.size());
    for (double v : values) {
        ScenarioSpec s = spec;
        MeeConfig c = cfg;
        apply_sweep_value(parameter, v, s, c);
        out.push_back({v, run_scenario(s, algorithms, c, options)});
    }
    return out;
}

}  // namespace meerts
