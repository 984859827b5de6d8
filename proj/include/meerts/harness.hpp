#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meerts/model_core.hpp"
#include "meerts/noise_models.hpp"

namespace meerts {

// ---------------------------------------------------------------------------
// Models and scenarios
// ---------------------------------------------------------------------------

/// Constant-acceleration model, state (position, velocity, acceleration),
/// position and velocity measured. Nominal Q = q_var I, R = r_var I.
LinearStateSpace build_ca_model(double dt, double q_var = 0.01, double r_var = 0.01);

/**
 * Constant-velocity vehicle, state (x, y, vx, vy), observed alternately by a
 * lidar (position) and a radar (range, bearing, range rate). The bearing
 * residual is wrapped to [-pi, pi]. Radar evaluation at the origin throws
 * NumericalError.
 */
NonlinearStateSpace build_tracking_model(double dt);

/// Process covariance of the tracking model.
Matrix tracking_process_covariance(double dt);

enum class ModelKind { constant_acceleration, vehicle_tracking, linear };

std::string_view model_kind_name(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view name);

/**
 * A benchmark scenario: model, nominal filter covariances, the noise laws
 * that drive the simulation, horizon and Monte-Carlo count.
 *
 * Initial law: x0 ~ N(0, I), xhat0 ~ N(x0, filter_Q), P0 = I.
 */
struct ScenarioSpec {
    std::string name;
    std::string description;
    ModelKind model = ModelKind::constant_acceleration;
    double dt = 0.1;
    Matrix F;  ///< ModelKind::linear only
    Matrix H;  ///< ModelKind::linear only
    Matrix filter_Q;
    std::vector<Matrix> filter_R;  ///< one per sensor
    VectorNoise process_noise;
    std::vector<VectorNoise> measurement_noise;  ///< one per sensor
    std::size_t horizon = 1000;
    std::size_t mc_runs = 300;
    double mee_sigma = 0.9;
    double mcc_sigma = 2.0;

    bool nonlinear() const { return model == ModelKind::vehicle_tracking; }
    Index state_dim() const;
    std::size_t sensor_count() const;
    std::vector<Index> measurement_dims() const;

    /// Throws ConfigError for linear-model access on a nonlinear scenario.
    LinearStateSpace linear_model() const;
    /// Linear scenarios are wrapped with as_nonlinear().
    NonlinearStateSpace nonlinear_model() const;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Five constant-acceleration scenarios and the vehicle-tracking scenario.
std::vector<ScenarioSpec> scenario_catalog();
std::optional<ScenarioSpec> find_scenario(std::string_view name);

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

/// Independent streams of one Monte-Carlo run: ids 3r, 3r+1, 3r+2.
struct RunStreams {
    RngStream init;
    RngStream process;
    RngStream measurement;

    static RunStreams for_run(std::uint64_t seed, std::uint64_t run);
};

struct SimulatedRun {
    StateTrajectory trajectory;
    Vector x0;
    GaussianBelief init;
};

SimulatedRun simulate_trajectory(const ScenarioSpec& spec, RunStreams& streams);

/// Convenience overload drawing every source from one stream.
SimulatedRun simulate_trajectory(const ScenarioSpec& spec, RngStream& rng);

// ---------------------------------------------------------------------------
// Monte-Carlo experiments
// ---------------------------------------------------------------------------

enum class Algorithm { kf, rts, mckf, mc_rts, mee_kf, mee_rts, mee_erts };

std::string_view algorithm_name(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view name);
bool uses_fixed_point(Algorithm a);
bool is_smoother(Algorithm a);

struct RunOptions {
    std::uint64_t seed = 1;
    unsigned jobs = 1;
};

struct AlgorithmSummary {
    Algorithm algorithm = Algorithm::kf;
    /// T x (n + 1): one column per state component, last column the full
    /// state. Average over runs of per-step dB values.
    Matrix msd_db;
    /// Same layout: dB of the run-averaged squared error.
    Matrix mse_db;
    /// Mean of msd_db over the final 20% of steps, per column.
    Vector steady_state_db;
    /// Mean fixed-point iterations per step; NaN for non-iterative passes.
    double forward_iterations = 0.0;
    double backward_iterations = 0.0;
    /// Mean wall-clock seconds per run (forward plus backward pass).
    double wallclock_sec = 0.0;
    std::size_t failures = 0;
    std::size_t covariance_repairs = 0;

    /// M reported in summaries: forward count for filters, the mean of the
    /// forward and backward counts for MEE smoothers, NaN otherwise.
    double mean_fpi_count() const;
};

struct RunResult {
    std::string scenario;
    std::vector<std::string> components;  ///< x1..xn then "full"
    std::size_t runs_requested = 0;
    std::size_t runs_used = 0;
    std::size_t runs_dropped = 0;
    /// Order-independent digest of every simulated measurement sequence.
    std::uint64_t input_checksum = 0;
    std::vector<AlgorithmSummary> algorithms;

    const AlgorithmSummary& at(Algorithm a) const;
};

inline constexpr double kSteadyStateFraction = 0.2;
inline constexpr double kMaxFailureRate = 0.01;

/**
 * Runs every algorithm on the same simulated trajectories. Runs are processed
 * in fixed blocks and reduced in block order, so the numbers do not depend on
 * the number of worker threads. A run in which any algorithm throws
 * NumericalError is dropped for all algorithms; if one algorithm fails on
 * more than 1% of the runs the experiment aborts with NumericalError.
 */
RunResult run_scenario(const ScenarioSpec& spec, std::span<const Algorithm> algorithms, const MeeConfig& cfg,
                       const RunOptions& options);

enum class SweepParameter { sigma, tau, lambda };

std::string_view sweep_parameter_name(SweepParameter p);
std::optional<SweepParameter> parse_sweep_parameter(std::string_view name);

struct SweepPoint {
    double value = 0.0;
    RunResult result;
};

/// Applies one swept value. lambda sets the mixing weight of the
/// measurement noise of every sensor.
void apply_sweep_value(SweepParameter p, double value, ScenarioSpec& spec, MeeConfig& cfg);

/// One run_scenario per value with the same base seed.
std::vector<SweepPoint> sweep(SweepParameter parameter, std::span<const double> values, const ScenarioSpec& spec,
                              std::span<const Algorithm> algorithms, const MeeConfig& cfg,
                              const RunOptions& options);

}  // namespace meerts
