#include <cmath>
#include <numbers>

#include "meerts/harness.hpp"

namespace meerts {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRadarMinRange = 1e-9;

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * kPi);
    return a;
}

VectorNoise iid(NoiseSpec law) { return VectorNoise{{std::move(law)}, Matrix()}; }

NoiseSpec mixed(double lambda, double a1, double a2, double mu1, double mu2) {
    return NoiseSpec{MixedGaussian{lambda, a1, a2, mu1, mu2}};
}

Matrix diag(std::initializer_list<double> values) {
    Vector v(static_cast<Index>(values.size()));
    Index i = 0;
    for (double x : values) v[i++] = x;
    return v.asDiagonal();
}

}  // namespace

LinearStateSpace build_ca_model(double dt, double q_var, double r_var) {
    if (!(dt > 0.0)) throw DomainError("build_ca_model: dt must be > 0");
    LinearStateSpace m;
    m.F.resize(3, 3);
    m.F << 1.0, dt, 0.5 * dt * dt,
           0.0, 1.0, dt,
           0.0, 0.0, 1.0;
    m.H.resize(2, 3);
    m.H << 1.0, 0.0, 0.0,
           0.0, 1.0, 0.0;
    m.Q = q_var * Matrix::Identity(3, 3);
    m.R = r_var * Matrix::Identity(2, 2);
    return m;
}

Matrix tracking_process_covariance(double dt) {
    const double d2 = dt * dt;
    const double d3 = d2 * dt;
    Matrix Q(4, 4);
    Q << d2 / 4.0, 0.0, d3 / 2.0, 0.0,
         0.0, d2 / 4.0, 0.0, d3 / 2.0,
         d3 / 2.0, 0.0, d2, 0.0,
         0.0, d3 / 2.0, 0.0, d2;
    return Q;
}

NonlinearStateSpace build_tracking_model(double dt) {
    if (!(dt > 0.0)) throw DomainError("build_tracking_model: dt must be > 0");
    Matrix F = Matrix::Identity(4, 4);
    F(0, 2) = dt;
    F(1, 3) = dt;

    NonlinearStateSpace model;
    model.f = [F](const Vector& x) -> Vector { return F * x; };
    model.jac_f = [F](const Vector&) -> Matrix { return F; };
    model.linear_F = F;
    model.Q = tracking_process_covariance(dt);

    Matrix H = Matrix::Zero(2, 4);
    H(0, 0) = 1.0;
    H(1, 1) = 1.0;
    MeasurementModel lidar;
    lidar.name = "lidar";
    lidar.h = [H](const Vector& x) -> Vector { return H * x; };
    lidar.jac_h = [H](const Vector&) -> Matrix { return H; };
    lidar.R = diag({0.09, 0.09});
    lidar.linear_H = H;

    MeasurementModel radar;
    radar.name = "radar";
    radar.h = [](const Vector& x) -> Vector {
        const double r = std::hypot(x[0], x[1]);
        if (r < kRadarMinRange) throw NumericalError("radar: state at the range singularity");
        Vector y(3);
        y << r, std::atan2(x[1], x[0]), (x[0] * x[2] + x[1] * x[3]) / r;
        return y;
    };
    radar.jac_h = [](const Vector& x) -> Matrix {
        const double r = std::hypot(x[0], x[1]);
        if (r < kRadarMinRange) throw NumericalError("radar: Jacobian at the range singularity");
        const double r2 = r * r;
        const double r3 = r2 * r;
        const double cross = x[2] * x[1] - x[3] * x[0];
        Matrix J = Matrix::Zero(3, 4);
        J(0, 0) = x[0] / r;
        J(0, 1) = x[1] / r;
        J(1, 0) = -x[1] / r2;
        J(1, 1) = x[0] / r2;
        J(2, 0) = x[1] * cross / r3;
        J(2, 1) = -x[0] * cross / r3;
        J(2, 2) = x[0] / r;
        J(2, 3) = x[1] / r;
        return J;
    };
    radar.residual = [](const Vector& y, const Vector& hx) -> Vector {
        Vector d = y - hx;
        d[1] = wrap_angle(d[1]);
        return d;
    };
    radar.R = diag({0.09, 0.05, 0.09});

    model.sensors = {std::move(lidar), std::move(radar)};
    return model;
}

std::string_view model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::constant_acceleration: return "constant-acceleration";
        case ModelKind::vehicle_tracking: return "vehicle-tracking";
        case ModelKind::linear: return "linear";
    }
    return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
    for (auto k : {ModelKind::constant_acceleration, ModelKind::vehicle_tracking, ModelKind::linear})
        if (model_kind_name(k) == name) return k;
    return std::nullopt;
}

// ---------------------------------------------------------------------------

Index ScenarioSpec::state_dim() const {
    switch (model) {
        case ModelKind::constant_acceleration: return 3;
        case ModelKind::vehicle_tracking: return 4;
        case ModelKind::linear: return F.rows();
    }
    return 0;
}

std::size_t ScenarioSpec::sensor_count() const { return model == ModelKind::vehicle_tracking ? 2 : 1; }

std::vector<Index> ScenarioSpec::measurement_dims() const {
    switch (model) {
        case ModelKind::constant_acceleration: return {2};
        case ModelKind::vehicle_tracking: return {2, 3};
        case ModelKind::linear: return {H.rows()};
    }
    return {};
}

LinearStateSpace ScenarioSpec::linear_model() const {
    if (nonlinear()) throw ConfigError("scenario '" + name + "' has a nonlinear model");
    LinearStateSpace m;
    if (model == ModelKind::constant_acceleration) {
        m = build_ca_model(dt);
    } else {
        m.F = F;
        m.H = H;
    }
    m.Q = filter_Q;
    m.R = filter_R.at(0);
    m.validate();
    return m;
}

NonlinearStateSpace ScenarioSpec::nonlinear_model() const {
    if (!nonlinear()) return as_nonlinear(linear_model());
    NonlinearStateSpace m = build_tracking_model(dt);
    m.Q = filter_Q;
    for (std::size_t s = 0; s < m.sensors.size(); ++s) m.sensors[s].R = filter_R.at(s);
    m.validate();
    return m;
}

void ScenarioSpec::validate() const {
    if (name.empty()) throw ConfigError("scenario.name must not be empty");
    if (!(dt > 0.0)) throw ConfigError("scenario.model.dt must be > 0");
    if (horizon < 1) throw ConfigError("scenario.horizon must be >= 1");
    if (mc_runs < 1) throw ConfigError("scenario.mc_runs must be >= 1");
    if (!(mee_sigma > 0.0)) throw ConfigError("scenario.mee_sigma must be > 0");
    if (!(mcc_sigma > 0.0)) throw ConfigError("scenario.mcc_sigma must be > 0");
    if (model == ModelKind::linear) {
        if (F.rows() == 0 || F.cols() != F.rows()) throw ConfigError("scenario.model.F must be square");
        if (H.cols() != F.rows() || H.rows() == 0)
            throw ConfigError("scenario.model.H must have as many columns as F");
    }
    const Index n = state_dim();
    if (filter_Q.rows() != n || filter_Q.cols() != n)
        throw ConfigError("scenario.filter_q must be " + std::to_string(n) + "x" + std::to_string(n));
    const auto dims = measurement_dims();
    if (filter_R.size() != dims.size())
        throw ConfigError("scenario.filter_r needs one matrix per sensor");
    if (measurement_noise.size() != dims.size())
        throw ConfigError("scenario.measurement_noise needs one entry per sensor");
    for (std::size_t s = 0; s < dims.size(); ++s) {
        if (filter_R[s].rows() != dims[s] || filter_R[s].cols() != dims[s])
            throw ConfigError("scenario.filter_r[" + std::to_string(s) + "] must be " +
                              std::to_string(dims[s]) + "x" + std::to_string(dims[s]));
        try {
            measurement_noise[s].validate(dims[s]);
        } catch (const DomainError& e) {
            throw ConfigError("scenario.measurement_noise[" + std::to_string(s) + "]: " + e.what());
        }
    }
    try {
        process_noise.validate(n);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("scenario.process_noise: ") + e.what());
    }
    Eigen::LLT<Matrix> llt(filter_Q);
    if (llt.info() != Eigen::Success) throw ConfigError("scenario.filter_q must be positive definite");
    for (std::size_t s = 0; s < filter_R.size(); ++s) {
        Eigen::LLT<Matrix> lr(filter_R[s]);
        if (lr.info() != Eigen::Success)
            throw ConfigError("scenario.filter_r[" + std::to_string(s) + "] must be positive definite");
    }
}

std::vector<ScenarioSpec> scenario_catalog() {
    const NoiseSpec q_mixed = mixed(0.9, 0.0, 0.0, 0.01, 25.0);

    auto ca = [](std::string name, std::string description, NoiseSpec q, NoiseSpec r, double mee_sigma) {
        ScenarioSpec s;
        s.name = std::move(name);
        s.description = std::move(description);
        s.model = ModelKind::constant_acceleration;
        s.dt = 0.1;
        s.filter_Q = 0.01 * Matrix::Identity(3, 3);
        s.filter_R = {0.01 * Matrix::Identity(2, 2)};
        s.process_noise = iid(std::move(q));
        s.measurement_noise = {iid(std::move(r))};
        s.horizon = 1000;
        s.mc_runs = 300;
        s.mee_sigma = mee_sigma;
        s.mcc_sigma = 2.0;
        return s;
    };

    std::vector<ScenarioSpec> out;
    out.push_back(ca("ca-scenario-1", "mixed-Gaussian process noise, Gaussian measurement noise", q_mixed,
                     NoiseSpec{Gaussian{0.0, 0.01}}, 0.9));
    out.push_back(ca("ca-scenario-2", "mixed-Gaussian process and measurement noise", q_mixed,
                     mixed(0.7, 0.0, 0.0, 0.01, 900.0), 0.9));
    out.push_back(ca("ca-scenario-3", "alpha-stable / Gaussian mixture measurement noise", q_mixed,
                     NoiseSpec{Mixture{{0.9, 0.1},
                                       {NoiseSpec{AlphaStable{1.25, 1.0, 0.5, 0.0}},
                                        NoiseSpec{Gaussian{0.0, 900.0}}}}},
                     0.9));
    out.push_back(ca("ca-scenario-4", "Rayleigh / Gaussian mixture measurement noise", q_mixed,
                     NoiseSpec{Mixture{{0.7, 0.3}, {NoiseSpec{Rayleigh{2.0}}, NoiseSpec{Gaussian{0.0, 900.0}}}}},
                     0.9));
    out.push_back(ca("ca-scenario-5", "asymmetric bimodal measurement noise", mixed(0.95, 0.0, 0.0, 0.01, 25.0),
                     mixed(0.6, 2.0, -2.0, 0.01, 100.0), 2.0));

    ScenarioSpec tr;
    tr.name = "vehicle-tracking";
    tr.description = "constant-velocity vehicle, alternating lidar and radar, mixed-Gaussian sensor noise";
    tr.model = ModelKind::vehicle_tracking;
    tr.dt = 0.1;
    tr.filter_Q = tracking_process_covariance(tr.dt);
    const NonlinearStateSpace nl = build_tracking_model(tr.dt);
    for (const auto& s : nl.sensors) tr.filter_R.push_back(s.R);
    Eigen::LLT<Matrix> q_chol(tr.filter_Q);
    tr.process_noise = VectorNoise{{NoiseSpec{Gaussian{0.0, 1.0}}}, q_chol.matrixL()};
    // lidar r = diag(1, 0.01), radar r = diag(1, 0.01, 0.01); outliers have variance 9 r_i
    tr.measurement_noise = {
        VectorNoise{{mixed(0.9, 0.0, 0.0, 0.01, 9.0), mixed(0.9, 0.0, 0.0, 0.01, 0.09)}, Matrix()},
        VectorNoise{{mixed(0.9, 0.0, 0.0, 0.01, 9.0), mixed(0.9, 0.0, 0.0, 0.01, 0.09),
                     mixed(0.9, 0.0, 0.0, 0.01, 0.09)},
                    Matrix()},
    };
    tr.horizon = 1000;
    tr.mc_runs = 300;
    tr.mee_sigma = 2.0;
    tr.mcc_sigma = 2.0;
    out.push_back(std::move(tr));
    return out;
}

std::optional<ScenarioSpec> find_scenario(std::string_view name) {
    for (auto& s : scenario_catalog())
        if (s.name == name) return s;
    return std::nullopt;
}

// ---------------------------------------------------------------------------

RunStreams RunStreams::for_run(std::uint64_t seed, std::uint64_t run) {
    return {RngStream(seed, 3 * run), RngStream(seed, 3 * run + 1), RngStream(seed, 3 * run + 2)};
}

namespace {

SimulatedRun simulate_impl(const ScenarioSpec& spec, RngStream& init_rng, RngStream& process_rng,
                           RngStream& measurement_rng) {
    spec.validate();
    const Index n = spec.state_dim();
    const NonlinearStateSpace model = spec.nonlinear_model();

    SimulatedRun out;
    out.x0.resize(n);
    for (Index i = 0; i < n; ++i) out.x0[i] = init_rng.standard_normal();
    Vector z(n);
    for (Index i = 0; i < n; ++i) z[i] = init_rng.standard_normal();
    Eigen::LLT<Matrix> q_chol(spec.filter_Q);
    out.init.mean = out.x0 + q_chol.matrixL() * z;
    out.init.cov = Matrix::Identity(n, n);

    const auto dims = spec.measurement_dims();
    out.trajectory.states.reserve(spec.horizon);
    out.trajectory.measurements.reserve(spec.horizon);
    Vector x = out.x0;
    for (std::size_t t = 0; t < spec.horizon; ++t) {
        x = model.f(x) + spec.process_noise.sample(n, process_rng);
        const std::size_t s = t % dims.size();
        Vector y = model.sensors[s].h(x) + spec.measurement_noise[s].sample(dims[s], measurement_rng);
        out.trajectory.states.push_back(x);
        out.trajectory.measurements.push_back(std::move(y));
    }
    return out;
}

}  // namespace

SimulatedRun simulate_trajectory(const ScenarioSpec& spec, RunStreams& streams) {
    return simulate_impl(spec, streams.init, streams.process, streams.measurement);
}

SimulatedRun simulate_trajectory(const ScenarioSpec& spec, RngStream& rng) {
    return simulate_impl(spec, rng, rng, rng);
}

}  // namespace meerts
