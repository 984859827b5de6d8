#include "meerts/forward_filters.hpp"

#include <cmath>
#include <numeric>

#include "linalg_detail.hpp"

namespace meerts {

namespace {

void check_update_dims(const GaussianBelief& pred, const Vector& y, const LinearStateSpace& model) {
    const Index n = model.n();
    if (pred.mean.size() != n || pred.cov.rows() != n || pred.cov.cols() != n)
        throw ConfigError("update: belief dimension " + std::to_string(pred.mean.size()) +
                          " does not match state dimension " + std::to_string(n));
    if (y.size() != model.m())
        throw ConfigError("update: measurement dimension " + std::to_string(y.size()) +
                          " does not match H rows " + std::to_string(model.m()));
}

void check_finite(const GaussianBelief& b, const char* what) {
    if (!b.mean.allFinite() || !b.cov.allFinite())
        throw NumericalError(std::string(what) + ": posterior is not finite");
}

// Weighted normal equations of the whitened stacked regression, assembled
// block by block: Z^T Omega Z = H^T P^y H + P^yx H + H^T P^xy + P^x.
Matrix forward_gain(const ForwardRegression& reg, const Matrix& H, double jitter) {
    const Matrix& Rw = reg.r_whitener;
    const Matrix& Pw = reg.p_whitener;
    const Matrix Px = Pw.transpose() * reg.omega_x() * Pw;
    const Matrix Pxy = Rw.transpose() * reg.omega_xy() * Pw;
    const Matrix Pyx = Pw.transpose() * reg.omega_yx() * Rw;
    const Matrix Py = Rw.transpose() * reg.omega_y() * Rw;
    const Matrix HtPy = H.transpose() * Py;
    const Matrix normal = HtPy * H + Pyx * H + H.transpose() * Pxy + Px;
    return detail::solve_normal(normal, Pyx + HtPy, jitter, "mee_update");
}

}  // namespace

void mee_weights(const Vector& e, double sigma, Matrix& Psi, Matrix& Phi, Matrix& Omega) {
    if (!(sigma > 0.0)) throw DomainError("kernel bandwidth sigma must be > 0");
    const Index L = e.size();
    Phi.resize(L, L);
    const double g0 = gaussian_kernel(0.0, sigma);
    for (Index i = 0; i < L; ++i) {
        Phi(i, i) = g0;
        for (Index j = i + 1; j < L; ++j) {
            const double g = gaussian_kernel(e[i] - e[j], sigma);
            Phi(i, j) = g;
            Phi(j, i) = g;
        }
    }
    Psi = Phi.rowwise().sum().asDiagonal();
    Omega = Psi.transpose() * Psi + Phi.transpose() * Phi;
}

FilterStepResult kf_update(const GaussianBelief& pred, const Vector& y, const LinearStateSpace& model) {
    check_update_dims(pred, y, model);
    const Matrix& H = model.H;
    const Matrix S = symmetrized(H * pred.cov * H.transpose() + model.R);
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-15))
        throw NumericalError("kf_update: innovation covariance is singular");
    const Matrix K = llt.solve(H * pred.cov).transpose();

    FilterStepResult out;
    out.posterior.mean = pred.mean + K * (y - H * pred.mean);
    out.posterior.cov = detail::joseph_covariance(pred.cov, K, H, model.R);
    out.gain = K;
    check_finite(out.posterior, "kf_update");
    return out;
}

FilterStepResult mcc_update(const GaussianBelief& pred, const Vector& y, const LinearStateSpace& model,
                            double sigma) {
    if (!(sigma > 0.0)) throw DomainError("mcc_update: sigma must be > 0");
    check_update_dims(pred, y, model);
    const Matrix& H = model.H;
    const Index n = model.n();

    const Matrix Rw = whitening_factor(model.R);
    const Vector innovation = y - H * pred.mean;
    const double z2 = (Rw * innovation).squaredNorm();
    const double phi = std::exp(-z2 / (2.0 * sigma * sigma));

    const Matrix Rinv = Rw.transpose() * Rw;
    const Matrix Pinv = detail::solve_normal(pred.cov, Matrix::Identity(n, n), 0.0, "mcc_update");
    const Matrix HtRinv = H.transpose() * Rinv;
    const Matrix K = detail::solve_normal(Pinv + phi * HtRinv * H, phi * HtRinv, 1e-10, "mcc_update");

    FilterStepResult out;
    out.posterior.mean = pred.mean + K * innovation;
    out.posterior.cov = detail::joseph_covariance(pred.cov, K, H, model.R);
    out.gain = K;
    check_finite(out.posterior, "mcc_update");
    return out;
}

ForwardRegression build_forward_regression(const GaussianBelief& pred, const Vector& y,
                                           const LinearStateSpace& model, const Vector& x_candidate,
                                           double sigma) {
    check_update_dims(pred, y, model);
    if (x_candidate.size() != model.n())
        throw ConfigError("build_forward_regression: candidate has wrong dimension");
    const Index n = model.n();
    const Index m = model.m();

    ForwardRegression reg;
    reg.r_whitener = whitening_factor(model.R);
    reg.p_whitener = whitening_factor(pred.cov);
    reg.d.resize(m + n);
    reg.d << reg.r_whitener * y, reg.p_whitener * pred.mean;
    reg.Z.resize(m + n, n);
    reg.Z << reg.r_whitener * model.H, reg.p_whitener;
    reg.e = reg.d - reg.Z * x_candidate;
    mee_weights(reg.e, sigma, reg.Psi, reg.Phi, reg.Omega);
    return reg;
}

FilterStepResult mee_update(const GaussianBelief& pred, const Vector& y, const LinearStateSpace& model,
                            const MeeConfig& cfg) {
    cfg.validate();
    // The regression at the prior mean carries the whitened d and Z; later
    // iterations only refresh the residual and the weights.
    ForwardRegression reg = build_forward_regression(pred, y, model, pred.mean, cfg.sigma);
    const Vector innovation = y - model.H * pred.mean;

    FilterStepResult out;
    out.converged = false;
    Vector x = pred.mean;
    Matrix K;
    for (int k = 1; k <= cfg.max_iter; ++k) {
        if (k > 1) {
            reg.e = reg.d - reg.Z * x;
            mee_weights(reg.e, cfg.sigma, reg.Psi, reg.Phi, reg.Omega);
        }
        K = forward_gain(reg, model.H, cfg.jitter);
        const Vector next = pred.mean + K * innovation;
        const double change = detail::relative_change(next, x);
        x = next;
        out.iterations = k;
        if (!std::isfinite(change)) throw NumericalError("mee_update: iterate is not finite");
        if (change <= cfg.tau) {
            out.converged = true;
            break;
        }
    }

    out.posterior.mean = x;
    out.posterior.cov = detail::joseph_covariance(pred.cov, K, model.H, model.R);
    out.gain = K;
    check_finite(out.posterior, "mee_update");
    return out;
}

// ---------------------------------------------------------------------------

double ForwardPass::mean_iterations() const {
    if (iterations.empty()) return 0.0;
    return std::accumulate(iterations.begin(), iterations.end(), 0.0) /
           static_cast<double>(iterations.size());
}

namespace {

FilterStepResult apply_update(const GaussianBelief& pred, const Vector& y, const LinearStateSpace& model,
                              const ForwardSettings& settings) {
    switch (settings.kind) {
        case ForwardKind::kalman:
            return kf_update(pred, y, model);
        case ForwardKind::correntropy:
            return mcc_update(pred, y, model, settings.mcc_sigma);
        case ForwardKind::mee:
            return mee_update(pred, y, model, settings.mee);
    }
    throw ConfigError("unknown forward filter kind");
}

void record(ForwardPass& pass, GaussianBelief pred, FilterStepResult step, Matrix F) {
    pass.predicted.push_back(std::move(pred));
    pass.filtered.push_back(std::move(step.posterior));
    pass.transitions.push_back(std::move(F));
    pass.iterations.push_back(step.iterations);
    pass.converged.push_back(step.converged ? 1 : 0);
}

void reserve(ForwardPass& pass, std::size_t T) {
    pass.predicted.reserve(T);
    pass.filtered.reserve(T);
    pass.transitions.reserve(T);
    pass.iterations.reserve(T);
    pass.converged.reserve(T);
}

}  // namespace

ForwardPass run_forward(const LinearStateSpace& model, const GaussianBelief& init,
                        std::span<const Vector> measurements, const ForwardSettings& settings) {
    model.validate();
    ForwardPass pass;
    reserve(pass, measurements.size());
    GaussianBelief belief = init;
    for (const Vector& y : measurements) {
        GaussianBelief pred = predict(belief, model);
        FilterStepResult step = apply_update(pred, y, model, settings);
        belief = step.posterior;
        record(pass, std::move(pred), std::move(step), model.F);
    }
    return pass;
}

ForwardPass run_forward(const NonlinearStateSpace& model, const GaussianBelief& init,
                        std::span<const Vector> measurements, const ForwardSettings& settings) {
    model.validate();
    const Index n = model.n();
    if (init.mean.size() != n) throw ConfigError("run_forward: initial belief has wrong dimension");

    ForwardPass pass;
    reserve(pass, measurements.size());
    GaussianBelief belief = init;
    for (std::size_t t = 0; t < measurements.size(); ++t) {
        Matrix F = model.linear_F ? *model.linear_F : model.jac_f(belief.mean);
        if (F.rows() != n || F.cols() != n || !F.allFinite())
            throw NumericalError("run_forward: invalid state Jacobian at step " + std::to_string(t));
        GaussianBelief pred{model.f(belief.mean), propagate_covariance(F, belief.cov, model.Q)};

        const MeasurementModel& sensor = model.sensor_at(t);
        const Vector& y = measurements[t];
        LinearStateSpace lin{F, Matrix(), model.Q, sensor.R};
        Vector y_eff;
        if (sensor.linear_H) {
            lin.H = *sensor.linear_H;
            y_eff = y;
        } else {
            lin.H = sensor.jac_h(pred.mean);
            if (!lin.H.allFinite())
                throw NumericalError("run_forward: invalid measurement Jacobian at step " +
                                     std::to_string(t));
            y_eff = sensor.innovation(y, pred.mean) + lin.H * pred.mean;
        }
        FilterStepResult step = apply_update(pred, y_eff, lin, settings);
        belief = step.posterior;
        record(pass, std::move(pred), std::move(step), std::move(F));
    }
    return pass;
}

}  // namespace meerts
