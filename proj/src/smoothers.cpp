#include "meerts/smoothers.hpp"

#include <cmath>
#include <numeric>

#include "linalg_detail.hpp"

namespace meerts {

double SmootherOutput::mean_iterations() const {
    if (iterations.empty()) return 0.0;
    return std::accumulate(iterations.begin(), iterations.end(), 0.0) /
           static_cast<double>(iterations.size());
}

namespace {

struct BackwardStep {
    Vector mean;
    Matrix gain;
    int iterations = 1;
    bool converged = true;
};

void check_sequences(std::span<const GaussianBelief> filtered, std::span<const GaussianBelief> predicted,
                     Index n) {
    if (filtered.empty()) throw ConfigError("smoother: empty filtered sequence");
    if (filtered.size() != predicted.size())
        throw ConfigError("smoother: filtered and predicted sequences differ in length");
    for (const auto& b : filtered)
        if (b.mean.size() != n || b.cov.rows() != n || b.cov.cols() != n)
            throw ConfigError("smoother: belief dimension does not match the model");
}

/**
 * Shared backward recursion. step(t, smoothed_next) returns the smoothed mean
 * and gain at t; the covariance update is common to every smoother:
 * P_{t|T} = P_{t|t} + K (P_{t+1|T} - P_{t+1|t}) K^T.
 */
template <class StepFn>
SmootherOutput backward_recursion(std::span<const GaussianBelief> filtered,
                                  std::span<const GaussianBelief> predicted, StepFn&& step) {
    const std::size_t T = filtered.size();
    const Index n = filtered.back().mean.size();
    SmootherOutput out;
    out.smoothed.resize(T);
    out.gains.assign(T, Matrix::Zero(n, n));
    out.iterations.assign(T, 0);
    out.converged.assign(T, 1);
    out.smoothed[T - 1] = filtered[T - 1];

    for (std::size_t t = T - 1; t-- > 0;) {
        const GaussianBelief& next = out.smoothed[t + 1];
        BackwardStep s = step(t, next.mean);
        Matrix P = symmetrized(filtered[t].cov +
                               s.gain * (next.cov - predicted[t + 1].cov) * s.gain.transpose());
        Eigen::LLT<Matrix> llt(P);
        if (llt.info() != Eigen::Success && clamp_to_psd(P)) ++out.covariance_repairs;
        if (!s.mean.allFinite() || !P.allFinite())
            throw NumericalError("smoother: non-finite estimate at step " + std::to_string(t));
        out.smoothed[t] = {std::move(s.mean), std::move(P)};
        out.gains[t] = std::move(s.gain);
        out.iterations[t] = s.iterations;
        out.converged[t] = s.converged ? 1 : 0;
    }
    return out;
}

Matrix rts_gain(const Matrix& Pf, const Matrix& F, const Matrix& Ppred) {
    Eigen::LLT<Matrix> llt(symmetrized(Ppred));
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-15))
        throw NumericalError("rts_smooth: predicted covariance is singular");
    return llt.solve(F * Pf).transpose();
}

Matrix mc_rts_gain(const Matrix& Pf, const Matrix& F, const Matrix& Qw, const Vector& innovation,
                   double sigma) {
    const Index n = Pf.rows();
    const double z2 = (Qw * innovation).squaredNorm();
    const double phi = std::exp(-z2 / (2.0 * sigma * sigma));
    const Matrix Qinv = Qw.transpose() * Qw;
    const Matrix Pinv = detail::solve_normal(Pf, Matrix::Identity(n, n), 0.0, "mc_rts_backward");
    const Matrix FtQinv = F.transpose() * Qinv;
    return detail::solve_normal(Pinv + phi * FtQinv * F, phi * FtQinv, 1e-10, "mc_rts_backward");
}

struct GainBlocks {
    Matrix P1, P12, P21, P2;
};

GainBlocks gain_blocks(const BackwardRegression& reg) {
    const Matrix& Qw = reg.q_whitener;
    const Matrix& Pw = reg.p_whitener;
    return {Qw.transpose() * reg.xi_x1() * Qw, Qw.transpose() * reg.xi_x1x2() * Pw,
            Pw.transpose() * reg.xi_x2x1() * Qw, Pw.transpose() * reg.xi_x2() * Pw};
}

bool lemma_gain(const BackwardRegression& reg, const Matrix& F, Matrix& K) {
    const Index n = F.rows();
    const GainBlocks b = gain_blocks(reg);
    const Matrix A = b.P2 + F.transpose() * b.P12;
    const Matrix B = F.transpose() * b.P1 + b.P21;
    Matrix AinvB;
    if (!detail::try_solve_general(A, B, AinvB)) return false;
    const Matrix M = Matrix::Identity(n, n) + F * AinvB;
    Matrix Kt;
    if (!detail::try_solve_general(M.transpose(), AinvB.transpose(), Kt)) return false;
    K = Kt.transpose();
    return true;
}

Matrix direct_gain(const BackwardRegression& reg, const Matrix& F, double jitter) {
    const GainBlocks b = gain_blocks(reg);
    const Matrix FtP1 = F.transpose() * b.P1;
    const Matrix normal = FtP1 * F + F.transpose() * b.P12 + b.P21 * F + b.P2;
    try {
        return detail::solve_normal(normal, FtP1 + b.P21, jitter, "mee_smoothing_gain");
    } catch (const NumericalError&) {
        Matrix K;
        if (lemma_gain(reg, F, K)) return K;
        throw NumericalError("mee_smoothing_gain: both the normal-equation and the inversion-lemma "
                             "solves are singular");
    }
}

/// Fills Theta, W and the weights of a regression whose whiteners are set.
void fill_backward_regression(BackwardRegression& reg, const Vector& theta_top, const Vector& xf,
                              const Matrix& F, const Vector& x_candidate, double sigma) {
    const Index n = F.rows();
    reg.Theta.resize(2 * n);
    reg.Theta << reg.q_whitener * theta_top, reg.p_whitener * xf;
    reg.W.resize(2 * n, n);
    reg.W << reg.q_whitener * F, reg.p_whitener;
    reg.eps = reg.Theta - reg.W * x_candidate;
    mee_weights(reg.eps, sigma, reg.Gamma, reg.Lambda, reg.Xi);
}

/**
 * One MEE backward step by fixed-point iteration from x_0 = xf. theta_top is
 * the upper block of Theta before whitening: xs_{t+1} for a linear transition,
 * xs_{t+1} - f(xf) + F xf for a linearized one.
 */
BackwardStep mee_backward_step(const GaussianBelief& filt, const Vector& theta_top, const Vector& innovation,
                               const Matrix& F, const Matrix& Qw, const MeeConfig& cfg, FpiMode mode) {
    BackwardRegression reg;
    reg.q_whitener = Qw;
    reg.p_whitener = whitening_factor(filt.cov);
    fill_backward_regression(reg, theta_top, filt.mean, F, filt.mean, cfg.sigma);

    const int max_iter = mode == FpiMode::arm ? 1 : cfg.max_iter;
    BackwardStep out;
    out.converged = false;
    Vector x = filt.mean;
    for (int k = 1; k <= max_iter; ++k) {
        if (k > 1) {
            reg.eps = reg.Theta - reg.W * x;
            mee_weights(reg.eps, cfg.sigma, reg.Gamma, reg.Lambda, reg.Xi);
        }
        out.gain = direct_gain(reg, F, cfg.jitter);
        const Vector next = filt.mean + out.gain * innovation;
        const double change = detail::relative_change(next, x);
        x = next;
        out.iterations = k;
        if (!std::isfinite(change)) throw NumericalError("mee_rts_backward: iterate is not finite");
        if (change <= cfg.tau) {
            out.converged = true;
            break;
        }
    }
    out.mean = std::move(x);
    return out;
}

}  // namespace

SmootherOutput rts_smooth(std::span<const GaussianBelief> filtered, std::span<const GaussianBelief> predicted,
                          const LinearStateSpace& model) {
    model.validate();
    check_sequences(filtered, predicted, model.n());
    return backward_recursion(filtered, predicted, [&](std::size_t t, const Vector& xs_next) {
        BackwardStep s;
        s.gain = rts_gain(filtered[t].cov, model.F, predicted[t + 1].cov);
        s.mean = filtered[t].mean + s.gain * (xs_next - predicted[t + 1].mean);
        return s;
    });
}

SmootherOutput mc_rts_backward(std::span<const GaussianBelief> filtered,
                               std::span<const GaussianBelief> predicted, const LinearStateSpace& model,
                               double sigma) {
    if (!(sigma > 0.0)) throw DomainError("mc_rts_backward: sigma must be > 0");
    model.validate();
    check_sequences(filtered, predicted, model.n());
    const Matrix Qw = whitening_factor(model.Q);
    return backward_recursion(filtered, predicted, [&](std::size_t t, const Vector& xs_next) {
        BackwardStep s;
        const Vector innovation = xs_next - predicted[t + 1].mean;
        s.gain = mc_rts_gain(filtered[t].cov, model.F, Qw, innovation, sigma);
        s.mean = filtered[t].mean + s.gain * innovation;
        return s;
    });
}

BackwardRegression build_backward_regression(const GaussianBelief& filt, const Vector& smoothed_next_mean,
                                             const LinearStateSpace& model, const Vector& x_candidate,
                                             double sigma) {
    model.validate();
    const Index n = model.n();
    if (filt.mean.size() != n || smoothed_next_mean.size() != n || x_candidate.size() != n)
        throw ConfigError("build_backward_regression: dimension mismatch");
    BackwardRegression reg;
    reg.q_whitener = whitening_factor(model.Q);
    reg.p_whitener = whitening_factor(filt.cov);
    fill_backward_regression(reg, smoothed_next_mean, filt.mean, model.F, x_candidate, sigma);
    return reg;
}

Matrix mee_smoothing_gain(const BackwardRegression& reg, const LinearStateSpace& model, double jitter) {
    if (reg.n() != model.n()) throw ConfigError("mee_smoothing_gain: dimension mismatch");
    return direct_gain(reg, model.F, jitter);
}

Matrix mee_smoothing_gain_lemma(const BackwardRegression& reg, const LinearStateSpace& model) {
    if (reg.n() != model.n()) throw ConfigError("mee_smoothing_gain_lemma: dimension mismatch");
    Matrix K;
    if (!lemma_gain(reg, model.F, K))
        throw NumericalError("mee_smoothing_gain_lemma: A or I + F A^{-1} B is singular");
    return K;
}

SmootherOutput mee_rts_backward(std::span<const GaussianBelief> filtered,
                                std::span<const GaussianBelief> predicted, const LinearStateSpace& model,
                                const MeeConfig& cfg, FpiMode mode) {
    cfg.validate();
    model.validate();
    check_sequences(filtered, predicted, model.n());
    const Matrix Qw = whitening_factor(model.Q);
    return backward_recursion(filtered, predicted, [&](std::size_t t, const Vector& xs_next) {
        const Vector innovation = xs_next - predicted[t + 1].mean;
        return mee_backward_step(filtered[t], xs_next, innovation, model.F, Qw, cfg, mode);
    });
}

// ---------------------------------------------------------------------------

namespace {

void check_pass(const ForwardPass& pass, const NonlinearStateSpace& model) {
    model.validate();
    if (pass.transitions.size() != pass.filtered.size())
        throw ConfigError("smoother: forward pass is missing transition Jacobians");
    check_sequences(pass.filtered, pass.predicted, model.n());
}

}  // namespace

SmootherOutput rts_smooth(const ForwardPass& pass, const NonlinearStateSpace& model) {
    check_pass(pass, model);
    return backward_recursion(pass.filtered, pass.predicted, [&](std::size_t t, const Vector& xs_next) {
        BackwardStep s;
        s.gain = rts_gain(pass.filtered[t].cov, pass.transitions[t + 1], pass.predicted[t + 1].cov);
        s.mean = pass.filtered[t].mean + s.gain * (xs_next - pass.predicted[t + 1].mean);
        return s;
    });
}

SmootherOutput mc_rts_backward(const ForwardPass& pass, const NonlinearStateSpace& model, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("mc_rts_backward: sigma must be > 0");
    check_pass(pass, model);
    const Matrix Qw = whitening_factor(model.Q);
    return backward_recursion(pass.filtered, pass.predicted, [&](std::size_t t, const Vector& xs_next) {
        BackwardStep s;
        const Vector innovation = xs_next - pass.predicted[t + 1].mean;
        s.gain = mc_rts_gain(pass.filtered[t].cov, pass.transitions[t + 1], Qw, innovation, sigma);
        s.mean = pass.filtered[t].mean + s.gain * innovation;
        return s;
    });
}

SmootherOutput mee_rts_backward(const ForwardPass& pass, const NonlinearStateSpace& model,
                                const MeeConfig& cfg, FpiMode mode) {
    cfg.validate();
    check_pass(pass, model);
    const Matrix Qw = whitening_factor(model.Q);
    const bool linear = model.linear_F.has_value();
    return backward_recursion(pass.filtered, pass.predicted, [&](std::size_t t, const Vector& xs_next) {
        const GaussianBelief& filt = pass.filtered[t];
        const Matrix& F = pass.transitions[t + 1];
        const Vector innovation = xs_next - pass.predicted[t + 1].mean;
        if (linear) return mee_backward_step(filt, xs_next, innovation, F, Qw, cfg, mode);
        const Vector theta_top = innovation + F * filt.mean;
        return mee_backward_step(filt, theta_top, innovation, F, Qw, cfg, mode);
    });
}

SmootherOutput mee_erts_smooth(std::span<const Vector> measurements, const NonlinearStateSpace& model,
                               const GaussianBelief& init, const MeeConfig& cfg) {
    ForwardSettings settings;
    settings.kind = ForwardKind::mee;
    settings.mee = cfg;
    const ForwardPass pass = run_forward(model, init, measurements, settings);
    return mee_rts_backward(pass, model, cfg);
}

}  // namespace meerts
