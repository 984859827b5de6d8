#pragma once

#include <span>
#include <vector>

#include "meerts/model_core.hpp"

namespace meerts {

/**
 * Whitened stacked regression of one measurement update
 *
 *   d = [Rw y; Pw xhat],  Z = [Rw H; Pw],  e = d - Z x
 *
 * where Rw, Pw are whitening factors of R and of the predicted covariance.
 * Psi is diagonal with the row sums of Phi, Phi_ij = G(e_i - e_j), and
 * Omega = Psi^T Psi + Phi^T Phi.
 */
struct ForwardRegression {
    Matrix r_whitener;
    Matrix p_whitener;
    Vector d;
    Matrix Z;
    Vector e;
    Matrix Psi;
    Matrix Phi;
    Matrix Omega;

    Index m() const { return r_whitener.rows(); }
    Index n() const { return p_whitener.rows(); }

    auto omega_y() const { return Omega.topLeftCorner(m(), m()); }
    auto omega_xy() const { return Omega.topRightCorner(m(), n()); }
    auto omega_yx() const { return Omega.bottomLeftCorner(n(), m()); }
    auto omega_x() const { return Omega.bottomRightCorner(n(), n()); }
};

struct FilterStepResult {
    GaussianBelief posterior;
    Matrix gain;
    int iterations = 1;
    bool converged = true;
};

/**
 * Pairwise kernel weights of a residual vector.
 *
 * Phi_ij = G(e_i - e_j), Psi = diag(row sums of Phi), Omega = Psi^2 + Phi^2.
 */
void mee_weights(const Vector& e, double sigma, Matrix& Psi, Matrix& Phi, Matrix& Omega);

/// Standard Kalman update with a Joseph-form covariance.
FilterStepResult kf_update(const GaussianBelief& pred, const Vector& y, const LinearStateSpace& model);

/**
 * Maximum-correntropy update.
 *
 * phi = exp(-|y - H xhat|_R^2 / (2 sigma^2)) with the R^{-1}-weighted norm, and
 * K = (P^{-1} + phi H^T R^{-1} H)^{-1} phi H^T R^{-1}. Covariance in Joseph form.
 */
FilterStepResult mcc_update(const GaussianBelief& pred, const Vector& y, const LinearStateSpace& model,
                            double sigma);

ForwardRegression build_forward_regression(const GaussianBelief& pred, const Vector& y,
                                           const LinearStateSpace& model, const Vector& x_candidate,
                                           double sigma);

/**
 * MEE measurement update by fixed-point iteration.
 *
 * Starting from the predicted mean, each iteration rebuilds the kernel
 * weights from the current residual, forms
 *
 *   K = (Z^T Omega Z)^{-1} (P^yx + H^T P^y)
 *
 * from the whitened blocks of Omega and sets x = xhat + K (y - H xhat). The
 * loop ends when |x_{k+1} - x_k| / |x_k| <= tau or after max_iter passes.
 */
FilterStepResult mee_update(const GaussianBelief& pred, const Vector& y, const LinearStateSpace& model,
                            const MeeConfig& cfg);

// ---------------------------------------------------------------------------
// Forward passes over a measurement sequence
// ---------------------------------------------------------------------------

enum class ForwardKind { kalman, correntropy, mee };

struct ForwardSettings {
    ForwardKind kind = ForwardKind::kalman;
    double mcc_sigma = 2.0;
    MeeConfig mee;
};

/**
 * Output of a forward pass over y_1..y_T.
 *
 * predicted[t] and filtered[t] are the beliefs of x_{t+1} before and after
 * measurement t (0-based). transitions[t] is the state-transition Jacobian
 * that produced predicted[t].
 */
struct ForwardPass {
    std::vector<GaussianBelief> predicted;
    std::vector<GaussianBelief> filtered;
    std::vector<Matrix> transitions;
    std::vector<int> iterations;
    std::vector<char> converged;

    double mean_iterations() const;
};

ForwardPass run_forward(const LinearStateSpace& model, const GaussianBelief& init,
                        std::span<const Vector> measurements, const ForwardSettings& settings);

/**
 * Extended forward pass. Each step linearizes f at the previous filtered mean
 * and the active sensor's h at the predicted mean, then applies the linear
 * update to the effective measurement (y - h(xhat)) + H xhat.
 */
ForwardPass run_forward(const NonlinearStateSpace& model, const GaussianBelief& init,
                        std::span<const Vector> measurements, const ForwardSettings& settings);

}  // namespace meerts
