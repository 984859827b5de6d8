#pragma once

#include <span>
#include <vector>

#include "meerts/forward_filters.hpp"
#include "meerts/model_core.hpp"

namespace meerts {

/**
 * Whitened stacked regression of one backward step
 *
 *   Theta = [Qw xs_{t+1}; Pw xf_t],  W = [Qw F; Pw],  eps = Theta - W x
 *
 * with Qw, Pw the whitening factors of Q and of the filtered covariance.
 * Xi = Gamma^T Gamma + Lambda^T Lambda is partitioned into n x n blocks
 * [Xi_x1 Xi_x1x2; Xi_x2x1 Xi_x2].
 */
struct BackwardRegression {
    Matrix q_whitener;
    Matrix p_whitener;
    Vector Theta;
    Matrix W;
    Vector eps;
    Matrix Gamma;
    Matrix Lambda;
    Matrix Xi;

    Index n() const { return p_whitener.rows(); }

    auto xi_x1() const { return Xi.topLeftCorner(n(), n()); }
    auto xi_x1x2() const { return Xi.topRightCorner(n(), n()); }
    auto xi_x2x1() const { return Xi.bottomLeftCorner(n(), n()); }
    auto xi_x2() const { return Xi.bottomRightCorner(n(), n()); }
};

struct SmootherOutput {
    std::vector<GaussianBelief> smoothed;
    std::vector<Matrix> gains;
    std::vector<int> iterations;
    std::vector<char> converged;
    /// Steps whose covariance needed negative eigenvalues clamped.
    std::size_t covariance_repairs = 0;

    double mean_iterations() const;
};

/// Fixed-point iteration to tau, or the one-pass approximate replacement.
enum class FpiMode { fixed_point, arm };

/**
 * Classic RTS recursion. gains[t] = P_{t|t} F^T P_{t+1|t}^{-1}; the last
 * entry of every sequence belongs to t = T and is the filtered belief.
 */
SmootherOutput rts_smooth(std::span<const GaussianBelief> filtered,
                          std::span<const GaussianBelief> predicted, const LinearStateSpace& model);

/**
 * Correntropy RTS backward pass.
 *
 * phi = exp(-|xs_{t+1} - F xf_t|_Q^2 / (2 sigma^2)),
 * K = (P^{-1} + phi F^T Q^{-1} F)^{-1} phi F^T Q^{-1},
 * xs_t = xf_t + K (xs_{t+1} - F xf_t),
 * P_{t|T} = P_{t|t} + K (P_{t+1|T} - P_{t+1|t}) K^T.
 */
SmootherOutput mc_rts_backward(std::span<const GaussianBelief> filtered,
                               std::span<const GaussianBelief> predicted, const LinearStateSpace& model,
                               double sigma);

BackwardRegression build_backward_regression(const GaussianBelief& filt, const Vector& smoothed_next_mean,
                                             const LinearStateSpace& model, const Vector& x_candidate,
                                             double sigma);

/**
 * Smoothing gain from the whitened normal equations,
 *
 *   K = (W^T Xi W)^{-1} (F^T P1 + P21),
 *   W^T Xi W = F^T P1 F + F^T P12 + P21 F + P2,
 *
 * with P1 = Qw^T Xi_x1 Qw, P12 = Qw^T Xi_x1x2 Pw, P21 = Pw^T Xi_x2x1 Qw,
 * P2 = Pw^T Xi_x2 Pw. Falls back to mee_smoothing_gain_lemma() if the normal
 * matrix stays singular after regularization.
 */
Matrix mee_smoothing_gain(const BackwardRegression& reg, const LinearStateSpace& model,
                          double jitter = 1e-10);

/// Same gain via the inversion lemma: A = P2 + F^T P12, B = F^T P1 + P21,
/// K = A^{-1} B (I + F A^{-1} B)^{-1}.
Matrix mee_smoothing_gain_lemma(const BackwardRegression& reg, const LinearStateSpace& model);

SmootherOutput mee_rts_backward(std::span<const GaussianBelief> filtered,
                                std::span<const GaussianBelief> predicted, const LinearStateSpace& model,
                                const MeeConfig& cfg, FpiMode mode = FpiMode::fixed_point);

// ---------------------------------------------------------------------------
// Extended variants driven by a forward pass over a nonlinear model. The
// backward step uses F_t = jac_f(xf_t) and the predicted mean f(xf_t) stored
// in the pass.
// ---------------------------------------------------------------------------

SmootherOutput rts_smooth(const ForwardPass& pass, const NonlinearStateSpace& model);
SmootherOutput mc_rts_backward(const ForwardPass& pass, const NonlinearStateSpace& model, double sigma);
SmootherOutput mee_rts_backward(const ForwardPass& pass, const NonlinearStateSpace& model,
                                const MeeConfig& cfg, FpiMode mode = FpiMode::fixed_point);

/**
 * Extended MEE smoother: an MEE forward pass with per-step Jacobians, then
 * the MEE backward pass on the linearized transitions, where the upper half
 * of Theta becomes Qw (xs_{t+1} - f(xf_t) + F_t xf_t).
 */
SmootherOutput mee_erts_smooth(std::span<const Vector> measurements, const NonlinearStateSpace& model,
                               const GaussianBelief& init, const MeeConfig& cfg);

}  // namespace meerts
