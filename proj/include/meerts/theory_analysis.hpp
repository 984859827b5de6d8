#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meerts/model_core.hpp"
#include "meerts/smoothers.hpp"

namespace meerts {

/**
 * Error-behaviour bookkeeping of the smoother.
 *
 * gain_expectation is E[K^b], tracked with a forgetting factor. It is the
 * matrix that multiplies N_{t-1} in the mean-square recursion; it is unrelated
 * to the kernel weight matrix Omega of the forward regression.
 */
struct ErrorAnalysisState {
    Vector mean_err_filter;
    Vector mean_err_smooth;
    Matrix N;
    Matrix gain_expectation;
    Matrix Y;
};

/// E[xi_s,t] = (I - K F) E[xi_f,t] + K E[xi_s,t+1].
Vector mean_error_step(const Vector& mean_err_filter, const Vector& mean_err_smooth_next, const Matrix& gain,
                       const Matrix& F);

/// E[K_t] = (1 - iota) E[K_{t-1}] + iota K_t.
Matrix gain_expectation_update(const Matrix& prev, const Matrix& current_gain, double iota);

/// Y = (I - K F) C (I - K F)^T + K Q K^T, with K = E[K^b] and C = E[xi_f xi_f^T].
Matrix driving_term(const Matrix& gain_exp, const Matrix& F, const Matrix& Q, const Matrix& filter_err_cov);

/// N_t = K N_{t-1} K^T + Y_t, symmetrized.
Matrix mse_recursion_step(const Matrix& N_prev, const Matrix& gain_exp, const Matrix& F, const Matrix& Q,
                          const Matrix& filter_err_cov);

/// Kronecker product A (x) B.
Matrix kron(const Matrix& A, const Matrix& B);

/// Column-stacking vec operator.
Vector vec(const Matrix& A);

/// Spectral radius (largest eigenvalue modulus) of a square matrix.
double spectral_radius(const Matrix& A);

/// vec(N) = (I - K (x) K)^{-1} vec(Y). Throws NumericalError when the
/// spectral radius of K (x) K is >= 1.
Matrix mse_steady_state(const Matrix& gain_exp, const Matrix& Y);

/**
 * Relative gap between the exact K^b F and the diagonal-dominance
 * approximation (F^T P1 F + P2)^{-1} F^T P1 F, measured on a live regression.
 */
double gain_approximation_gap(const BackwardRegression& reg, const Matrix& F);

// ---------------------------------------------------------------------------
// Operation counts. Every O(n^3) or O(m^3) term (inversions, Cholesky
// factorizations) is counted with unit coefficient so the totals are integers.
// ---------------------------------------------------------------------------

std::int64_t flops_mc_forward(std::int64_t n, std::int64_t m);
std::int64_t flops_mc_backward(std::int64_t n, std::int64_t m);
/// 20n^3 + 10n^2 m + 6nm^2 + 2m^2 + 6n^2 + 4mn + m + 20 + 5 n^3 + 3 m^3
std::int64_t flops_mc_rtsl(std::int64_t n, std::int64_t m);

std::int64_t flops_mee_forward(std::int64_t n, std::int64_t m, std::int64_t Mf);
std::int64_t flops_mee_backward(std::int64_t n, std::int64_t Mb);
std::int64_t flops_mee_rts(std::int64_t n, std::int64_t m, std::int64_t Mf, std::int64_t Mb);

/// One row of the per-equation cost table of the backward pass.
struct ComplexityRow {
    std::string equation;
    std::int64_t multiplications;
    std::int64_t additions;
    std::int64_t special;  ///< divisions, inversions, Cholesky, exp
};

std::vector<ComplexityRow> backward_cost_table(std::int64_t n);

}  // namespace meerts
