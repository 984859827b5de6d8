#pragma once

#include "meerts/model_core.hpp"

namespace meerts::detail {

/// Solves S X = B for a symmetric positive (semi)definite S. When the
/// Cholesky factorization fails or is badly conditioned, jitter * mean|diag(S)|
/// is added to the diagonal and doubled up to 10 times.
Matrix solve_normal(const Matrix& S, const Matrix& B, double jitter, const char* what);

/// LU solve of A X = B; returns false when A is numerically singular.
bool try_solve_general(const Matrix& A, const Matrix& B, Matrix& X);

/// |x_new - x_old| / |x_old|, or the absolute change when x_old = 0.
double relative_change(const Vector& x_new, const Vector& x_old);

/// Joseph form (I - K H) P (I - K H)^T + K R K^T, symmetrized.
Matrix joseph_covariance(const Matrix& P, const Matrix& K, const Matrix& H, const Matrix& R);

}  // namespace meerts::detail
