#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "meerts/errors.hpp"

namespace meerts {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/**
 * Linear Gaussian state-space model
 *
 *   x_t = F x_{t-1} + q_{t-1},   y_t = H x_t + r_t
 *
 * Q and R are the nominal covariances used by the estimators. The noise that
 * actually drives a simulation is described separately by the harness.
 */
struct LinearStateSpace {
    Matrix F;
    Matrix H;
    Matrix Q;
    Matrix R;

    Index n() const { return F.rows(); }
    Index m() const { return H.rows(); }

    /// Throws ConfigError when shapes disagree or R is not square.
    void validate() const;
};

/// One measurement channel of a nonlinear model.
struct MeasurementModel {
    std::string name;
    std::function<Vector(const Vector&)> h;
    std::function<Matrix(const Vector&)> jac_h;
    Matrix R;
    /// Residual y - h(x). Defaults to plain subtraction; angle channels wrap.
    std::function<Vector(const Vector& y, const Vector& hx)> residual;
    /// Set when h(x) = H x exactly; the extended pipeline then skips the
    /// Taylor offset so linear channels follow the linear arithmetic path.
    std::optional<Matrix> linear_H;

    Index m() const { return R.rows(); }
    Vector innovation(const Vector& y, const Vector& x) const;
};

/**
 * Nonlinear model x_t = f(x_{t-1}) + q, y_t = h_s(x_t) + r.
 *
 * Several sensors may be attached; step t (0-based) is observed by
 * sensors[t % sensors.size()].
 */
struct NonlinearStateSpace {
    std::function<Vector(const Vector&)> f;
    std::function<Matrix(const Vector&)> jac_f;
    Matrix Q;
    std::vector<MeasurementModel> sensors;
    std::optional<Matrix> linear_F;

    Index n() const { return Q.rows(); }
    const MeasurementModel& sensor_at(std::size_t step) const;
    void validate() const;
};

/// Wraps a linear model so it can run through the extended pipeline.
NonlinearStateSpace as_nonlinear(const LinearStateSpace& model);

struct GaussianBelief {
    Vector mean;
    Matrix cov;
};

/// Bandwidth, stopping threshold and plumbing for the MEE fixed-point solver.
struct MeeConfig {
    double sigma = 0.9;
    double tau = 1e-6;
    int max_iter = 100;
    double jitter = 1e-10;
    double forgetting = 0.95;

    /// Throws DomainError naming the offending field.
    void validate() const;
};

struct StateTrajectory {
    std::vector<Vector> states;
    std::vector<Vector> measurements;

    std::size_t size() const { return states.size(); }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// x' = F x, P' = F P F^T + Q, symmetrized.
GaussianBelief predict(const GaussianBelief& belief, const LinearStateSpace& model);

/// F P F^T + Q, symmetrized. Shared by the linear and extended prediction.
Matrix propagate_covariance(const Matrix& F, const Matrix& P, const Matrix& Q);

/// (1 / (sqrt(2 pi) sigma)) exp(-e^2 / (2 sigma^2)).
double gaussian_kernel(double e, double sigma);

inline constexpr double kMsdFloor = 1e-300;

/// 10 log10(max(|x - xhat|^2, 1e-300)).
double msd(const Vector& true_state, const Vector& estimate);

/// Per-component squared error in dB, same floor as msd().
Vector msd_components(const Vector& true_state, const Vector& estimate);

/// Inverse of the lower Cholesky factor of P, with jitter repair.
Matrix whitening_factor(const Matrix& P);

/// (C + C^T) / 2
Matrix symmetrized(const Matrix& C);

/// Clamps negative eigenvalues of a symmetric matrix to zero.
/// Returns true when at least one eigenvalue was clamped.
bool clamp_to_psd(Matrix& C);

/// Central-difference Jacobian, used to check analytic Jacobians.
Matrix numerical_jacobian(const std::function<Vector(const Vector&)>& fn, const Vector& x,
                          double step = 1e-6);

/// Largest relative deviation between analytic and numerical Jacobians of
/// f and of every sensor h at x.
double jacobian_mismatch(const NonlinearStateSpace& model, const Vector& x);

}  // namespace meerts
