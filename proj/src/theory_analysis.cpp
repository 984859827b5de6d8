#include "meerts/theory_analysis.hpp"

#include <Eigen/Eigenvalues>

#include "linalg_detail.hpp"

namespace meerts {

Vector mean_error_step(const Vector& mean_err_filter, const Vector& mean_err_smooth_next, const Matrix& gain,
                       const Matrix& F) {
    const Index n = F.rows();
    if (gain.rows() != n || gain.cols() != n || mean_err_filter.size() != n ||
        mean_err_smooth_next.size() != n)
        throw ConfigError("mean_error_step: dimension mismatch");
    return (Matrix::Identity(n, n) - gain * F) * mean_err_filter + gain * mean_err_smooth_next;
}

Matrix gain_expectation_update(const Matrix& prev, const Matrix& current_gain, double iota) {
    if (!(iota > 0.0 && iota <= 1.0)) throw DomainError("gain_expectation_update: iota must lie in (0, 1]");
    if (prev.rows() != current_gain.rows() || prev.cols() != current_gain.cols())
        throw ConfigError("gain_expectation_update: dimension mismatch");
    return (1.0 - iota) * prev + iota * current_gain;
}

Matrix driving_term(const Matrix& gain_exp, const Matrix& F, const Matrix& Q, const Matrix& filter_err_cov) {
    const Index n = F.rows();
    const Matrix A = Matrix::Identity(n, n) - gain_exp * F;
    return symmetrized(A * filter_err_cov * A.transpose() + gain_exp * Q * gain_exp.transpose());
}

Matrix mse_recursion_step(const Matrix& N_prev, const Matrix& gain_exp, const Matrix& F, const Matrix& Q,
                          const Matrix& filter_err_cov) {
    const Index n = F.rows();
    if (N_prev.rows() != n || gain_exp.rows() != n || Q.rows() != n || filter_err_cov.rows() != n)
        throw ConfigError("mse_recursion_step: dimension mismatch");
    return symmetrized(gain_exp * N_prev * gain_exp.transpose() + driving_term(gain_exp, F, Q, filter_err_cov));
}

Matrix kron(const Matrix& A, const Matrix& B) {
    Matrix out(A.rows() * B.rows(), A.cols() * B.cols());
    for (Index i = 0; i < A.rows(); ++i)
        for (Index j = 0; j < A.cols(); ++j)
            out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return out;
}

Vector vec(const Matrix& A) { return Eigen::Map<const Vector>(A.data(), A.size()); }

double spectral_radius(const Matrix& A) {
    if (A.rows() != A.cols()) throw ConfigError("spectral_radius: matrix must be square");
    if (A.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> es(A, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix mse_steady_state(const Matrix& gain_exp, const Matrix& Y) {
    const Index n = gain_exp.rows();
    if (gain_exp.cols() != n || Y.rows() != n || Y.cols() != n)
        throw ConfigError("mse_steady_state: dimension mismatch");
    // rho(K (x) K) = rho(K)^2
    const double rho = spectral_radius(gain_exp);
    if (!(rho * rho < 1.0))
        throw NumericalError("mse_steady_state: spectral radius of K (x) K is " + std::to_string(rho * rho) +
                             " >= 1, no steady state");
    const Matrix KK = kron(gain_exp, gain_exp);
    const Matrix A = Matrix::Identity(n * n, n * n) - KK;
    const Vector v = A.partialPivLu().solve(vec(Y));
    return symmetrized(Eigen::Map<const Matrix>(v.data(), n, n));
}

double gain_approximation_gap(const BackwardRegression& reg, const Matrix& F) {
    const Index n = F.rows();
    LinearStateSpace model{F, Matrix::Identity(n, n), Matrix::Identity(n, n), Matrix::Identity(n, n)};
    const Matrix exact = mee_smoothing_gain(reg, model) * F;
    const Matrix& Qw = reg.q_whitener;
    const Matrix& Pw = reg.p_whitener;
    const Matrix P1 = Qw.transpose() * reg.xi_x1() * Qw;
    const Matrix P2 = Pw.transpose() * reg.xi_x2() * Pw;
    const Matrix FtP1F = F.transpose() * P1 * F;
    const Matrix approx = detail::solve_normal(FtP1F + P2, FtP1F, 1e-10, "gain_approximation_gap");
    const double scale = exact.norm();
    return (exact - approx).norm() / (scale > 0.0 ? scale : 1.0);
}

// ---------------------------------------------------------------------------

namespace {

void require_positive(std::initializer_list<std::int64_t> values, const char* what) {
    for (auto v : values)
        if (v < 1) throw DomainError(std::string(what) + ": arguments must be >= 1");
}

std::int64_t cube(std::int64_t x) { return x * x * x; }

}  // namespace

std::int64_t flops_mc_forward(std::int64_t n, std::int64_t m) {
    require_positive({n, m}, "flops_mc_forward");
    return 8 * cube(n) + 10 * n * n * m + 6 * n * m * m + 2 * m * m - n * n + 4 * m * n - n + m + 10 +
           3 * cube(m) + cube(n);
}

std::int64_t flops_mc_backward(std::int64_t n, std::int64_t m) {
    require_positive({n, m}, "flops_mc_backward");
    return 12 * cube(n) + 7 * n * n + n + 10 + 4 * cube(n);
}

std::int64_t flops_mc_rtsl(std::int64_t n, std::int64_t m) {
    require_positive({n, m}, "flops_mc_rtsl");
    return 20 * cube(n) + 10 * n * n * m + 6 * n * m * m + 2 * m * m + 6 * n * n + 4 * m * n + m + 20 +
           5 * cube(n) + 3 * cube(m);
}

std::int64_t flops_mee_forward(std::int64_t n, std::int64_t m, std::int64_t Mf) {
    require_positive({n, m, Mf}, "flops_mee_forward");
    return (7 * Mf + 8) * cube(n) + 7 * Mf * cube(m) - n * n + (19 * Mf + 6) * n * n * m +
           (15 * Mf + 2) * n * m * m + Mf * cube(n) + Mf * m + (5 * Mf - 1) * n + (7 * Mf - 1) * n * m +
           3 * Mf * cube(m);
}

std::int64_t flops_mee_backward(std::int64_t n, std::int64_t Mb) {
    require_positive({n, Mb}, "flops_mee_backward");
    return (48 * Mb + 8) * cube(n) + (1 - 6 * Mb) * n * n + (1 - 9 * Mb) * n + 3 * Mb * cube(n) + 24 * Mb;
}

std::int64_t flops_mee_rts(std::int64_t n, std::int64_t m, std::int64_t Mf, std::int64_t Mb) {
    require_positive({n, m, Mf, Mb}, "flops_mee_rts");
    return (7 * Mf + 48 * Mb + 16) * cube(n) + 7 * Mf * cube(m) + (19 * Mf + 6) * n * n * m -
           6 * Mb * n * n + (15 * Mf + 2) * n * m * m + (Mf + 3 * Mb) * cube(n) + Mf * m +
           (5 * Mf - 9 * Mb) * n + (7 * Mf - 1) * n * m + 3 * Mf * cube(m) + 24 * Mb;
}

std::vector<ComplexityRow> backward_cost_table(std::int64_t n) {
    require_positive({n}, "backward_cost_table");
    const std::int64_t n2 = n * n;
    const std::int64_t n3 = cube(n);
    return {
        {"predicted mean", n2, n2 - n, 0},
        {"predicted covariance", 2 * n3, 2 * n3 - n2, 0},
        {"smoothed mean", n2, n2 + n, 0},
        {"smoothing gain", 8 * n3, 8 * n3 - 4 * n2, 3 * n3},
        {"Xi", 16 * n3, 16 * n3 - 4 * n2, 0},
        {"Gamma", 2 * n + 7, 2 * n + 1, 4},
        {"Lambda", 2 * n + 7, 2 * n + 1, 4},
        {"smoothed covariance", 2 * n3, 2 * n3, 0},
    };
}

}  // namespace meerts
