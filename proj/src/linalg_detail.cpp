#include "linalg_detail.hpp"

#include <cmath>
#include <sstream>

namespace meerts::detail {

namespace {

constexpr double kMinRcond = 1e-13;

bool usable(const Eigen::LLT<Matrix>& llt) {
    return llt.info() == Eigen::Success && llt.rcond() > kMinRcond;
}

}  // namespace

Matrix solve_normal(const Matrix& S, const Matrix& B, double jitter, const char* what) {
    if (!S.allFinite()) throw NumericalError(std::string(what) + ": normal matrix has non-finite entries");
    const Matrix sym = symmetrized(S);
    Eigen::LLT<Matrix> llt(sym);
    if (usable(llt)) return llt.solve(B);

    const Index n = sym.rows();
    const double scale = sym.diagonal().cwiseAbs().mean();
    double j = jitter * (scale > 0.0 ? scale : 1.0);
    for (int attempt = 0; attempt < 10 && j > 0.0; ++attempt, j *= 2.0) {
        llt.compute(sym + j * Matrix::Identity(n, n));
        if (usable(llt)) return llt.solve(B);
    }
    std::ostringstream os;
    os << what << ": normal matrix is singular after regularization (n=" << n
       << ", mean |diag|=" << scale << ")";
    throw NumericalError(os.str());
}

bool try_solve_general(const Matrix& A, const Matrix& B, Matrix& X) {
    if (!A.allFinite()) return false;
    Eigen::PartialPivLU<Matrix> lu(A);
    if (!(lu.rcond() > kMinRcond)) return false;
    X = lu.solve(B);
    return X.allFinite();
}

double relative_change(const Vector& x_new, const Vector& x_old) {
    const double diff = (x_new - x_old).norm();
    if (diff == 0.0) return 0.0;
    const double base = x_old.norm();
    return base > 0.0 ? diff / base : diff;
}

Matrix joseph_covariance(const Matrix& P, const Matrix& K, const Matrix& H, const Matrix& R) {
    const Index n = P.rows();
    const Matrix A = Matrix::Identity(n, n) - K * H;
    return symmetrized(A * P * A.transpose() + K * R * K.transpose());
}

}  // namespace meerts::detail
