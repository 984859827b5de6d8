#include "meerts/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace meerts {

namespace {

std::string shape(const Matrix& M) {
    std::ostringstream os;
    os << M.rows() << "x" << M.cols();
    return os.str();
}

}  // namespace

void LinearStateSpace::validate() const {
    const Index nn = F.rows();
    if (nn == 0 || F.cols() != nn)
        throw ConfigError("F must be square and non-empty, got " + shape(F));
    if (H.cols() != nn || H.rows() == 0)
        throw ConfigError("H must have " + std::to_string(nn) + " columns, got " + shape(H));
    if (Q.rows() != nn || Q.cols() != nn)
        throw ConfigError("Q must be " + std::to_string(nn) + "x" + std::to_string(nn) +
                          ", got " + shape(Q));
    if (R.rows() != H.rows() || R.cols() != H.rows())
        throw ConfigError("R must be " + std::to_string(H.rows()) + "x" +
                          std::to_string(H.rows()) + ", got " + shape(R));
}

Vector MeasurementModel::innovation(const Vector& y, const Vector& x) const {
    const Vector hx = h(x);
    if (hx.size() != y.size())
        throw ConfigError("sensor '" + name + "' expects " + std::to_string(hx.size()) +
                          " measurement components, got " + std::to_string(y.size()));
    return residual ? residual(y, hx) : Vector(y - hx);
}

const MeasurementModel& NonlinearStateSpace::sensor_at(std::size_t step) const {
    return sensors[step % sensors.size()];
}

void NonlinearStateSpace::validate() const {
    if (!f || !jac_f) throw ConfigError("nonlinear model needs f and jac_f");
    if (Q.rows() == 0 || Q.cols() != Q.rows()) throw ConfigError("Q must be square, got " + shape(Q));
    if (sensors.empty()) throw ConfigError("nonlinear model needs at least one sensor");
    for (const auto& s : sensors) {
        if (!s.h || !s.jac_h) throw ConfigError("sensor '" + s.name + "' needs h and jac_h");
        if (s.R.rows() == 0 || s.R.cols() != s.R.rows())
            throw ConfigError("sensor '" + s.name + "' R must be square, got " + shape(s.R));
    }
}

NonlinearStateSpace as_nonlinear(const LinearStateSpace& model) {
    model.validate();
    NonlinearStateSpace out;
    const Matrix F = model.F;
    const Matrix H = model.H;
    out.f = [F](const Vector& x) -> Vector { return F * x; };
    out.jac_f = [F](const Vector&) -> Matrix { return F; };
    out.Q = model.Q;
    out.linear_F = F;
    MeasurementModel s;
    s.name = "linear";
    s.h = [H](const Vector& x) -> Vector { return H * x; };
    s.jac_h = [H](const Vector&) -> Matrix { return H; };
    s.R = model.R;
    s.linear_H = H;
    out.sensors.push_back(std::move(s));
    return out;
}

void MeeConfig::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("mee.sigma must be > 0");
    if (!(tau > 0.0)) throw DomainError("mee.tau must be > 0");
    if (max_iter < 1) throw DomainError("mee.max_iter must be >= 1");
    if (!(jitter >= 0.0)) throw DomainError("mee.jitter must be >= 0");
    if (!(forgetting > 0.0 && forgetting <= 1.0))
        throw DomainError("mee.forgetting must lie in (0, 1]");
}

Matrix symmetrized(const Matrix& C) { return 0.5 * (C + C.transpose()); }

Matrix propagate_covariance(const Matrix& F, const Matrix& P, const Matrix& Q) {
    return symmetrized(F * P * F.transpose() + Q);
}

GaussianBelief predict(const GaussianBelief& belief, const LinearStateSpace& model) {
    const Index n = model.n();
    if (belief.mean.size() != n || belief.cov.rows() != n || belief.cov.cols() != n ||
        model.F.cols() != n || model.Q.rows() != n || model.Q.cols() != n)
        throw ConfigError("predict: belief of dimension " + std::to_string(belief.mean.size()) +
                          " does not match F " + shape(model.F));
    return {model.F * belief.mean, propagate_covariance(model.F, belief.cov, model.Q)};
}

double gaussian_kernel(double e, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("gaussian_kernel: sigma must be > 0");
    const double z = e / sigma;
    return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

double msd(const Vector& true_state, const Vector& estimate) {
    if (true_state.size() != estimate.size()) throw ConfigError("msd: dimension mismatch");
    return 10.0 * std::log10(std::max((true_state - estimate).squaredNorm(), kMsdFloor));
}

Vector msd_components(const Vector& true_state, const Vector& estimate) {
    if (true_state.size() != estimate.size()) throw ConfigError("msd: dimension mismatch");
    Vector out(true_state.size());
    for (Index i = 0; i < out.size(); ++i) {
        const double err = true_state[i] - estimate[i];
        out[i] = 10.0 * std::log10(std::max(err * err, kMsdFloor));
    }
    return out;
}

Matrix whitening_factor(const Matrix& P) {
    if (P.rows() != P.cols() || P.rows() == 0)
        throw ConfigError("whitening_factor: matrix must be square, got " + shape(P));
    if (!P.allFinite()) throw NumericalError("whitening_factor: matrix has non-finite entries");

    const Index n = P.rows();
    Matrix S = symmetrized(P);
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success) {
        const double scale = std::max(1.0, S.diagonal().cwiseAbs().maxCoeff());
        double jitter = 1e-10 * scale;
        bool ok = false;
        for (int attempt = 0; attempt < 10 && !ok; ++attempt, jitter *= 2.0) {
            llt.compute(S + jitter * Matrix::Identity(n, n));
            ok = llt.info() == Eigen::Success;
        }
        if (!ok) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
            std::ostringstream os;
            os << "whitening_factor: matrix is not positive definite (n=" << n
               << ", min eigenvalue=" << es.eigenvalues().minCoeff()
               << ", max eigenvalue=" << es.eigenvalues().maxCoeff() << ")";
            throw NumericalError(os.str());
        }
    }
    return llt.matrixL().solve(Matrix::Identity(n, n));
}

bool clamp_to_psd(Matrix& C) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(C));
    if (es.eigenvalues().minCoeff() >= 0.0) return false;
    const Vector clamped = es.eigenvalues().cwiseMax(0.0);
    C = symmetrized(es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose());
    return true;
}

Matrix numerical_jacobian(const std::function<Vector(const Vector&)>& fn, const Vector& x,
                          double step) {
    const Vector f0 = fn(x);
    Matrix J(f0.size(), x.size());
    for (Index j = 0; j < x.size(); ++j) {
        const double h = step * std::max(1.0, std::abs(x[j]));
        Vector xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        J.col(j) = (fn(xp) - fn(xm)) / (2.0 * h);
    }
    return J;
}

double jacobian_mismatch(const NonlinearStateSpace& model, const Vector& x) {
    auto rel = [](const Matrix& a, const Matrix& b) {
        return (a - b).norm() / std::max(1.0, b.norm());
    };
    double worst = rel(model.jac_f(x), numerical_jacobian(model.f, x));
    for (const auto& s : model.sensors) worst = std::max(worst, rel(s.jac_h(x), numerical_jacobian(s.h, x)));
    return worst;
}

}  // namespace meerts
