#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "fabart/core/error.hpp"
#include "fabart/core/random.hpp"

namespace fabart {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// Moore-Penrose pseudo-inverse; the minimum-norm least-squares solve for
/// rank-deficient inputs.
inline Matrix pinv(const Matrix& a) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    return cod.pseudoInverse();
}

/// Least-squares coefficients of each column of `y` on `x`.
inline Matrix least_squares(const Matrix& x, const Matrix& y) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(x);
    return cod.solve(y);
}

/// Symmetric square root factor L with L L' = a for a positive semi-definite
/// `a`. Small negative eigenvalues from round-off are clamped to zero.
inline Matrix psd_factor(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
    if (es.info() != Eigen::Success) throw NumericalError("eigen decomposition failed");
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    const double tol = -1e-8 * scale;
    Vector ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < tol) {
            throw NumericalError("covariance not positive semi-definite (eigenvalue " +
                                 std::to_string(ev(i)) + ")");
        }
        ev(i) = std::sqrt(std::max(ev(i), 0.0));
    }
    return es.eigenvectors() * ev.asDiagonal();
}

/// Pseudo-inverse of a symmetric PSD matrix, dropping directions whose
/// eigenvalues fall below a relative tolerance.
inline Matrix psd_pinv(const Matrix& a, double rel_tol = 1e-10) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
    const Vector& ev = es.eigenvalues();
    const double cut = rel_tol * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    Vector inv = Vector::Zero(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev(i) > cut) inv(i) = 1.0 / ev(i);
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

inline Vector standard_normal_vector(Eigen::Index n, Rng& rng) {
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
    return z;
}

inline Vector sample_mvn(const Vector& mean, const Matrix& cov, Rng& rng) {
    return mean + psd_factor(cov) * standard_normal_vector(mean.size(), rng);
}

/// Draw from an inverse-Wishart with scale `scale` and `df` degrees of freedom
/// (mean scale / (df - p - 1)), via the Bartlett decomposition of the Wishart
/// with scale inverse(scale).
inline Matrix sample_inverse_wishart(const Matrix& scale, double df, Rng& rng) {
    const Eigen::Index p = scale.rows();
    if (df <= static_cast<double>(p) - 1.0)
        throw NumericalError("inverse-Wishart degrees of freedom too small");
    Eigen::LLT<Matrix> llt_scale(symmetrize(scale));
    if (llt_scale.info() != Eigen::Success)
        throw NumericalError("inverse-Wishart scale matrix not positive definite");
    Matrix precision_scale = llt_scale.solve(Matrix::Identity(p, p));
    Eigen::LLT<Matrix> llt(symmetrize(precision_scale));
    Matrix l = llt.matrixL();
    Matrix a = Matrix::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        a(i, i) = std::sqrt(rng.chi_squared(df - static_cast<double>(i)));
        for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
    }
    Matrix la = l * a;
    Matrix wishart = la * la.transpose();
    Eigen::LLT<Matrix> llt_w(wishart);
    return symmetrize(llt_w.solve(Matrix::Identity(p, p)));
}

inline double spectral_radius(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> es(a, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline double sample_variance(const Vector& x) {
    if (x.size() < 2) return 0.0;
    const double m = x.mean();
    return (x.array() - m).square().sum() / static_cast<double>(x.size() - 1);
}

inline double correlation(const Vector& a, const Vector& b) {
    const Vector da = a.array() - a.mean();
    const Vector db = b.array() - b.mean();
    const double denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
    return denom > 0.0 ? da.dot(db) / denom : 0.0;
}

}  // namespace fabart
