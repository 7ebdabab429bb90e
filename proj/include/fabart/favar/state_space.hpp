#pragma once

#include "fabart/core/error.hpp"
#include "fabart/core/linalg.hpp"

namespace fabart::favar {

/// VAR(L) on Y_t (M variables): Y_t = sum_l Y_{t-l} phi_l + C + eta_t.
/// Coefficients are stacked as rows [lag 1 block; ...; lag L block; constant],
/// i.e. a (M L + 1) x M matrix acting on a row regressor [Y_{t-1}', ..., Y_{t-L}', 1].
struct VarCoefficients {
    Matrix coef;
    int n_vars = 0;
    int n_lags = 0;

    VarCoefficients() = default;
    VarCoefficients(Matrix c, int m, int l) : coef(std::move(c)), n_vars(m), n_lags(l) {
        if (coef.rows() != m * l + 1 || coef.cols() != m) throw StructuralError("VAR coefficient shape mismatch");
    }

    /// phi_l as an M x M matrix acting on column vectors: Y_t = sum_l lag(l) Y_{t-l} + intercept.
    Matrix lag(int l) const { return coef.block((l - 1) * n_vars, 0, n_vars, n_vars).transpose(); }
    Vector intercept() const { return coef.row(coef.rows() - 1).transpose(); }

    /// Companion matrix of the stacked state [Y_t; Y_{t-1}; ...; Y_{t-L+1}].
    Matrix companion() const {
        const int n = n_vars * n_lags;
        Matrix a = Matrix::Zero(n, n);
        for (int l = 1; l <= n_lags; ++l) a.block(0, (l - 1) * n_vars, n_vars, n_vars) = lag(l);
        if (n_lags > 1) a.block(n_vars, 0, n - n_vars, n - n_vars).setIdentity();
        return a;
    }

    Vector companion_intercept() const {
        Vector c = Vector::Zero(n_vars * n_lags);
        c.head(n_vars) = intercept();
        return c;
    }

    /// Conditional mean of Y_t given the history rows (most recent last).
    Vector predict(const Matrix& history) const {
        Vector y = intercept();
        const Eigen::Index last = history.rows() - 1;
        for (int l = 1; l <= n_lags; ++l) y += lag(l) * history.row(last - (l - 1)).transpose();
        return y;
    }
};

/// Parameters of the linearised state-space form of one Gibbs draw.
struct StateSpace {
    /// Rows: [Z (if observed); X_1..X_N], columns: [Z (if observed); F_1..F_J].
    /// When Z is observed the first row is (1, 0, ..., 0).
    Matrix loadings;
    /// Diagonal measurement variances of X_1..X_N (standardized units).
    Vector meas_var;
    VarCoefficients var;
    Matrix innov_cov;
    bool has_z = false;

    Eigen::Index n_state_vars() const noexcept { return loadings.cols(); }

    /// Loadings of the X block only (N x M).
    Matrix x_loadings() const { return has_z ? Matrix(loadings.bottomRows(loadings.rows() - 1)) : loadings; }

    void validate() const {
        if (has_z) {
            if (loadings(0, 0) != 1.0 || loadings.row(0).tail(loadings.cols() - 1).cwiseAbs().maxCoeff() != 0.0)
                throw StructuralError("observed-factor loading row must be (1, 0, ..., 0)");
        }
        if ((meas_var.array() <= 0.0).any()) throw StructuralError("measurement variances must be positive");
        Eigen::LLT<Matrix> llt(innov_cov);
        if (llt.info() != Eigen::Success) throw StructuralError("innovation covariance not positive definite");
    }
};

}  // namespace fabart::favar
