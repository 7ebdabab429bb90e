#pragma once

#include <cmath>
#include <string>

#include "fabart/core/error.hpp"
#include "fabart/core/linalg.hpp"
#include "fabart/core/random.hpp"
#include "fabart/favar/state_space.hpp"

namespace fabart::favar {

/// Regressand and regressor rows of a VAR(L) sample, starting at row `first`
/// of `y` (requires first >= L). Regressor layout: [Y_{t-1}', ..., Y_{t-L}', 1].
struct VarDesign {
    Matrix y;
    Matrix x;
};

inline VarDesign var_design(const Matrix& y, int n_lags, Eigen::Index first) {
    const Eigen::Index m = y.cols();
    if (first < n_lags) throw StructuralError("VAR design needs L pre-sample rows");
    const Eigen::Index rows = std::max<Eigen::Index>(0, y.rows() - first);
    VarDesign d{Matrix(rows, m), Matrix(rows, m * n_lags + 1)};
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::Index t = first + r;
        d.y.row(r) = y.row(t);
        for (int l = 1; l <= n_lags; ++l) d.x.block(r, (l - 1) * m, 1, m) = y.row(t - l);
        d.x(r, m * n_lags) = 1.0;
    }
    return d;
}

/// Own-lag prior means and residual scales from univariate AR(1) fits.
struct ArPriorMoments {
    Vector mean;
    Vector scale;
};

inline ArPriorMoments ar1_prior_moments(const Matrix& training) {
    if (training.rows() < 3) throw DataError("AR(1) training sample needs at least 3 observations");
    const Eigen::Index n = training.rows() - 1;
    ArPriorMoments out{Vector(training.cols()), Vector(training.cols())};
    for (Eigen::Index i = 0; i < training.cols(); ++i) {
        Matrix x(n, 2);
        x.col(0) = training.col(i).head(n);
        x.col(1).setOnes();
        const Vector yv = training.col(i).tail(n);
        const Vector b = least_squares(x, yv);
        const Vector e = yv - x * b;
        out.mean(i) = b(0);
        const double dof = std::max<double>(1.0, static_cast<double>(n - 2));
        out.scale(i) = std::sqrt(e.squaredNorm() / dof);
    }
    return out;
}

struct DummyObservations {
    Matrix y;
    Matrix x;
};

/// Minnesota-style dummy rows plus the sum-of-coefficients block. Row blocks:
/// own-lag moments (M L rows), residual scale (M), constant (1), sum of
/// coefficients (M).
inline DummyObservations build_dummy_observations(const Vector& prior_mean, const Vector& prior_scale, double iota,
                                                  double lambda_soc, int n_lags, double const_tightness = 1e-4) {
    const Eigen::Index m = prior_mean.size();
    if (prior_scale.size() != m) throw ConfigError("prior mean and scale sizes differ");
    if (!(iota > 0.0) || !(lambda_soc > 0.0)) throw ConfigError("prior tightness must be positive");
    for (Eigen::Index i = 0; i < m; ++i)
        if (!(prior_scale(i) > 0.0))
            throw NumericalError("zero prior scale for VAR variable " + std::to_string(i) + " (degenerate calibration)");

    const Eigen::Index k = m * n_lags + 1;
    const Eigen::Index rows = m * n_lags + 2 * m + 1;
    DummyObservations d{Matrix::Zero(rows, m), Matrix::Zero(rows, k)};
    const Vector sm = prior_scale.cwiseProduct(prior_mean);

    d.y.topRows(m).diagonal() = sm / iota;
    for (int l = 1; l <= n_lags; ++l)
        d.x.block((l - 1) * m, (l - 1) * m, m, m).diagonal() = prior_scale * (static_cast<double>(l) / iota);

    Eigen::Index r = m * n_lags;
    d.y.block(r, 0, m, m).diagonal() = prior_scale;
    r += m;
    d.x(r, k - 1) = const_tightness;
    r += 1;
    d.y.block(r, 0, m, m).diagonal() = sm / lambda_soc;
    for (int l = 1; l <= n_lags; ++l) d.x.block(r, (l - 1) * m, m, m).diagonal() = sm / lambda_soc;
    return d;
}

/// Normal-inverse-Wishart posterior of (B, Sigma):
/// Sigma ~ IW(scale, df), vec(B) | Sigma ~ N(vec(mean), Sigma kron omega).
struct NiwPosterior {
    Matrix mean;
    Matrix omega;
    Matrix scale;
    double df = 0.0;

    Matrix sigma_mean() const { return scale / (df - static_cast<double>(scale.rows()) - 1.0); }
};

/// OLS on the sample stacked under the dummy rows.
inline NiwPosterior var_posterior(const VarDesign& sample, const DummyObservations& dummies) {
    const Eigen::Index k = dummies.x.cols();
    const Eigen::Index m = dummies.y.cols();
    Matrix ys(dummies.y.rows() + sample.y.rows(), m);
    Matrix xs(dummies.x.rows() + sample.x.rows(), k);
    ys << dummies.y, sample.y;
    xs << dummies.x, sample.x;
    const Matrix xtx = xs.transpose() * xs;
    Eigen::LLT<Matrix> llt(xtx);
    if (llt.info() != Eigen::Success)
        throw NumericalError("VAR cross-product singular despite dummy observations (" + std::to_string(xs.rows()) +
                             " rows, " + std::to_string(k) + " regressors)");
    NiwPosterior p;
    p.omega = llt.solve(Matrix::Identity(k, k));
    p.mean = llt.solve(xs.transpose() * ys);
    const Matrix e = ys - xs * p.mean;
    p.scale = symmetrize(e.transpose() * e);
    p.df = static_cast<double>(xs.rows() - k);
    return p;
}

struct VarDraw {
    VarCoefficients coef;
    Matrix innov_cov;
};

inline VarDraw sample_niw(const NiwPosterior& post, int n_lags, Rng& rng) {
    const Eigen::Index m = post.scale.rows();
    const Eigen::Index k = post.omega.rows();
    VarDraw d;
    d.innov_cov = sample_inverse_wishart(post.scale, post.df, rng);
    const Matrix lo = psd_factor(post.omega);
    Eigen::LLT<Matrix> ls(d.innov_cov);
    const Matrix ls_mat = ls.matrixL();
    Matrix z(k, m);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < m; ++j) z(i, j) = rng.normal();
    d.coef = VarCoefficients(post.mean + lo * z * ls_mat.transpose(), static_cast<int>(m), n_lags);
    return d;
}

/// Dummy-augmented conjugate draw of the VAR on `y`. The first
/// `training_obs` rows calibrate the prior and are then dropped.
inline VarDraw sample_var_coefficients(const Matrix& y, int n_lags, int training_obs, double iota, double lambda_soc,
                                       double const_tightness, Rng& rng) {
    if (y.rows() <= training_obs) throw DataError("sample shorter than the VAR training window");
    const auto moments = ar1_prior_moments(y.topRows(training_obs));
    const auto dummies = build_dummy_observations(moments.mean, moments.scale, iota, lambda_soc, n_lags, const_tightness);
    const auto sample = var_design(y, n_lags, std::max<Eigen::Index>(training_obs, n_lags));
    return sample_niw(var_posterior(sample, dummies), n_lags, rng);
}

}  // namespace fabart::favar
