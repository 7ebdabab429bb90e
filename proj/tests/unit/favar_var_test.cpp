#include <gtest/gtest.h>

#include "fabart/favar/var_prior.hpp"

using namespace fabart;
using namespace fabart::favar;

namespace {

Matrix simulate_var(const VarCoefficients& v, const Matrix& cov, Eigen::Index T, Rng& rng) {
    const Eigen::Index m = v.n_vars;
    Matrix y = Matrix::Zero(T + 50, m);
    const Matrix l = psd_factor(cov);
    for (Eigen::Index t = v.n_lags; t < y.rows(); ++t)
        y.row(t) = (v.predict(y.topRows(t)) + l * standard_normal_vector(m, rng)).transpose();
    return y.bottomRows(T);
}

}  // namespace

TEST(DummyObservations, BlockLayout) {
    Vector mu(2), sigma(2);
    mu << 0.9, 0.8;
    sigma << 1.0, 1.0;
    const auto d = build_dummy_observations(mu, sigma, 0.1, 1.0, 1);
    // M L + M + 1 + M rows, M L + 1 regressors
    EXPECT_EQ(d.y.rows(), 2 * 1 + 2 + 1 + 2);
    EXPECT_EQ(d.x.rows(), 7);
    EXPECT_EQ(d.x.cols(), 3);
    EXPECT_DOUBLE_EQ(d.y(0, 0), 9.0);
    EXPECT_DOUBLE_EQ(d.y(1, 1), 8.0);
    EXPECT_DOUBLE_EQ(d.x(0, 0), 10.0);
    EXPECT_DOUBLE_EQ(d.y(2, 0), 1.0);  // residual-scale block
    EXPECT_DOUBLE_EQ(d.x.row(2).norm(), 0.0);
    EXPECT_DOUBLE_EQ(d.x(4, 2), 1e-4);  // constant row
    EXPECT_DOUBLE_EQ(d.y(5, 0), 0.9);   // sum of coefficients, lambda = 1
    EXPECT_DOUBLE_EQ(d.x(5, 0), 0.9);
    EXPECT_DOUBLE_EQ(d.x(6, 1), 0.8);
}

TEST(DummyObservations, LagDecayAndSumOfCoefficients) {
    Vector mu(2), sigma(2);
    mu << 0.5, 0.3;
    sigma << 2.0, 3.0;
    const auto d = build_dummy_observations(mu, sigma, 0.2, 2.0, 3);
    EXPECT_EQ(d.y.rows(), 2 * 3 + 2 * 2 + 1);
    // lag l block carries l * sigma / iota
    EXPECT_DOUBLE_EQ(d.x(4, 4), 3.0 * 2.0 / 0.2);
    EXPECT_DOUBLE_EQ(d.x(5, 5), 3.0 * 3.0 / 0.2);
    // sum-of-coefficients rows repeat the same block at every lag
    const Eigen::Index r = 2 * 3 + 2 + 1;
    for (int l = 0; l < 3; ++l) EXPECT_DOUBLE_EQ(d.x(r, 2 * l), 1.0 / 2.0);
}

TEST(DummyObservations, ZeroScaleIsError) {
    Vector mu = Vector::Constant(2, 0.5);
    Vector sigma(2);
    sigma << 1.0, 0.0;
    EXPECT_THROW(build_dummy_observations(mu, sigma, 0.1, 1.0, 2), NumericalError);
}

TEST(VarPosterior, LoosePriorApproachesOls) {
    Rng rng(3);
    Matrix c(3, 2);
    c << 0.5, 0.1, 0.0, 0.3, 0.2, -0.1;
    const VarCoefficients truth(c, 2, 1);
    const Matrix y = simulate_var(truth, Matrix::Identity(2, 2) * 0.3, 200, rng);
    const auto m = ar1_prior_moments(y.topRows(40));
    const auto d = build_dummy_observations(m.mean, m.scale, 1e8, 1e9, 1, 1e-8);
    const auto design = var_design(y, 1, 40);
    const auto post = var_posterior(design, d);
    const Matrix ols = least_squares(design.x, design.y);
    EXPECT_LT((post.mean - ols).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(VarPosterior, MatchesAnalyticNormalInverseWishart) {
    Rng rng(11);
    const int m = 3, l = 2;
    Matrix c = Matrix::Zero(m * l + 1, m);
    c.topRows(m).diagonal().setConstant(0.4);
    c.block(m, 0, m, m).diagonal().setConstant(-0.1);
    c.row(m * l).setConstant(0.2);
    const Matrix y = simulate_var(VarCoefficients(c, m, l), Matrix::Identity(m, m), 120, rng);
    const auto moments = ar1_prior_moments(y.topRows(40));
    const auto d = build_dummy_observations(moments.mean, moments.scale, 0.1, 1.0, l, 1e-2);
    const auto sample = var_design(y, l, 40);
    const auto post = var_posterior(sample, d);

    // prior moments implied by the dummies, then the textbook conjugate update
    const Matrix xdx = d.x.transpose() * d.x;
    const Matrix omega0_inv = xdx;
    const Matrix b0 = xdx.inverse() * d.x.transpose() * d.y;
    const Matrix s0 = (d.y - d.x * b0).transpose() * (d.y - d.x * b0);
    const double nu0 = static_cast<double>(d.x.rows() - d.x.cols());
    const Matrix omega_bar = (omega0_inv + sample.x.transpose() * sample.x).inverse();
    const Matrix b_bar = omega_bar * (omega0_inv * b0 + sample.x.transpose() * sample.y);
    const Matrix s_bar = s0 + sample.y.transpose() * sample.y + b0.transpose() * omega0_inv * b0 -
                         b_bar.transpose() * omega_bar.inverse() * b_bar;
    const double nu_bar = nu0 + static_cast<double>(sample.y.rows());

    EXPECT_LT((post.mean - b_bar).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((post.omega - omega_bar).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((post.scale - s_bar).cwiseAbs().maxCoeff() / s_bar.cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_DOUBLE_EQ(post.df, nu_bar);
}

TEST(SampleVar, RecoversAr1Coefficient) {
    Rng rng(5);
    Matrix y(400, 1);
    y(0, 0) = 1.0;
    for (Eigen::Index t = 1; t < y.rows(); ++t) y(t, 0) = 0.5 * y(t - 1, 0) + 0.01 * rng.normal() + 0.05 * rng.normal();
    double mean = 0.0;
    for (int k = 0; k < 200; ++k) mean += sample_var_coefficients(y, 1, 40, 100.0, 1000.0, 1e-4, rng).coef.coef(0, 0);
    const auto design = var_design(y, 1, 40);
    const Matrix ols = least_squares(design.x, design.y);
    EXPECT_NEAR(mean / 200, ols(0, 0), 0.01);
    EXPECT_NEAR(mean / 200, 0.5, 0.15);
}

TEST(SampleVar, PriorOnlyDrawsCenterOnDummyMean) {
    Rng rng(6);
    Vector mu(2), sigma(2);
    mu << 0.7, 0.2;
    sigma << 1.0, 0.5;
    const auto d = build_dummy_observations(mu, sigma, 0.1, 1.0, 1, 1.0);
    const VarDesign empty{Matrix(0, 2), Matrix(0, 3)};
    const auto post = var_posterior(empty, d);
    const Matrix prior_mean = (d.x.transpose() * d.x).inverse() * d.x.transpose() * d.y;
    Matrix acc = Matrix::Zero(3, 2);
    const int n = 4000;
    for (int k = 0; k < n; ++k) acc += sample_niw(post, 1, rng).coef.coef;
    EXPECT_LT((acc / n - prior_mean).cwiseAbs().maxCoeff(), 0.02);
}

TEST(SampleVar, DrawMomentsMatchPosterior) {
    Rng rng(7);
    Matrix c(3, 2);
    c << 0.5, 0.1, 0.0, 0.3, 0.2, -0.1;
    const Matrix y = simulate_var(VarCoefficients(c, 2, 1), Matrix::Identity(2, 2) * 0.5, 150, rng);
    const auto m = ar1_prior_moments(y.topRows(40));
    const auto post = var_posterior(var_design(y, 1, 40), build_dummy_observations(m.mean, m.scale, 0.2, 2.0, 1));
    const int n = 20000;
    Matrix b_acc = Matrix::Zero(3, 2);
    Matrix s_acc = Matrix::Zero(2, 2);
    double v00 = 0.0;
    for (int k = 0; k < n; ++k) {
        const auto d = sample_niw(post, 1, rng);
        b_acc += d.coef.coef;
        s_acc += d.innov_cov;
        v00 += (d.coef.coef(0, 0) - post.mean(0, 0)) * (d.coef.coef(0, 0) - post.mean(0, 0));
    }
    const Matrix sigma_mean = post.sigma_mean();
    const double var00 = sigma_mean(0, 0) * post.omega(0, 0);
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) {
            const double se = std::sqrt(sigma_mean(j, j) * post.omega(i, i) / n);
            EXPECT_NEAR(b_acc(i, j) / n, post.mean(i, j), 4 * se);
        }
    EXPECT_LT(((s_acc / n) - sigma_mean).cwiseAbs().maxCoeff() / sigma_mean.norm(), 0.02);
    EXPECT_NEAR(v00 / n / var00, 1.0, 0.05);
}

TEST(VarCoefficients, CompanionAndPredict) {
    Matrix c(5, 2);
    c << 0.5, 0.1, 0.0, 0.3, 0.2, 0.0, 0.0, 0.1, 1.0, -1.0;
    const VarCoefficients v(c, 2, 2);
    const Matrix a = v.companion();
    EXPECT_DOUBLE_EQ(a(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(a(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(a(1, 0), 0.1);
    EXPECT_DOUBLE_EQ(a(0, 2), 0.2);
    EXPECT_DOUBLE_EQ(a(2, 0), 1.0);
    Matrix hist(2, 2);
    hist << 1.0, 2.0, 3.0, 4.0;  // Y_{t-2}, Y_{t-1}
    const Vector p = v.predict(hist);
    EXPECT_DOUBLE_EQ(p(0), 1.0 + 0.5 * 3.0 + 0.0 * 4.0 + 0.2 * 1.0 + 0.0 * 2.0);
    EXPECT_DOUBLE_EQ(p(1), -1.0 + 0.1 * 3.0 + 0.3 * 4.0 + 0.0 * 1.0 + 0.1 * 2.0);
}
