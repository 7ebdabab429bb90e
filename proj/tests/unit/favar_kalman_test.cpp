#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "fabart/favar/gibbs.hpp"

using namespace fabart;
using namespace fabart::favar;

namespace {

StateSpace ar1_state(double phi, double q, const Matrix& loadings, const Vector& meas_var) {
    StateSpace s;
    Matrix c(2, 1);
    c << phi, 0.0;
    s.var = VarCoefficients(c, 1, 1);
    s.innov_cov = Matrix::Constant(1, 1, q);
    s.loadings = loadings;
    s.meas_var = meas_var;
    return s;
}

Matrix simulate_obs(const StateSpace& s, Eigen::Index T, Rng& rng, Vector* truth = nullptr) {
    const double phi = s.var.coef(0, 0);
    const double q = s.innov_cov(0, 0);
    Vector f(T);
    f(0) = rng.normal(0.0, std::sqrt(q / (1 - phi * phi)));
    for (Eigen::Index t = 1; t < T; ++t) f(t) = phi * f(t - 1) + rng.normal(0.0, std::sqrt(q));
    Matrix x(T, s.loadings.rows());
    for (Eigen::Index t = 0; t < T; ++t)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            x(t, j) = s.loadings(j, 0) * f(t) + rng.normal(0.0, std::sqrt(s.meas_var(j)));
    if (truth) *truth = f;
    return x;
}

}  // namespace

TEST(CarterKohn, NoiselessInversion) {
    Rng rng(1);
    Matrix load(1, 1);
    load << 1.7;
    const auto s = ar1_state(0.6, 1.0, load, Vector::Constant(1, 1e-14));
    Vector truth;
    const Matrix x = simulate_obs(s, 40, rng, &truth);
    const Matrix f = carter_kohn_states(s, x, rng);
    EXPECT_LT((f.col(0) - x.col(0) / 1.7).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(CarterKohn, MeanMatchesRtsSmoother) {
    Rng rng(2);
    Matrix load(3, 1);
    load << 0.8, -0.5, 1.2;
    Vector mv(3);
    mv << 0.5, 0.3, 0.8;
    const auto s = ar1_state(0.7, 1.0, load, mv);
    const Eigen::Index T = 50;
    const Matrix x = simulate_obs(s, T, rng);
    const Matrix a = Matrix::Constant(1, 1, 0.7);
    const Matrix q = Matrix::Constant(1, 1, 1.0);
    const auto rts = oracle::rts_smoother(x, a, Vector::Zero(1), q, load, mv.asDiagonal(), Vector::Zero(1),
                                          Matrix::Constant(1, 1, 1.0 / (1 - 0.49)));
    const int draws = 4000;
    Vector sum = Vector::Zero(T);
    for (int k = 0; k < draws; ++k) sum += carter_kohn_states(s, x, rng).col(0);
    for (Eigen::Index t = 0; t < T; ++t) {
        const double se = std::sqrt(rts.cov[t](0, 0) / draws);
        EXPECT_NEAR(sum(t) / draws, rts.mean[t](0), 3.5 * se) << "t=" << t;
    }
}

TEST(CarterKohn, ZeroLoadingsRecoverPrior) {
    Rng rng(3);
    const auto s = ar1_state(0.8, 1.0, Matrix::Zero(2, 1), Vector::Constant(2, 1.0));
    const Matrix x = Matrix::Random(30, 2);
    const int draws = 4000;
    double s2 = 0.0;
    for (int k = 0; k < draws; ++k) {
        const Matrix f = carter_kohn_states(s, x, rng);
        s2 += f(10, 0) * f(10, 0);
    }
    const double uncond = 1.0 / (1 - 0.64);
    EXPECT_NEAR(s2 / draws / uncond, 1.0, 0.06);
}

TEST(CarterKohn, SecondOrderLagsMatchJointGaussian) {
    // AR(2) factor, two series: compare draw moments with direct Gaussian
    // conditioning of the full joint distribution.
    Rng rng(4);
    StateSpace s;
    Matrix c(3, 1);
    c << 0.5, 0.3, 0.1;
    s.var = VarCoefficients(c, 1, 2);
    s.innov_cov = Matrix::Constant(1, 1, 0.6);
    s.loadings = Matrix(2, 1);
    s.loadings << 1.0, -0.6;
    s.meas_var = Vector(2);
    s.meas_var << 0.4, 0.7;
    const Eigen::Index T = 12;

    // joint of (y_{-1}, y_0, ..., y_{T-1}) as a linear map of (s_0, eta_1..eta_{T-1})
    const Matrix A = s.var.companion();
    const Matrix p0 = [&] {
        Matrix p = Matrix::Zero(2, 2), ak = Matrix::Identity(2, 2);
        Matrix g = Matrix::Zero(2, 2);
        g(0, 0) = 0.6;
        for (int k = 0; k < 4000; ++k) {
            p += ak * g * ak.transpose();
            ak = A * ak;
        }
        return p;
    }();
    const double mean_y = 0.1 / (1 - 0.5 - 0.3);
    const Eigen::Index dim = 2 + (T - 1);
    Matrix map = Matrix::Zero(T + 1, dim);  // row 0: y_{-1}, row t+1: y_t
    Vector mu = Vector::Constant(T + 1, mean_y);
    const Matrix l0 = psd_factor(p0);
    map.row(1) = Eigen::RowVectorXd::Zero(dim);
    map.block(1, 0, 1, 2) = l0.row(0);
    map.block(0, 0, 1, 2) = l0.row(1);
    for (Eigen::Index t = 1; t < T; ++t) {
        map.row(t + 1) = 0.5 * map.row(t) + 0.3 * map.row(t - 1);
        map(t + 1, 1 + t) += std::sqrt(0.6);
    }
    const Matrix cov_y = map * map.transpose();
    // observations stacked (t, j)
    Matrix h = Matrix::Zero(2 * T, T + 1);
    Vector r = Vector::Zero(2 * T);
    for (Eigen::Index t = 0; t < T; ++t)
        for (Eigen::Index j = 0; j < 2; ++j) {
            h(2 * t + j, t + 1) = s.loadings(j, 0);
            r(2 * t + j) = s.meas_var(j);
        }
    Vector truth = mu + map * standard_normal_vector(dim, rng);
    Vector xs = h * truth;
    for (Eigen::Index i = 0; i < xs.size(); ++i) xs(i) += rng.normal(0.0, std::sqrt(r(i)));
    const Matrix sxx = h * cov_y * h.transpose() + Matrix(r.asDiagonal());
    const Matrix syx = cov_y * h.transpose();
    const Vector post_mean = mu + syx * sxx.ldlt().solve(xs - h * mu);
    const Matrix post_cov = cov_y - syx * sxx.ldlt().solve(syx.transpose());

    Matrix x(T, 2);
    for (Eigen::Index t = 0; t < T; ++t) x.row(t) << xs(2 * t), xs(2 * t + 1);
    const int draws = 6000;
    Vector m1 = Vector::Zero(T), m2 = Vector::Zero(T);
    double cross = 0.0;
    for (int k = 0; k < draws; ++k) {
        const Vector f = carter_kohn_states(s, x, rng).col(0);
        m1 += f;
        m2 += f.cwiseProduct(f);
        cross += f(3) * f(4);
    }
    m1 /= draws;
    m2 /= draws;
    for (Eigen::Index t = 0; t < T; ++t) {
        const double v = post_cov(t + 1, t + 1);
        EXPECT_NEAR(m1(t), post_mean(t + 1), 4 * std::sqrt(v / draws)) << t;
        EXPECT_NEAR((m2(t) - m1(t) * m1(t)) / v, 1.0, 0.08) << t;
    }
    const double cov34 = cross / draws - m1(3) * m1(4);
    EXPECT_NEAR(cov34, post_cov(4, 5), 0.05);
}

TEST(CarterKohn, ObservedFactorIsReproducedExactly) {
    Rng rng(5);
    StateSpace s;
    Matrix c(3, 2);
    c << 0.5, 0.1, 0.2, 0.6, 0.0, 0.0;
    s.var = VarCoefficients(c, 2, 1);
    s.innov_cov = Matrix::Identity(2, 2);
    s.has_z = true;
    s.loadings = Matrix(4, 2);
    s.loadings << 1.0, 0.0, 0.3, 0.9, -0.2, 0.7, 0.1, -1.1;
    s.meas_var = Vector::Constant(3, 0.3);
    Matrix obs(25, 4);
    obs.setRandom();
    const Matrix y = carter_kohn_states(s, obs, rng);
    EXPECT_LT((y.col(0) - obs.col(0)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Projection, IdentityAndOrthogonalCases) {
    Rng rng(6);
    Matrix f(50, 2);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = rng.normal();
    EXPECT_LT((project_loadings(f, f) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-10);

    // residual of a regression on f is orthogonal to f
    Matrix x(50, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    const Matrix resid = x - f * (f.transpose() * f).ldlt().solve(f.transpose() * x);
    EXPECT_LT(project_loadings(f, resid).cwiseAbs().maxCoeff(), 1e-10);

    const Matrix ols = (f.transpose() * f).ldlt().solve(f.transpose() * x);
    EXPECT_LT((project_loadings(f, x) - ols).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Projection, RankDeficientUsesMinimumNorm) {
    Matrix f(4, 2);
    f << 1, 2, 2, 4, 3, 6, 4, 8;  // second column = 2 x first
    Vector x(4);
    x << 1, 2, 3, 4;
    const Matrix a = project_loadings(f, x);
    // minimum-norm solution of a1 + 2 a2 = 1
    EXPECT_NEAR(a(0, 0), 0.2, 1e-10);
    EXPECT_NEAR(a(1, 0), 0.4, 1e-10);
}
