#include <gtest/gtest.h>

#include "fabart/favar/forecast.hpp"
#include "fabart/favar/gibbs.hpp"

using namespace fabart;
using namespace fabart::favar;

namespace {

PanelData linear_panel(Eigen::Index T, Eigen::Index n, bool with_z, Rng& rng, Matrix* loadings = nullptr) {
    Vector f(T);
    f(0) = rng.normal();
    for (Eigen::Index t = 1; t < T; ++t) f(t) = 0.6 * f(t - 1) + rng.normal(0.0, 0.8);
    Matrix lam(n, 1);
    for (Eigen::Index j = 0; j < n; ++j) lam(j, 0) = rng.uniform(0.5, 1.5);
    PanelData p;
    p.x.resize(T, n);
    for (Eigen::Index t = 0; t < T; ++t)
        for (Eigen::Index j = 0; j < n; ++j) p.x(t, j) = lam(j, 0) * f(t) + rng.normal(0.0, 0.4);
    if (with_z) {
        p.z.resize(T);
        p.z(0) = 0.0;
        for (Eigen::Index t = 1; t < T; ++t) p.z(t) = 0.5 * p.z(t - 1) + 0.3 * f(t - 1) + rng.normal(0.0, 0.5);
        p.z_name = "R";
    }
    if (loadings) *loadings = lam;
    return p;
}

FavarConfig small_config() {
    FavarConfig c;
    c.n_factors = 1;
    c.n_lags = 2;
    c.n_draws = 10;
    c.n_burn = 5;
    c.thin = 1;
    c.training_obs = 20;
    c.bart_prior.n_trees = 20;
    return c;
}

}  // namespace

TEST(Gibbs, RetainedDrawCount) {
    Rng data_rng(1);
    const auto panel = linear_panel(80, 5, false, data_rng);
    auto cfg = small_config();
    Rng rng(9);
    const auto res = run_chain(panel, cfg, rng);
    EXPECT_EQ(res.draws.size(), 5u);
    EXPECT_EQ(res.trace.size(), 10u);
    cfg.thin = 2;
    EXPECT_EQ(cfg.retained(), 3);
}

TEST(Gibbs, BurnNotBelowDrawsIsConfigError) {
    Rng data_rng(1);
    const auto panel = linear_panel(80, 5, false, data_rng);
    auto cfg = small_config();
    cfg.n_burn = cfg.n_draws;
    Rng rng(9);
    EXPECT_THROW(run_chain(panel, cfg, rng), ConfigError);
}

TEST(Gibbs, ShortPanelIsConfigError) {
    Rng data_rng(1);
    const auto panel = linear_panel(20, 5, false, data_rng);
    Rng rng(9);
    EXPECT_THROW(run_chain(panel, small_config(), rng), ConfigError);
}

TEST(Gibbs, SameSeedSameChainAnyThreadCount) {
    Rng data_rng(2);
    const auto panel = linear_panel(80, 6, true, data_rng);
    auto cfg = small_config();
    Rng a(42), b(42);
    const auto r1 = run_chain(panel, cfg, a);
    cfg.threads = 3;
    const auto r2 = run_chain(panel, cfg, b);
    ASSERT_EQ(r1.draws.size(), r2.draws.size());
    for (std::size_t d = 0; d < r1.draws.size(); ++d) {
        EXPECT_EQ(r1.draws[d].factors, r2.draws[d].factors);
        EXPECT_EQ(r1.draws[d].state.loadings, r2.draws[d].state.loadings);
        EXPECT_EQ(r1.draws[d].state.var.coef, r2.draws[d].state.var.coef);
        for (std::size_t j = 0; j < r1.draws[d].forests.size(); ++j)
            for (std::size_t s = 0; s < r1.draws[d].forests[j].trees.size(); ++s)
                EXPECT_TRUE(r1.draws[d].forests[j].trees[s] == r2.draws[d].forests[j].trees[s]);
    }
}

TEST(Gibbs, ObservedFactorLoadingRowStaysFixed) {
    Rng data_rng(3);
    const auto panel = linear_panel(80, 5, true, data_rng);
    Rng rng(4);
    const auto res = run_chain(panel, small_config(), rng);
    for (const auto& d : res.draws) {
        EXPECT_DOUBLE_EQ(d.state.loadings(0, 0), 1.0);
        EXPECT_DOUBLE_EQ(d.state.loadings.row(0).tail(d.state.loadings.cols() - 1).cwiseAbs().maxCoeff(), 0.0);
        EXPECT_NO_THROW(d.state.validate());
    }
}

TEST(Gibbs, FixedFactorsRecoverLinearLoadings) {
    Rng data_rng(5);
    Matrix lam;
    const auto panel = linear_panel(200, 4, false, data_rng, &lam);
    auto cfg = small_config();
    cfg.n_draws = 60;
    cfg.n_burn = 20;
    cfg.bart_prior.n_trees = 50;
    const auto model = FavarModel::build(panel, cfg);
    ChainDraw draw = initial_draw(model, cfg);
    const Matrix y = model.augment(draw.factors);
    const Matrix ols = least_squares(y, model.x);
    Rng rng(6);
    Matrix acc = Matrix::Zero(4, 1);
    int kept = 0;
    for (int it = 0; it < cfg.n_draws; ++it) {
        Rng it_rng = rng.split(static_cast<std::uint64_t>(it));
        draw = gibbs_iteration(draw, model, cfg, it_rng, GibbsOptions{false});
        if (it >= cfg.n_burn) {
            acc += draw.state.x_loadings();
            ++kept;
        }
    }
    const Matrix mean = acc / kept;
    for (Eigen::Index j = 0; j < 4; ++j) EXPECT_NEAR(mean(j, 0), ols(0, j), 0.1) << j;
}

TEST(Gibbs, LinearMeasurementMatchesConjugateRegression) {
    Rng data_rng(7);
    const auto panel = linear_panel(150, 3, false, data_rng);
    auto cfg = small_config();
    cfg.measurement = MeasurementModel::Linear;
    const auto model = FavarModel::build(panel, cfg);
    ChainDraw draw = initial_draw(model, cfg);
    EXPECT_TRUE(draw.forests.empty());
    const Matrix y = model.augment(draw.factors);
    const Matrix ols = least_squares(y, model.x);
    Rng rng(8);
    Matrix acc = Matrix::Zero(3, 1);
    const int n = 2000;
    for (int k = 0; k < n; ++k) {
        Rng r = rng.split(static_cast<std::uint64_t>(k));
        acc += gibbs_iteration(draw, model, cfg, r, GibbsOptions{false}).state.x_loadings();
    }
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(acc(j, 0) / n, ols(0, j), 0.01);
}

TEST(Gibbs, FactorsAreNormalized) {
    Rng data_rng(9);
    const auto panel = linear_panel(80, 5, false, data_rng);
    Rng rng(10);
    const auto res = run_chain(panel, small_config(), rng);
    for (const auto& d : res.draws) {
        EXPECT_NEAR(d.factors.col(0).mean(), 0.0, 1e-10);
        EXPECT_NEAR(sample_variance(d.factors.col(0)), 1.0, 1e-10);
        EXPECT_GT(correlation(d.factors.col(0), res.model.pca.col(0)), 0.0);
    }
}

TEST(Forecast, HorizonZeroIsError) {
    Rng data_rng(11);
    const auto panel = linear_panel(80, 5, false, data_rng);
    Rng rng(12);
    const auto res = run_chain(panel, small_config(), rng);
    EXPECT_THROW(forecast(res, 0, rng), ConfigError);
}

TEST(Forecast, ZeroNoiseFollowsConditionalMean) {
    Rng data_rng(13);
    const auto panel = linear_panel(80, 4, true, data_rng);
    auto cfg = small_config();
    cfg.measurement = MeasurementModel::Linear;
    Rng rng(14);
    const auto res = run_chain(panel, cfg, rng);
    Rng fc_rng(15);
    const auto ens = forecast(res, 3, fc_rng, ForecastOptions{0.0, 1});
    ASSERT_EQ(ens.paths.size(), res.draws.size());
    EXPECT_EQ(ens.names.front(), "R");
    for (std::size_t d = 0; d < res.draws.size(); ++d) {
        const auto& draw = res.draws[d];
        const Matrix y = res.model.augment(draw.factors);
        const Vector y1 = draw.state.var.predict(y.bottomRows(cfg.n_lags));
        const double z1 = y1(0) * res.model.z_scale + res.model.z_mean;
        EXPECT_NEAR(ens.paths[d](0, 0), z1, 1e-10);
        const Vector x1 = draw.state.x_loadings() * y1;
        const Matrix x1o = res.model.x_scaler.invert(x1.transpose());
        EXPECT_LT((ens.paths[d].row(0).tail(4) - x1o.row(0)).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Forecast, SpreadGrowsWithHorizon) {
    Rng data_rng(16);
    const auto panel = linear_panel(100, 4, false, data_rng);
    auto cfg = small_config();
    cfg.measurement = MeasurementModel::Linear;
    Rng rng(17);
    const auto res = run_chain(panel, cfg, rng);
    Rng fc_rng(18);
    const auto ens = forecast(res, 8, fc_rng, ForecastOptions{1.0, 200});
    Vector f1(static_cast<Eigen::Index>(ens.factor_paths.size())), f8(f1.size());
    for (std::size_t d = 0; d < ens.factor_paths.size(); ++d) {
        f1(static_cast<Eigen::Index>(d)) = ens.factor_paths[d](0, 0);
        f8(static_cast<Eigen::Index>(d)) = ens.factor_paths[d](7, 0);
    }
    EXPECT_GT(sample_variance(f8), sample_variance(f1));
}
