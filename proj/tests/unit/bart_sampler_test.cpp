#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "../support/oracles.hpp"
#include "fabart/bart/sampler.hpp"

using namespace fabart;
using namespace fabart::bart;

namespace {

Matrix uniform_rows(Eigen::Index n, Eigen::Index p, Rng& rng) {
    Matrix m(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    return m;
}

double log_normal_pdf(double x, double var) { return -0.5 * std::log(2 * std::numbers::pi * var) - 0.5 * x * x / var; }

}  // namespace

TEST(BartPrior, NodeSplitProbability) {
    BartPrior p;
    EXPECT_DOUBLE_EQ(node_split_probability(0, p), 0.95);
    EXPECT_DOUBLE_EQ(node_split_probability(1, p), 0.2375);
    p.alpha = 0.5;
    p.beta = 1.0;
    EXPECT_DOUBLE_EQ(node_split_probability(3, p), 0.125);
}

TEST(BartPrior, Defaults) {
    const BartPrior p;
    EXPECT_EQ(p.n_trees, 250);
    EXPECT_DOUBLE_EQ(p.alpha, 0.95);
    EXPECT_DOUBLE_EQ(p.beta, 2.0);
    EXPECT_DOUBLE_EQ(p.kappa, 2.0);
    EXPECT_DOUBLE_EQ(p.quantile, 0.75);
    EXPECT_DOUBLE_EQ(p.nu_for(300), 150.0);
    EXPECT_NEAR(p.leaf_sd(), 0.5 / (2.0 * std::sqrt(250.0)), 1e-15);
    BartPrior bad;
    bad.alpha = 1.0;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(MarginalLikelihood, SingleResidual) {
    BartPrior prior;
    prior.n_trees = 1;
    prior.kappa = 0.5;  // leaf sd = 0.5 / (0.5 * 1) = 1
    ASSERT_DOUBLE_EQ(prior.leaf_sd(), 1.0);
    Vector r(1);
    r << 0.7;
    const double ll = log_marginal_likelihood(r, RegressionTree(), Matrix::Zero(1, 1), 1.0, prior);
    EXPECT_NEAR(ll, log_normal_pdf(0.7, 2.0), 1e-12);
}

TEST(MarginalLikelihood, VanishingLeafPriorIsPureNoise) {
    BartPrior prior;
    prior.kappa = 1e9;
    Vector r(3);
    r << 0.2, -0.4, 1.1;
    const double ll = log_marginal_likelihood(r, RegressionTree(), Matrix::Zero(3, 1), 0.8, prior);
    double expected = 0.0;
    for (Eigen::Index i = 0; i < 3; ++i) expected += log_normal_pdf(r(i), 0.64);
    EXPECT_NEAR(ll, expected, 1e-9);
}

TEST(MarginalLikelihood, MatchesQuadratureOnTwoLeafTrees) {
    Rng rng(21);
    for (int rep = 0; rep < 5; ++rep) {
        BartPrior prior;
        prior.n_trees = 1 + static_cast<int>(rng.index(20));
        const double sigma = rng.uniform(0.2, 1.5);
        Matrix rows(4, 1);
        rows << -1.0, -0.5, 0.5, 1.0;
        RegressionTree t;
        t.grow(0, {0, rng.uniform(-0.9, 0.9)});
        Vector r(4);
        for (Eigen::Index i = 0; i < 4; ++i) r(i) = rng.normal(0.0, 0.5);
        std::vector<double> left, right;
        for (Eigen::Index i = 0; i < 4; ++i) (rows(i, 0) <= t.node(0).rule.threshold ? left : right).push_back(r(i));
        const double tau = prior.leaf_sd();
        const double expected = oracle::leaf_integral_quadrature(left, sigma, tau) +
                                oracle::leaf_integral_quadrature(right, sigma, tau);
        EXPECT_NEAR(log_marginal_likelihood(r, t, rows, sigma, prior), expected, 1e-4);
    }
}

TEST(MarginalLikelihood, EmptyLeafIsMinusInfinity) {
    Matrix rows(3, 1);
    rows << 0.1, 0.2, 0.3;
    RegressionTree t;
    t.grow(0, {0, 5.0});
    EXPECT_EQ(log_marginal_likelihood(Vector::Ones(3), t, rows, 1.0, BartPrior{}),
              -std::numeric_limits<double>::infinity());
}

TEST(Proposals, RootOnlyTreeOnlyGrows) {
    Rng rng(4);
    const Matrix rows = uniform_rows(20, 2, rng);
    const auto space = SplitSpace::from_rows(rows);
    RegressionTree root;
    for (int k = 0; k < 200; ++k) {
        const auto p = propose_move(root, space, rng);
        EXPECT_EQ(p.feasible(), p.move == Move::Grow);
    }
}

TEST(Proposals, SwapNeedsInternalPair) {
    Rng rng(4);
    RegressionTree t;
    t.grow(0, {0, 0.0});
    const auto space = SplitSpace::from_rows(uniform_rows(5, 1, rng));
    for (int k = 0; k < 200; ++k) {
        const auto p = propose_move(t, space, rng);
        if (p.move == Move::Swap) EXPECT_FALSE(p.feasible());
        else EXPECT_TRUE(p.feasible());
    }
}

TEST(Proposals, MoveFrequencies) {
    Rng rng(99);
    const auto space = SplitSpace::from_rows(uniform_rows(10, 2, rng));
    RegressionTree t;
    t.grow(0, {0, 0.0});
    std::array<int, 4> counts{};
    const int n = 10000;
    for (int k = 0; k < n; ++k) counts[static_cast<std::size_t>(propose_move(t, space, rng).move)]++;
    for (std::size_t m = 0; m < 4; ++m) EXPECT_NEAR(counts[m] / double(n), kMoveProbabilities[m], 0.02);
}

TEST(Proposals, ThresholdsStayInObservedRange) {
    Rng rng(8);
    const Matrix rows = uniform_rows(30, 3, rng);
    const auto space = SplitSpace::from_rows(rows);
    RegressionTree t;
    for (int k = 0; k < 500; ++k) {
        const auto p = propose_move(t, space, rng);
        if (!p.feasible() || p.move != Move::Grow) continue;
        const auto& rule = p.candidate->node(0).rule;
        ASSERT_LT(rule.variable, 3u);
        EXPECT_GE(rule.threshold, space.lower(static_cast<Eigen::Index>(rule.variable)));
        EXPECT_LE(rule.threshold, space.upper(static_cast<Eigen::Index>(rule.variable)));
    }
}

TEST(MhAccept, IdenticalCandidateAlwaysAccepted) {
    Rng rng(12);
    const Matrix rows = uniform_rows(15, 1, rng);
    const auto space = SplitSpace::from_rows(rows);
    RegressionTree t;
    t.grow(0, {0, 0.0});
    Proposal p{Move::Change, t, 0.0};
    const Vector r = rows.col(0);
    for (int k = 0; k < 100; ++k) EXPECT_TRUE(mh_accept(t, p, r, rows, space, 1.0, BartPrior{}, rng).accepted);
}

TEST(MhAccept, EmptyLeafNeverAccepted) {
    Rng rng(12);
    Matrix rows(4, 1);
    rows << 0.0, 0.1, 0.2, 1.0;
    const auto space = SplitSpace::from_rows(rows);
    RegressionTree cand;
    cand.grow(0, {0, 2.0});
    Proposal p{Move::Grow, cand, 50.0};
    for (int k = 0; k < 100; ++k)
        EXPECT_FALSE(mh_accept(RegressionTree(), p, Vector::Ones(4), rows, space, 1.0, BartPrior{}, rng).accepted);
}

TEST(MhAccept, PriorOnlyChainReproducesDepthLaw) {
    Rng rng(2024);
    const Matrix rows = uniform_rows(10, 2, rng);
    const auto space = SplitSpace::from_rows(rows);
    const BartPrior prior;
    RegressionTree t;
    const int bins = 4;
    std::vector<double> counts(bins + 1, 0.0);
    const int samples = 20000;
    for (int k = 0; k < 200; ++k) t = mh_accept(t, propose_move(t, space, rng), Vector(), rows, space, 1.0, prior, rng, {false}).tree;
    for (int s = 0; s < samples; ++s) {
        for (int k = 0; k < 10; ++k)
            t = mh_accept(t, propose_move(t, space, rng), Vector(), rows, space, 1.0, prior, rng, {false}).tree;
        counts[std::min(t.max_depth(), bins)] += 1.0;
    }
    const auto law = oracle::depth_law(prior.alpha, prior.beta, bins);
    EXPECT_GT(oracle::chi_square_p_value(counts, law), 0.01);
}

TEST(LeafPosterior, LimitsAndConjugateMoments) {
    Rng rng(31);
    Matrix rows = Matrix::Zero(5, 1);
    Vector r(5);
    r << 0.3, 0.5, 0.1, 0.9, 0.2;
    const double rbar = r.mean();

    BartPrior flat;
    flat.kappa = 1e-6;  // huge leaf sd
    double m = 0.0;
    for (int k = 0; k < 2000; ++k) m += sample_leaf_values(RegressionTree(), r, rows, 0.01, flat, rng).node(0).value;
    EXPECT_NEAR(m / 2000, rbar, 1e-3);

    BartPrior tight;
    tight.kappa = 1e8;
    EXPECT_NEAR(sample_leaf_values(RegressionTree(), r, rows, 1.0, tight, rng).node(0).value, 0.0, 1e-6);

    // n=5, sigma=1, leaf sd 0.5: posterior var = 1/(5 + 4), mean = var * sum
    BartPrior p;
    p.n_trees = 1;
    p.kappa = 1.0;
    ASSERT_DOUBLE_EQ(p.leaf_sd(), 0.5);
    const double pv = 1.0 / (5.0 / 1.0 + 1.0 / 0.25);
    const double pm = pv * r.sum();
    const int n = 100000;
    double s1 = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k) {
        const double v = sample_leaf_values(RegressionTree(), r, rows, 1.0, p, rng).node(0).value;
        s1 += v;
        s2 += v * v;
    }
    const double mean = s1 / n;
    const double var = s2 / n - mean * mean;
    EXPECT_NEAR(mean, pm, 0.01 * std::abs(pm) + 3 * std::sqrt(pv / n));
    EXPECT_NEAR(var / pv, 1.0, 0.01);
}

TEST(SigmaPrior, CalibrationQuantile) {
    Rng rng(41);
    const double nu = 150.0;
    const double sigma_hat = 0.37;
    const double xi = calibrate_sigma_prior(sigma_hat, nu, 0.75);
    int below = 0;
    const int n = 100000;
    for (int k = 0; k < n; ++k)
        if (std::sqrt(nu * xi / rng.chi_squared(nu)) < sigma_hat) ++below;
    EXPECT_NEAR(below / double(n), 0.75, 0.01);
}

TEST(SigmaPosterior, MeanMatchesInverseChiSquare) {
    Rng rng(43);
    BartPrior p;
    p.nu = 10.0;
    p.xi = 0.2;
    Vector r(40);
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = rng.normal(0.0, 0.6);
    // sigma^2 ~ scale / chi2(df): E = scale / (df - 2)
    const double df = p.nu + 40.0;
    const double expected = (p.nu * p.xi + r.squaredNorm()) / (df - 2.0);
    double acc = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
        const double s = sample_sigma(r, p, rng);
        acc += s * s;
    }
    EXPECT_NEAR(acc / n / expected, 1.0, 0.01);
}

TEST(SigmaPosterior, ZeroResidualsStayNearPriorScale) {
    Rng rng(44);
    BartPrior p;
    p.nu = 5000.0;
    p.xi = 0.09;
    const Vector r = Vector::Zero(10);
    double acc = 0.0;
    for (int k = 0; k < 1000; ++k) acc += sample_sigma(r, p, rng);
    EXPECT_NEAR(acc / 1000, 0.3, 0.01);
}

TEST(Backfit, ZeroTargetShrinksToZero) {
    Rng rng(51);
    const Matrix rows = uniform_rows(100, 1, rng);
    BartPrior prior;
    prior.n_trees = 20;
    prior.xi = calibrate_sigma_prior(0.05, prior.nu_for(100), prior.quantile);
    Forest f = Forest::stumps(20, 0.05);
    for (auto& t : f.trees) t.set_value(0, 0.02);
    const Vector target = Vector::Zero(100);
    for (int k = 0; k < 50; ++k) f = backfit_sweep(f, target, rows, prior, rng);
    EXPECT_LT(predict_forest(f, rows).cwiseAbs().maxCoeff(), 0.1);
}

TEST(Backfit, RecoversStepFunction) {
    Rng rng(52);
    const Eigen::Index n = 200;
    const Matrix rows = uniform_rows(n, 1, rng);
    const double noise = 0.05;
    Vector signal(n), target(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        signal(i) = rows(i, 0) > 0.0 ? 0.25 : -0.25;
        target(i) = signal(i) + rng.normal(0.0, noise);
    }
    BartPrior prior;
    prior.n_trees = 50;
    prior.xi = calibrate_sigma_prior(0.25, prior.nu_for(n), prior.quantile);
    Forest f = Forest::stumps(50, 0.25);
    for (int k = 0; k < 500; ++k) f = backfit_sweep(f, target, rows, prior, rng);
    const double rmse = std::sqrt((predict_forest(f, rows) - signal).squaredNorm() / n);
    EXPECT_LT(rmse, 1.5 * noise);
}

TEST(Backfit, TracksLinearSignal) {
    Rng rng(53);
    const Eigen::Index n = 150;
    Matrix rows = uniform_rows(n, 1, rng);
    Vector target = 0.4 * rows.col(0);
    for (Eigen::Index i = 0; i < n; ++i) target(i) += rng.normal(0.0, 0.05);
    BartPrior prior;
    prior.n_trees = 50;
    prior.xi = calibrate_sigma_prior(0.1, prior.nu_for(n), prior.quantile);
    Forest f = Forest::stumps(50, 0.1);
    Vector avg = Vector::Zero(n);
    for (int k = 0; k < 300; ++k) {
        f = backfit_sweep(f, target, rows, prior, rng);
        if (k >= 100) avg += predict_forest(f, rows);
    }
    EXPECT_GT(correlation(avg, target), 0.95);
}

TEST(Backfit, PriorPredictiveCoverage) {
    // Each point's forest value is a sum of S leaf draws; ~95% land in [-0.5, 0.5].
    Rng rng(54);
    const BartPrior prior;
    int inside = 0;
    const int draws = 5000;
    for (int d = 0; d < draws; ++d) {
        double total = 0.0;
        for (int s = 0; s < prior.n_trees; ++s) total += rng.normal(0.0, prior.leaf_sd());
        if (std::abs(total) <= 0.5) ++inside;
    }
    EXPECT_NEAR(inside / double(draws), 0.95, 0.02);
}
