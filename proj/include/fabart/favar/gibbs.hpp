#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fabart/bart/forest.hpp"
#include "fabart/bart/sampler.hpp"
#include "fabart/core/parallel.hpp"
#include "fabart/favar/config.hpp"
#include "fabart/favar/kalman.hpp"
#include "fabart/favar/panel.hpp"
#include "fabart/favar/state_space.hpp"
#include "fabart/favar/var_prior.hpp"

namespace fabart::favar {

/// Estimation-ready view of a panel: standardized X and Z, principal
/// components for initialization and sign normalization, and the per-equation
/// affine map onto the [-0.5, 0.5] tree scale.
struct FavarModel {
    PanelData panel;
    Standardizer x_scaler;
    Matrix x;
    Vector z;
    double z_mean = 0.0;
    double z_scale = 1.0;
    Matrix pca;
    /// Tree scale: rescaled = (x - mid) / range.
    Vector target_mid;
    Vector target_range;
    Matrix x_rescaled;
    /// Error-variance prior scale per equation (tree units).
    Vector sigma_xi;
    int n_factors = 0;

    bool has_z() const noexcept { return z.size() > 0; }
    Eigen::Index periods() const noexcept { return x.rows(); }
    Eigen::Index n_vars() const noexcept { return x.cols(); }
    Eigen::Index n_state_vars() const noexcept { return n_factors + (has_z() ? 1 : 0); }

    /// [Z, F] in standardized units.
    Matrix augment(const Matrix& factors) const {
        if (!has_z()) return factors;
        Matrix y(factors.rows(), factors.cols() + 1);
        y.col(0) = z;
        y.rightCols(factors.cols()) = factors;
        return y;
    }

    /// Observation matrix for the state-space form: [Z, X] standardized.
    Matrix observations() const {
        if (!has_z()) return x;
        Matrix o(x.rows(), x.cols() + 1);
        o.col(0) = z;
        o.rightCols(x.cols()) = x;
        return o;
    }

    static FavarModel build(const PanelData& panel, const FavarConfig& config) {
        panel.validate();
        config.validate();
        FavarModel m;
        m.panel = panel;
        m.n_factors = config.n_factors;
        if (config.n_factors > panel.n_vars()) throw ConfigError("more factors than panel variables");
        const Eigen::Index min_t = config.training_obs + config.n_lags + 2;
        if (panel.periods() <= min_t)
            throw ConfigError("panel has " + std::to_string(panel.periods()) + " periods; need more than " +
                              std::to_string(min_t) + " (training window plus lags)");
        m.x_scaler = Standardizer::fit(panel.x);
        m.x = m.x_scaler.apply(panel.x);
        if (panel.has_z()) {
            m.z_mean = panel.z.mean();
            m.z_scale = std::sqrt(sample_variance(panel.z));
            if (!(m.z_scale > 0.0)) throw DataError("observed factor has zero variance");
            m.z = (panel.z.array() - m.z_mean) / m.z_scale;
        }
        m.pca = principal_components(m.x, config.n_factors);

        const Eigen::Index n = m.n_vars();
        m.target_mid.resize(n);
        m.target_range.resize(n);
        m.x_rescaled.resize(m.periods(), n);
        m.sigma_xi.resize(n);
        const Matrix y0 = m.augment(m.pca);
        Matrix design(m.periods(), y0.cols() + 1);
        design << y0, Vector::Ones(m.periods());
        const double nu = config.bart_prior.nu_for(static_cast<std::size_t>(m.periods()));
        for (Eigen::Index j = 0; j < n; ++j) {
            const double lo = m.x.col(j).minCoeff();
            const double hi = m.x.col(j).maxCoeff();
            m.target_mid(j) = 0.5 * (lo + hi);
            m.target_range(j) = hi - lo;
            m.x_rescaled.col(j) = (m.x.col(j).array() - m.target_mid(j)) / m.target_range(j);
            const Vector b = least_squares(design, m.x_rescaled.col(j));
            const Vector e = m.x_rescaled.col(j) - design * b;
            const double dof = std::max<double>(1.0, static_cast<double>(m.periods() - design.cols()));
            const double sigma_hat = std::max(std::sqrt(e.squaredNorm() / dof), 1e-6);
            m.sigma_xi(j) = bart::calibrate_sigma_prior(sigma_hat, nu, config.bart_prior.quantile);
        }
        return m;
    }

    bart::BartPrior equation_prior(const FavarConfig& config, Eigen::Index j) const {
        bart::BartPrior p = config.bart_prior;
        p.xi = sigma_xi(j);
        return p;
    }
};

/// One state of the Gibbs chain.
struct ChainDraw {
    StateSpace state;
    /// Latent factors F (T x J), standardized and sign-normalized.
    Matrix factors;
    /// Measurement forests (empty for the linear measurement model).
    std::vector<bart::Forest> forests;
};

/// Measurement-equation mean of X at the rows of `y` ([Z, F] standardized),
/// in standardized X units.
inline Matrix measurement_mean(const ChainDraw& draw, const FavarModel& model, const Matrix& y) {
    const Eigen::Index n = model.n_vars();
    if (draw.forests.empty()) return y * draw.state.x_loadings().transpose();
    Matrix out(y.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j)
        out.col(j) = (model.target_range(j) * bart::predict_forest(draw.forests[static_cast<std::size_t>(j)], y)).array() +
                     model.target_mid(j);
    return out;
}

/// Effect-size loadings: minimum-norm least-squares projection of each
/// column of `x` on the columns of `factors_aug`. Returns (J+1) x N.
inline Matrix project_loadings(const Matrix& factors_aug, const Matrix& x) {
    if (factors_aug.rows() != x.rows()) throw StructuralError("projection inputs have different row counts");
    return least_squares(factors_aug, x);
}

/// Demeans and scales each factor to unit variance, and flips its sign to
/// correlate positively with the matching principal component.
inline Matrix normalize_factors(const Matrix& factors, const Matrix& reference) {
    Matrix out = factors;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        Vector c = out.col(j);
        c.array() -= c.mean();
        const double sd = std::sqrt(sample_variance(c));
        if (sd > 0.0) c /= sd;
        if (j < reference.cols() && correlation(c, reference.col(j)) < 0.0) c = -c;
        out.col(j) = c;
    }
    return out;
}

/// State-space form of a draw: companion transition, loadings on the first
/// block, and the pre-sample moments (stationary moments when the VAR draw
/// is stable, a wide prior otherwise).
inline LinearGaussianModel state_space_form(const StateSpace& state, double initial_state_var) {
    LinearGaussianModel ssm;
    const auto& var = state.var;
    const Eigen::Index m = var.n_vars;
    const Eigen::Index n = m * var.n_lags;
    ssm.transition = var.companion();
    ssm.intercept = var.companion_intercept();
    ssm.state_noise = state.innov_cov;
    ssm.obs_loadings = state.loadings;
    ssm.obs_var.resize(state.loadings.rows());
    if (state.has_z) {
        ssm.obs_var(0) = 0.0;
        ssm.obs_var.tail(state.meas_var.size()) = state.meas_var;
    } else {
        ssm.obs_var = state.meas_var;
    }
    if (spectral_radius(ssm.transition) < 0.999) {
        Matrix sum_phi = Matrix::Identity(m, m);
        for (int l = 1; l <= var.n_lags; ++l) sum_phi -= var.lag(l);
        const Vector mean = sum_phi.lu().solve(var.intercept());
        ssm.initial_mean = mean.replicate(var.n_lags, 1);
        ssm.initial_cov = stationary_covariance(ssm.transition, ssm.full_state_noise());
    } else {
        ssm.initial_mean = Vector::Zero(n);
        ssm.initial_cov = Matrix::Identity(n, n) * initial_state_var;
    }
    return ssm;
}

/// Forward-filter backward-sample draw of the full state path; returns the
/// current-period block [Z, F] (T x M).
inline Matrix carter_kohn_states(const StateSpace& state, const Matrix& observations, Rng& rng,
                                 double initial_state_var = 10.0) {
    const auto ssm = state_space_form(state, initial_state_var);
    const auto filt = kalman_filter(ssm, observations);
    const Matrix draws = simulation_smoother(ssm, filt, rng);
    return draws.leftCols(state.var.n_vars);
}

/// Latent factor draw F (T x J) given one set of state-space parameters.
inline Matrix carter_kohn(const StateSpace& state, const FavarModel& model, Rng& rng, double initial_state_var = 10.0) {
    const Matrix y = carter_kohn_states(state, model.observations(), rng, initial_state_var);
    return y.rightCols(model.n_factors);
}

struct GibbsOptions {
    /// Step 5 (factor draw); disable to hold the factors fixed.
    bool sample_factors = true;
};

struct IterationTrace {
    int iteration = 0;
    double mean_sigma = 0.0;
    double loading_norm = 0.0;
    double tree_accept_rate = 0.0;
    double mean_leaves = 0.0;
};

namespace detail {

struct EquationUpdate {
    Vector loadings;
    double meas_var = 1.0;
    bart::Forest forest;
    int accepted = 0;
    double leaves = 0.0;
};

inline EquationUpdate update_equation(const ChainDraw& draw, const FavarModel& model, const FavarConfig& config,
                                      const Matrix& y, Eigen::Index j, Rng& rng) {
    EquationUpdate out;
    if (config.measurement == MeasurementModel::Linear) {
        const Vector xj = model.x.col(j);
        const Matrix yty = y.transpose() * y;
        Eigen::LLT<Matrix> llt(yty);
        if (llt.info() != Eigen::Success) throw NumericalError("factor cross-product singular in loading draw");
        const Vector b = llt.solve(y.transpose() * xj);
        const double ssr = (xj - y * b).squaredNorm();
        const double dof = static_cast<double>(y.rows() - y.cols());
        out.meas_var = ssr / rng.chi_squared(dof);
        out.loadings = sample_mvn(b, out.meas_var * llt.solve(Matrix::Identity(y.cols(), y.cols())), rng);
        return out;
    }
    const auto prior = model.equation_prior(config, j);
    bart::SweepStats stats;
    out.forest = bart::backfit_sweep(draw.forests[static_cast<std::size_t>(j)], model.x_rescaled.col(j), y, prior, rng,
                                     &stats);
    out.accepted = stats.total_accepted();
    for (const auto& t : out.forest.trees) out.leaves += static_cast<double>(t.leaf_count());
    const Vector fit = (model.target_range(j) * bart::predict_forest(out.forest, y)).array() + model.target_mid(j);
    out.loadings = project_loadings(y, fit);
    const double s = out.forest.sigma * model.target_range(j);
    out.meas_var = s * s;
    return out;
}

}  // namespace detail

/// Initial chain state: principal-component factors, OLS loadings, stump
/// forests, and the VAR posterior mean.
inline ChainDraw initial_draw(const FavarModel& model, const FavarConfig& config) {
    ChainDraw d;
    d.factors = model.pca;
    const Matrix y = model.augment(d.factors);
    const Eigen::Index m = y.cols();
    const Eigen::Index n = model.n_vars();
    const Matrix b = least_squares(y, model.x);
    const Matrix resid = model.x - y * b;
    d.state.has_z = model.has_z();
    d.state.loadings = Matrix::Zero(n + (model.has_z() ? 1 : 0), m);
    if (model.has_z()) {
        d.state.loadings(0, 0) = 1.0;
        d.state.loadings.bottomRows(n) = b.transpose();
    } else {
        d.state.loadings = b.transpose();
    }
    d.state.meas_var.resize(n);
    for (Eigen::Index j = 0; j < n; ++j)
        d.state.meas_var(j) = std::max(resid.col(j).squaredNorm() / static_cast<double>(y.rows()), 1e-6);
    if (config.measurement == MeasurementModel::Bart) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double sigma0 = std::sqrt(model.sigma_xi(j));
            d.forests.push_back(bart::Forest::stumps(static_cast<std::size_t>(config.bart_prior.n_trees), sigma0,
                                                     static_cast<std::size_t>(j)));
        }
    }
    const auto moments = ar1_prior_moments(y.topRows(config.training_obs));
    const auto dummies =
        build_dummy_observations(moments.mean, moments.scale, config.iota, config.lambda(), config.n_lags,
                                 config.const_tightness);
    const auto post = var_posterior(var_design(y, config.n_lags, std::max(config.training_obs, config.n_lags)), dummies);
    d.state.var = VarCoefficients(post.mean, static_cast<int>(m), config.n_lags);
    d.state.innov_cov = post.sigma_mean();
    return d;
}

/// One sweep of the sampler: (1) VAR coefficients, (2-3) trees, leaves and
/// sigma per equation, (4) loading projection, (5) factor draw.
inline ChainDraw gibbs_iteration(const ChainDraw& draw, const FavarModel& model, const FavarConfig& config, Rng& rng,
                                 const GibbsOptions& options = {}, IterationTrace* trace = nullptr) {
    ChainDraw next = draw;
    const Matrix y = model.augment(draw.factors);
    const Eigen::Index n = model.n_vars();
    const auto n_u = static_cast<std::size_t>(n);

    Rng var_rng = rng.split(n_u);
    try {
        auto v = sample_var_coefficients(y, config.n_lags, config.training_obs, config.iota, config.lambda(),
                                         config.const_tightness, var_rng);
        next.state.var = std::move(v.coef);
        next.state.innov_cov = std::move(v.innov_cov);
    } catch (const Error& e) {
        throw NumericalError(std::string("step 1 (VAR coefficients): ") + e.what());
    }

    std::vector<detail::EquationUpdate> updates(n_u);
    try {
        parallel_for(n_u, config.threads, [&](std::size_t j) {
            Rng eq_rng = rng.split(j);
            updates[j] = detail::update_equation(draw, model, config, y, static_cast<Eigen::Index>(j), eq_rng);
        });
    } catch (const Error& e) {
        throw NumericalError(std::string("steps 2-4 (measurement equations): ") + e.what());
    }

    const Eigen::Index offset = model.has_z() ? 1 : 0;
    int accepted = 0;
    double leaves = 0.0;
    for (std::size_t j = 0; j < n_u; ++j) {
        const auto ji = static_cast<Eigen::Index>(j);
        next.state.loadings.row(offset + ji) = updates[j].loadings.transpose();
        next.state.meas_var(ji) = std::max(updates[j].meas_var, 1e-10);
        if (!next.forests.empty()) next.forests[j] = std::move(updates[j].forest);
        accepted += updates[j].accepted;
        leaves += updates[j].leaves;
    }

    if (options.sample_factors) {
        Rng ck_rng = rng.split(n_u + 1);
        try {
            next.factors = normalize_factors(carter_kohn(next.state, model, ck_rng, config.initial_state_var), model.pca);
        } catch (const Error& e) {
            throw NumericalError(std::string("step 5 (factor draw): ") + e.what());
        }
    }

    if (trace) {
        trace->loading_norm = next.state.x_loadings().norm();
        trace->mean_sigma = next.state.meas_var.cwiseSqrt().mean();
        if (!next.forests.empty()) {
            const double trees = static_cast<double>(n * config.bart_prior.n_trees);
            trace->tree_accept_rate = accepted / trees;
            trace->mean_leaves = leaves / trees;
        }
    }
    return next;
}

struct ChainResult {
    FavarModel model;
    FavarConfig config;
    std::vector<ChainDraw> draws;
    std::vector<IterationTrace> trace;

    /// Posterior mean of the factors over retained draws.
    Matrix mean_factors() const {
        Matrix m = Matrix::Zero(model.periods(), model.n_factors);
        for (const auto& d : draws) m += d.factors;
        return m / static_cast<double>(draws.size());
    }
};

struct ChainOptions {
    /// Keep forests in retained draws (needed for forecasting and GIRFs).
    bool store_forests = true;
    GibbsOptions gibbs{};
    std::function<void(int)> progress;
};

inline ChainResult run_chain(const PanelData& panel, const FavarConfig& config, Rng& rng,
                             const ChainOptions& options = {}) {
    config.validate();
    ChainResult result;
    result.model = FavarModel::build(panel, config);
    result.config = config;
    ChainDraw draw = initial_draw(result.model, config);
    result.draws.reserve(static_cast<std::size_t>(config.retained()));
    result.trace.reserve(static_cast<std::size_t>(config.n_draws));
    for (int it = 0; it < config.n_draws; ++it) {
        Rng it_rng = rng.split(static_cast<std::uint64_t>(it));
        IterationTrace tr;
        tr.iteration = it;
        draw = gibbs_iteration(draw, result.model, config, it_rng, options.gibbs, &tr);
        result.trace.push_back(tr);
        if (it >= config.n_burn && (it - config.n_burn) % config.thin == 0) {
            ChainDraw kept = draw;
            if (!options.store_forests) kept.forests.clear();
            result.draws.push_back(std::move(kept));
        }
        if (options.progress) options.progress(it);
    }
    return result;
}

}  // namespace fabart::favar
