#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "fabart/eval/scores.hpp"
#include "fabart/favar/gibbs.hpp"
#include "fabart/sim/dgp.hpp"

namespace fabart::sim {

struct ExperimentOptions {
    favar::FavarConfig chain = [] {
        favar::FavarConfig c;
        c.n_factors = 1;
        c.n_lags = 3;
        c.n_draws = 2000;
        c.n_burn = 1000;
        c.thin = 1;
        return c;
    }();
    /// First forecast origin as a share of the sample.
    double eval_start = 0.5;
    unsigned threads = 1;
    std::vector<DgpKind> kinds{DgpKind::Linear, DgpKind::SquaredLoading, DgpKind::Tanh};
};

/// Affine map a + b x fitted by OLS of `truth` on `estimate` over rows [0, n).
struct AffineMap {
    double a = 0.0;
    double b = 1.0;

    static AffineMap fit(const Vector& estimate, const Vector& truth, Eigen::Index n) {
        Matrix d(n, 2);
        d.col(0).setOnes();
        d.col(1) = estimate.head(n);
        const Vector c = least_squares(d, truth.head(n));
        return {c(0), c(1)};
    }
    Vector apply(const Vector& x) const { return (a + b * x.array()).matrix(); }
};

/// One-step-ahead forecasts of the first latent factor from each origin t in
/// [origin, T-2], using only observations up to t: for every retained draw
/// the Kalman-filtered state at t is pushed through that draw's VAR, and the
/// draws are averaged.
inline Vector filtered_factor_forecasts(const favar::ChainResult& result, Eigen::Index origin) {
    const auto& model = result.model;
    const Eigen::Index T = model.periods();
    const Eigen::Index zoff = model.has_z() ? 1 : 0;
    const Matrix obs = model.observations();
    Vector acc = Vector::Zero(T - 1 - origin);
    for (const auto& d : result.draws) {
        const auto ssm = favar::state_space_form(d.state, result.config.initial_state_var);
        const auto filt = favar::kalman_filter(ssm, obs);
        for (Eigen::Index t = origin; t < T - 1; ++t) {
            const Vector next = ssm.transition * filt.filtered_mean[static_cast<std::size_t>(t)] + ssm.intercept;
            acc(t - origin) += next(zoff);
        }
    }
    return acc / static_cast<double>(result.draws.size());
}

struct EstimatorForecast {
    std::string name;
    /// Forecasts of F_{t+1} in the truth's units, t = origin..T-2.
    Vector forecasts;
    double rmse = 0.0;
    /// In-sample estimate of the factor (T).
    Vector estimate;
};

struct KindResult {
    DgpKind kind = DgpKind::Linear;
    EstimatorForecast fabart, favar, rw;
    double ratio(const EstimatorForecast& e) const { return e.rmse / rw.rmse; }
};

struct ExperimentResult {
    Vector truth;
    Eigen::Index origin = 0;
    std::vector<KindResult> kinds;
};

inline EstimatorForecast chain_forecast(const std::string& name, const favar::ChainResult& res, const Vector& truth,
                                        Eigen::Index origin) {
    EstimatorForecast e;
    e.name = name;
    e.estimate = res.mean_factors().col(0);
    const auto map = AffineMap::fit(e.estimate, truth, origin + 1);
    e.forecasts = map.apply(filtered_factor_forecasts(res, origin));
    e.rmse = eval::rmse(e.forecasts, truth.tail(truth.size() - origin - 1));
    return e;
}

/// Recursive one-step-ahead factor forecasts for FABART, the linear FAVAR and
/// a random walk on the principal-component factor. Every DGP kind shares
/// the factor path and the B, R, V draws.
inline ExperimentResult recursive_forecast_experiment(const DgpSpec& spec, const ExperimentOptions& options, const Rng& rng,
                                                      const std::function<void(const std::string&)>& log = {}) {
    ExperimentResult out;
    Rng f_rng = rng.split(0);
    out.truth = simulate_factor(spec, f_rng);
    const Eigen::Index T = out.truth.size();
    out.origin = static_cast<Eigen::Index>(options.eval_start * static_cast<double>(T));
    if (out.origin <= options.chain.training_obs || out.origin >= T - 1)
        throw ConfigError("evaluation start leaves no forecast or training window");
    const Vector target = out.truth.tail(T - out.origin - 1);

    for (std::size_t k = 0; k < options.kinds.size(); ++k) {
        DgpSpec s = spec;
        s.kind = options.kinds[k];
        Rng p_rng = rng.split(1);
        const auto panel = to_panel_data(simulate_panel(out.truth, s, p_rng));
        KindResult kr;
        kr.kind = s.kind;

        favar::FavarConfig cfg = options.chain;
        cfg.threads = options.threads;
        favar::ChainOptions copt;
        copt.store_forests = false;
        cfg.measurement = favar::MeasurementModel::Bart;
        Rng c1 = rng.split(10 + 2 * k);
        kr.fabart = chain_forecast("FABART", favar::run_chain(panel, cfg, c1, copt), out.truth, out.origin);
        if (log) log(std::string(kind_name(s.kind)) + ": FABART done");
        cfg.measurement = favar::MeasurementModel::Linear;
        Rng c2 = rng.split(11 + 2 * k);
        kr.favar = chain_forecast("FAVAR", favar::run_chain(panel, cfg, c2, copt), out.truth, out.origin);
        if (log) log(std::string(kind_name(s.kind)) + ": FAVAR done");

        const auto model = favar::FavarModel::build(panel, cfg);
        kr.rw.name = "RW";
        kr.rw.estimate = model.pca.col(0);
        const auto map = AffineMap::fit(kr.rw.estimate, out.truth, out.origin + 1);
        kr.rw.forecasts = map.apply(eval::rw_benchmark(kr.rw.estimate, 1)).tail(T - out.origin - 1);
        kr.rw.rmse = eval::rmse(kr.rw.forecasts, target);
        out.kinds.push_back(std::move(kr));
    }
    return out;
}

/// Table layout: DGP rows, estimator columns, ratios to RW, plus the RW level.
inline void write_rmse_table(std::ostream& os, const ExperimentResult& r) {
    os.precision(6);
    os << "dgp,FABART,FAVAR,RW,rw_rmse\n";
    for (const auto& k : r.kinds)
        os << kind_name(k.kind) << ',' << k.ratio(k.fabart) << ',' << k.ratio(k.favar) << ',' << 1.0 << ',' << k.rw.rmse
           << '\n';
}

struct MonteCarloResult {
    DgpKind kind = DgpKind::Linear;
    std::vector<double> correlations;
    std::vector<int> signs;
    /// Replication x T: standardized estimate (sign aligned) minus standardized truth.
    Matrix errors;
    double mean_correlation() const {
        double s = 0.0;
        for (double c : correlations) s += c;
        return s / static_cast<double>(correlations.size());
    }
    double grand_mean_error() const { return errors.mean(); }
};

inline Vector standardized(const Vector& v) {
    Vector c = v.array() - v.mean();
    const double sd = std::sqrt(sample_variance(c));
    return sd > 0.0 ? Vector(c / sd) : c;
}

/// Holds the factor fixed and redraws B, R, V per replication; replications
/// share their panel draws across kinds.
inline std::vector<MonteCarloResult> monte_carlo(const DgpSpec& spec, int n_reps, const ExperimentOptions& options,
                                                 const Rng& rng) {
    if (n_reps < 1) throw ConfigError("n_reps must be at least 1");
    Rng f_rng = rng.split(0);
    const Vector truth = simulate_factor(spec, f_rng);
    const Vector zt = standardized(truth);
    std::vector<MonteCarloResult> out;
    for (DgpKind kind : options.kinds) {
        MonteCarloResult mc;
        mc.kind = kind;
        mc.correlations.resize(static_cast<std::size_t>(n_reps));
        mc.signs.resize(static_cast<std::size_t>(n_reps));
        mc.errors.resize(n_reps, truth.size());
        DgpSpec s = spec;
        s.kind = kind;
        parallel_for(static_cast<std::size_t>(n_reps), options.threads, [&](std::size_t r) {
            Rng p_rng = rng.split(1000 + r);
            const auto panel = to_panel_data(simulate_panel(truth, s, p_rng));
            favar::FavarConfig cfg = options.chain;
            cfg.threads = 1;
            cfg.measurement = favar::MeasurementModel::Bart;
            favar::ChainOptions copt;
            copt.store_forests = false;
            Rng c_rng = rng.split(5000 + r);
            const Vector est = favar::run_chain(panel, cfg, c_rng, copt).mean_factors().col(0);
            const double c = correlation(est, truth);
            const int sign = c < 0.0 ? -1 : 1;
            mc.correlations[r] = std::abs(c);
            mc.signs[r] = sign;
            mc.errors.row(static_cast<Eigen::Index>(r)) = (sign * standardized(est) - zt).transpose();
        });
        out.push_back(std::move(mc));
    }
    return out;
}

}  // namespace fabart::sim
