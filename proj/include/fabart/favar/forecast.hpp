#pragma once

#include <string>
#include <vector>

#include "fabart/favar/gibbs.hpp"

namespace fabart::favar {

/// Predictive ensemble: one simulated path per retained draw.
struct ForecastEnsemble {
    int horizon = 0;
    /// Column names of `paths`: Z (when observed) followed by the X names.
    std::vector<std::string> names;
    /// Per draw, horizon x (has_z + N) in original units.
    std::vector<Matrix> paths;
    /// Per draw, horizon x J latent factors (standardized units).
    std::vector<Matrix> factor_paths;

    /// All draws of one column at one horizon step (1-based).
    Vector column_draws(std::size_t column, int h) const {
        Vector v(static_cast<Eigen::Index>(paths.size()));
        for (std::size_t d = 0; d < paths.size(); ++d)
            v(static_cast<Eigen::Index>(d)) = paths[d](h - 1, static_cast<Eigen::Index>(column));
        return v;
    }
};

struct ForecastOptions {
    /// Scale on innovation and measurement noise (0 gives the conditional-mean path).
    double noise_scale = 1.0;
    int paths_per_draw = 1;
};

/// Iterates each retained draw's VAR forward from the last L observations of
/// [Z, F], then maps the simulated Y through that draw's measurement equation.
inline ForecastEnsemble forecast(const ChainResult& result, int horizon, Rng& rng, const ForecastOptions& options = {}) {
    if (horizon < 1) throw ConfigError("forecast horizon must be at least 1");
    if (result.draws.empty()) throw ConfigError("no retained draws to forecast from");
    const FavarModel& model = result.model;
    const int lags = result.config.n_lags;
    const Eigen::Index n = model.n_vars();
    const Eigen::Index zoff = model.has_z() ? 1 : 0;

    ForecastEnsemble out;
    out.horizon = horizon;
    if (model.has_z()) out.names.push_back(model.panel.z_name.empty() ? "Z" : model.panel.z_name);
    for (Eigen::Index j = 0; j < n; ++j)
        out.names.push_back(model.panel.names.empty() ? "X" + std::to_string(j + 1)
                                                      : model.panel.names[static_cast<std::size_t>(j)]);

    for (std::size_t d = 0; d < result.draws.size(); ++d) {
        const ChainDraw& draw = result.draws[d];
        const Matrix y_hist = model.augment(draw.factors);
        const Eigen::Index m = y_hist.cols();
        const Matrix chol = psd_factor(draw.state.innov_cov);
        for (int p = 0; p < options.paths_per_draw; ++p) {
            Rng path_rng = rng.split(d * static_cast<std::size_t>(options.paths_per_draw) + static_cast<std::size_t>(p));
            Matrix hist(lags + horizon, m);
            hist.topRows(lags) = y_hist.bottomRows(lags);
            for (int h = 0; h < horizon; ++h) {
                Vector next = draw.state.var.predict(hist.topRows(lags + h));
                next += options.noise_scale * chol * standard_normal_vector(m, path_rng);
                hist.row(lags + h) = next.transpose();
            }
            const Matrix y_fc = hist.bottomRows(horizon);
            Matrix x_std = measurement_mean(draw, model, y_fc);
            for (Eigen::Index j = 0; j < n; ++j)
                for (int h = 0; h < horizon; ++h)
                    x_std(h, j) += options.noise_scale * std::sqrt(draw.state.meas_var(j)) * path_rng.normal();
            Matrix path(horizon, zoff + n);
            if (model.has_z()) path.col(0) = (y_fc.col(0).array() * model.z_scale + model.z_mean).matrix();
            path.rightCols(n) = model.x_scaler.invert(x_std);
            out.paths.push_back(std::move(path));
            out.factor_paths.push_back(y_fc.rightCols(model.n_factors));
        }
    }
    return out;
}

}  // namespace fabart::favar
