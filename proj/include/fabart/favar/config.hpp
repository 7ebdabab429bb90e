#pragma once

#include "fabart/bart/prior.hpp"
#include "fabart/core/error.hpp"

namespace fabart::favar {

/// How the measurement equation X_t = F(Y_t) + e_t is estimated.
enum class MeasurementModel {
    /// Sum-of-trees fit per equation (the nonparametric model).
    Bart,
    /// Gaussian linear regression on [Z, F] (the linear FAVAR benchmark).
    Linear,
};

struct FavarConfig {
    int n_factors = 7;
    int n_lags = 12;
    int n_draws = 30000;
    int n_burn = 15000;
    int thin = 5;
    int training_obs = 40;
    double iota = 0.1;
    /// Sum-of-coefficients tightness; <= 0 means 10 * iota.
    double lambda_soc = 0.0;
    /// Prior precision scale on the VAR constant (small = flat).
    double const_tightness = 1e-4;
    /// Prior variance of the pre-sample state when the VAR draw is explosive.
    double initial_state_var = 10.0;
    MeasurementModel measurement = MeasurementModel::Bart;
    bart::BartPrior bart_prior{};
    unsigned threads = 1;

    double lambda() const noexcept { return lambda_soc > 0.0 ? lambda_soc : 10.0 * iota; }

    int retained() const noexcept { return (n_draws - n_burn + thin - 1) / thin; }

    void validate() const {
        if (n_factors < 1) throw ConfigError("n_factors must be at least 1");
        if (n_lags < 1) throw ConfigError("n_lags must be at least 1");
        if (n_draws < 1) throw ConfigError("n_draws must be positive");
        if (n_burn < 0 || n_burn >= n_draws) throw ConfigError("n_burn must satisfy 0 <= n_burn < n_draws");
        if (thin < 1) throw ConfigError("thin must be at least 1");
        if (training_obs < 3) throw ConfigError("training_obs must be at least 3");
        if (!(iota > 0.0)) throw ConfigError("iota must be positive");
        if (!(const_tightness > 0.0)) throw ConfigError("const_tightness must be positive");
        bart_prior.validate();
    }
};

}  // namespace fabart::favar
