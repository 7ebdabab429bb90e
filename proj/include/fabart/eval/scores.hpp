#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "fabart/core/error.hpp"
#include "fabart/core/linalg.hpp"

namespace fabart::eval {

inline constexpr double kLogScoreFloor = -27.631021115928547;  // log(1e-12)

inline double rmse(const Vector& forecasts, const Vector& actuals) {
    if (forecasts.size() != actuals.size())
        throw DataError("rmse: " + std::to_string(forecasts.size()) + " forecasts for " +
                        std::to_string(actuals.size()) + " actuals");
    if (forecasts.size() == 0) throw DataError("rmse of an empty sample");
    return std::sqrt((forecasts - actuals).squaredNorm() / static_cast<double>(forecasts.size()));
}

/// Predictive draws for one target at one origin and horizon.
struct PredictiveEnsemble {
    Vector draws;
    std::string target_name;
    std::string origin_date;
    int horizon = 1;
};

enum class Bandwidth { Silverman, Scott };

struct LogScoreOptions {
    Bandwidth bandwidth = Bandwidth::Silverman;
    double floor = kLogScoreFloor;
};

struct LogScore {
    double value = 0.0;
    bool floored = false;
};

inline double kde_bandwidth(const Vector& x, Bandwidth rule) {
    const double sd = std::sqrt(sample_variance(x));
    const double n = static_cast<double>(x.size());
    if (rule == Bandwidth::Scott) return 1.06 * sd * std::pow(n, -0.2);
    std::vector<double> v(x.data(), x.data() + x.size());
    std::sort(v.begin(), v.end());
    auto q = [&](double p) {
        const double h = (n - 1.0) * p;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    const double iqr = q(0.75) - q(0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(n, -0.2);
}

/// Gaussian-kernel log predictive density at `realized`.
inline LogScore log_score(const PredictiveEnsemble& ensemble, double realized, const LogScoreOptions& options = {}) {
    const Vector& x = ensemble.draws;
    if (x.size() < 2) throw DataError("log score needs at least two predictive draws");
    if (!(sample_variance(x) > 0.0)) throw NumericalError("predictive ensemble has zero variance");
    const double h = kde_bandwidth(x, options.bandwidth);
    // log-sum-exp over kernels
    const Eigen::ArrayXd z = (realized - x.array()) / h;
    const Eigen::ArrayXd e = -0.5 * z.square();
    const double mx = e.maxCoeff();
    const double lse = mx + std::log((e - mx).exp().sum());
    const double log_density = lse - std::log(static_cast<double>(x.size()) * h) - 0.5 * std::log(2.0 * std::numbers::pi);
    LogScore s;
    if (!(log_density >= options.floor)) {
        s.value = options.floor;
        s.floored = true;
    } else {
        s.value = log_density;
    }
    return s;
}

inline Vector cumulative_abs_log_scores(const Vector& scores) {
    Vector out(scores.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        acc += std::abs(scores(i));
        out(i) = acc;
    }
    return out;
}

/// Forecast for period t + h is the value at t; returns forecasts aligned
/// with series[h..].
inline Vector rw_benchmark(const Vector& series, int horizon) {
    if (horizon < 1) throw ConfigError("random-walk horizon must be at least 1");
    if (series.size() <= horizon)
        throw DataError("random walk needs more than " + std::to_string(horizon) + " observations");
    return series.head(series.size() - horizon);
}

/// Average or sum of per-period log scores.
inline double aggregate_log_scores(const Vector& scores, bool average = true) {
    if (scores.size() == 0) throw DataError("no log scores to aggregate");
    return average ? scores.mean() : scores.sum();
}

}  // namespace fabart::eval
