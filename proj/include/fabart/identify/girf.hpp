#pragma once

#include <algorithm>
#include <ostream>
#include <string>
#include <vector>

#include "fabart/core/parallel.hpp"
#include "fabart/identify/proxy.hpp"

namespace fabart::identify {

struct GirfOptions {
    int horizons = 40;
    int n_sim = 500;
    /// Impact on Z at k = 0 in Z's original units (0.1 = 10% for a log level).
    double shock_size = 0.1;
    int sign = 1;
    /// Report negative-shock responses multiplied by -1.
    bool mirror = false;
    unsigned threads = 1;
    std::vector<double> quantiles{0.16, 0.5, 0.84};
};

struct GirfResult {
    int horizons = 0;
    int shock_sign = 1;
    bool mirrored = false;
    /// Z (if observed), F1..FJ, then the panel variables.
    std::vector<std::string> names;
    /// Per used draw: (K+1) x V mean response, original units for Z and X.
    std::vector<Matrix> responses;
    /// Per used draw: Monte Carlo standard error of each mean response.
    std::vector<Matrix> std_errors;
    std::vector<double> quantiles;
    /// One (K+1) x V matrix per quantile, pooled across draws.
    std::vector<Matrix> bands;
    std::vector<std::size_t> used_draws;
    std::size_t excluded = 0;

    double exclusion_rate() const {
        const double total = static_cast<double>(used_draws.size() + excluded);
        return total > 0 ? static_cast<double>(excluded) / total : 0.0;
    }

    Matrix mean_response() const {
        Matrix m = Matrix::Zero(responses.front().rows(), responses.front().cols());
        for (const auto& r : responses) m += r;
        return m / static_cast<double>(responses.size());
    }
};

/// Type-7 sample quantile.
inline double quantile(std::vector<double> v, double p) {
    if (v.empty()) throw ConfigError("quantile of an empty sample");
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

namespace detail {

inline Matrix observe(const favar::ChainDraw& draw, const favar::FavarModel& model, const Matrix& y) {
    const Eigen::Index zoff = model.has_z() ? 1 : 0;
    const Eigen::Index j = model.n_factors;
    const Eigen::Index n = model.n_vars();
    Matrix out(y.rows(), zoff + j + n);
    if (model.has_z()) out.col(0) = y.col(0) * model.z_scale;
    out.middleCols(zoff, j) = y.rightCols(j);
    const Matrix x = favar::measurement_mean(draw, model, y);
    out.rightCols(n) = x.array().rowwise() * model.x_scaler.scale.transpose().array();
    return out;
}

}  // namespace detail

/// Generalized impulse responses from the long-run mean. `impacts[d]` is the
/// identified impact column of draw d in standardized [Z, F] units with a
/// unit first entry. Both branches reuse the same innovations, so the
/// difference isolates the shock.
inline GirfResult girf(const favar::ChainResult& result, const std::vector<Vector>& impacts, const GirfOptions& options,
                       const Rng& rng) {
    const auto& model = result.model;
    if (impacts.size() != result.draws.size()) throw StructuralError("one impact column per retained draw required");
    if (options.horizons < 0 || options.n_sim < 1) throw ConfigError("GIRF needs horizons >= 0 and n_sim >= 1");
    if (options.sign != 1 && options.sign != -1) throw ConfigError("shock sign must be +1 or -1");

    GirfResult out;
    out.horizons = options.horizons;
    out.shock_sign = options.sign;
    out.mirrored = options.mirror && options.sign < 0;
    out.quantiles = options.quantiles;
    if (model.has_z()) out.names.push_back(model.panel.z_name.empty() ? "Z" : model.panel.z_name);
    for (int j = 0; j < model.n_factors; ++j) out.names.push_back("F" + std::to_string(j + 1));
    for (Eigen::Index j = 0; j < model.n_vars(); ++j)
        out.names.push_back(model.panel.names.empty() ? "X" + std::to_string(j + 1)
                                                      : model.panel.names[static_cast<std::size_t>(j)]);

    std::vector<std::optional<Vector>> ybar(result.draws.size());
    for (std::size_t d = 0; d < result.draws.size(); ++d) ybar[d] = long_run_mean(result.draws[d].state.var);

    const double scale = options.sign * options.shock_size / (model.has_z() ? model.z_scale : 1.0);
    const int k1 = options.horizons + 1;
    const auto width = static_cast<Eigen::Index>(out.names.size());
    std::vector<Matrix> mean(result.draws.size()), se(result.draws.size());

    parallel_for(result.draws.size(), options.threads, [&](std::size_t d) {
        if (!ybar[d]) return;
        const auto& draw = result.draws[d];
        const auto& var = draw.state.var;
        const Eigen::Index m = var.n_vars;
        const int l = var.n_lags;
        const Matrix chol = psd_factor(draw.state.innov_cov);
        const Vector impact = impacts[d] * scale;
        Matrix sum = Matrix::Zero(k1, width), sum_sq = Matrix::Zero(k1, width);
        Rng draw_rng = rng.split(d);
        Matrix base(l + k1, m), shock(l + k1, m);
        for (int r = 0; r < options.n_sim; ++r) {
            Rng path_rng = draw_rng.split(static_cast<std::uint64_t>(r));
            base.topRows(l) = ybar[d]->transpose().replicate(l, 1);
            shock.topRows(l) = base.topRows(l);
            for (int k = 0; k < k1; ++k) {
                const Vector eta = chol * standard_normal_vector(m, path_rng);
                base.row(l + k) = (var.predict(base.topRows(l + k)) + eta).transpose();
                shock.row(l + k) = (var.predict(shock.topRows(l + k)) + eta).transpose();
                if (k == 0) shock.row(l) += impact.transpose();
            }
            const Matrix diff = detail::observe(draw, model, shock.bottomRows(k1)) -
                                detail::observe(draw, model, base.bottomRows(k1));
            sum += diff;
            sum_sq += diff.cwiseProduct(diff);
        }
        const double ns = options.n_sim;
        mean[d] = sum / ns;
        const Matrix var_hat = ((sum_sq / ns) - mean[d].cwiseProduct(mean[d])).cwiseMax(0.0);
        se[d] = (var_hat / std::max(1.0, ns - 1.0)).cwiseSqrt();
    });

    const double flip = out.mirrored ? -1.0 : 1.0;
    for (std::size_t d = 0; d < result.draws.size(); ++d) {
        if (!ybar[d]) {
            ++out.excluded;
            continue;
        }
        out.used_draws.push_back(d);
        out.responses.push_back(flip * mean[d]);
        out.std_errors.push_back(se[d]);
    }
    if (out.responses.empty()) throw NumericalError("no stable VAR draws available for the GIRF");

    for (double q : options.quantiles) {
        Matrix band(k1, width);
        std::vector<double> v(out.responses.size());
        for (int k = 0; k < k1; ++k)
            for (Eigen::Index c = 0; c < width; ++c) {
                for (std::size_t i = 0; i < v.size(); ++i) v[i] = out.responses[i](k, c);
                band(k, c) = quantile(v, q);
            }
        out.bands.push_back(std::move(band));
    }
    return out;
}

/// Mean over draws of GIRF(+) + GIRF(-); zero for a linear model.
inline Matrix asymmetry(const GirfResult& positive, const GirfResult& negative) {
    if (positive.responses.size() != negative.responses.size())
        throw StructuralError("asymmetry needs GIRFs over the same draws");
    const double s = negative.mirrored ? -1.0 : 1.0;
    return positive.mean_response() + s * negative.mean_response();
}

/// Tidy table: variable,horizon,quantile,value,shock_sign.
inline void write_girf_table(std::ostream& os, const GirfResult& g) {
    os << "variable,horizon,quantile,value,shock_sign\n";
    os.precision(17);
    for (std::size_t c = 0; c < g.names.size(); ++c)
        for (int k = 0; k <= g.horizons; ++k)
            for (std::size_t q = 0; q < g.quantiles.size(); ++q)
                os << g.names[c] << ',' << k << ',' << g.quantiles[q] << ','
                   << g.bands[q](k, static_cast<Eigen::Index>(c)) << ',' << g.shock_sign << '\n';
}

}  // namespace fabart::identify
