#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fabart/core/error.hpp"
#include "fabart/core/linalg.hpp"
#include "fabart/favar/gibbs.hpp"

namespace fabart::identify {

/// External instrument on the model's date grid; NaN marks periods outside
/// the availability window.
struct Instrument {
    Vector m;
    std::string name = "instrument";

    Eigen::Index available() const {
        Eigen::Index n = 0;
        for (Eigen::Index t = 0; t < m.size(); ++t) n += std::isfinite(m(t)) ? 1 : 0;
        return n;
    }
};

struct ProxyOptions {
    Eigen::Index min_overlap = 24;
    /// First-stage F below this raises WeakInstrumentError.
    double weak_f = 10.0;
};

struct StructuralDraw {
    /// First column of A, scaled so its first entry is 1.
    Vector impact_column;
    /// R^2 of the instrument on the residuals.
    double rho_sq = 0.0;
    double first_stage_f = 0.0;
    Eigen::Index n_obs = 0;
};

inline double reliability(double beta, double sigma) {
    const double d = beta * beta + sigma * sigma;
    if (!(d > 0.0)) throw ConfigError("reliability undefined when beta and sigma are both zero");
    return beta * beta / d;
}

/// Projects reduced-form residuals (T x M) on the instrument over the rows
/// where both are available.
inline StructuralDraw instrument_impact(const Matrix& residuals, const Instrument& instrument,
                                        const ProxyOptions& options = {}) {
    if (residuals.rows() != instrument.m.size())
        throw StructuralError("instrument length " + std::to_string(instrument.m.size()) + " differs from residual length " +
                              std::to_string(residuals.rows()));
    std::vector<Eigen::Index> rows;
    for (Eigen::Index t = 0; t < residuals.rows(); ++t)
        if (std::isfinite(instrument.m(t)) && residuals.row(t).allFinite()) rows.push_back(t);
    const auto n = static_cast<Eigen::Index>(rows.size());
    if (n < options.min_overlap)
        throw DataError("instrument overlaps the residual sample in " + std::to_string(n) + " periods; need at least " +
                        std::to_string(options.min_overlap));
    const Eigen::Index k = residuals.cols();
    Matrix u(n, k);
    Vector m(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        u.row(i) = residuals.row(rows[static_cast<std::size_t>(i)]);
        m(i) = instrument.m(rows[static_cast<std::size_t>(i)]);
    }
    u.rowwise() -= u.colwise().mean();
    m.array() -= m.mean();
    const double mm = m.squaredNorm();
    if (!(mm > 0.0)) throw WeakInstrumentError("instrument has zero variance over the overlap", 0.0);

    const Vector slope = u.transpose() * m / mm;
    // first stage: u_1 on m
    const Vector e = u.col(0) - slope(0) * m;
    const double s2 = e.squaredNorm() / std::max<double>(1.0, static_cast<double>(n - 2));
    const double f_stat = s2 > 0.0 ? slope(0) * slope(0) * mm / s2 : std::numeric_limits<double>::infinity();
    if (!(f_stat >= options.weak_f) || slope(0) == 0.0)
        throw WeakInstrumentError("weak instrument: first-stage F = " + std::to_string(f_stat), f_stat);

    StructuralDraw out;
    out.impact_column = slope / slope(0);
    out.first_stage_f = f_stat;
    out.n_obs = n;
    const Vector b = least_squares(u, m);
    out.rho_sq = std::clamp(1.0 - (m - u * b).squaredNorm() / mm, 0.0, 1.0);
    return out;
}

/// Stationary mean (I - sum phi_l)^{-1} C; nullopt for explosive draws.
inline std::optional<Vector> long_run_mean(const favar::VarCoefficients& var) {
    if (spectral_radius(var.companion()) >= 1.0) return std::nullopt;
    Matrix a = Matrix::Identity(var.n_vars, var.n_vars);
    for (int l = 1; l <= var.n_lags; ++l) a -= var.lag(l);
    return Vector(a.lu().solve(var.intercept()));
}

/// Reduced-form VAR residuals of [Z, F] for one draw; the first L rows are NaN.
inline Matrix var_residuals(const favar::ChainDraw& draw, const favar::FavarModel& model) {
    const Matrix y = model.augment(draw.factors);
    const int l = draw.state.var.n_lags;
    Matrix u = Matrix::Constant(y.rows(), y.cols(), std::numeric_limits<double>::quiet_NaN());
    for (Eigen::Index t = l; t < y.rows(); ++t)
        u.row(t) = y.row(t) - draw.state.var.predict(y.topRows(t)).transpose();
    return u;
}

/// Per retained draw: residuals of that draw's VAR projected on the instrument.
inline std::vector<StructuralDraw> structural_draws(const favar::ChainResult& result, const Instrument& instrument,
                                                    const ProxyOptions& options = {}) {
    std::vector<StructuralDraw> out;
    out.reserve(result.draws.size());
    for (const auto& d : result.draws) out.push_back(instrument_impact(var_residuals(d, result.model), instrument, options));
    return out;
}

}  // namespace fabart::identify
