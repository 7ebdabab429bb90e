#pragma once

#include <array>
#include <cmath>
#include <string>

#include "fabart/core/error.hpp"
#include "fabart/core/linalg.hpp"
#include "fabart/core/random.hpp"
#include "fabart/favar/panel.hpp"

namespace fabart::sim {

enum class DgpKind { Linear, SquaredLoading, Tanh };

inline const char* kind_name(DgpKind k) {
    switch (k) {
        case DgpKind::Linear: return "linear";
        case DgpKind::SquaredLoading: return "quadratic";
        case DgpKind::Tanh: return "tanh";
    }
    return "?";
}

inline DgpKind parse_kind(const std::string& s) {
    if (s == "linear") return DgpKind::Linear;
    if (s == "quadratic" || s == "squared") return DgpKind::SquaredLoading;
    if (s == "tanh") return DgpKind::Tanh;
    throw ConfigError("unknown DGP kind '" + s + "' (expected linear, quadratic or tanh)");
}

struct DgpSpec {
    double intercept = 0.0;
    std::array<double, 3> ar_coefs{0.6, -0.3, 0.2};
    double innov_sd = 1.0;
    int n_obs = 300;
    int n_vars = 20;
    double loading_lo = -0.9;
    double loading_hi = 0.9;
    double idio_lo = 0.1;
    double idio_hi = 1.0;
    int burn_in = 100;
    DgpKind kind = DgpKind::Linear;

    Matrix companion() const {
        Matrix a = Matrix::Zero(3, 3);
        for (int i = 0; i < 3; ++i) a(0, i) = ar_coefs[static_cast<std::size_t>(i)];
        a(1, 0) = a(2, 1) = 1.0;
        return a;
    }

    void validate() const {
        if (n_obs < 10 || n_vars < 1) throw ConfigError("simulation needs n_obs >= 10 and n_vars >= 1");
        if (innov_sd < 0.0) throw ConfigError("innovation sd must be non-negative");
        if (loading_lo > loading_hi || idio_lo > idio_hi || idio_lo < 0.0)
            throw ConfigError("invalid loading or idiosyncratic variance range");
        if (burn_in < 0) throw ConfigError("burn_in must be non-negative");
    }
};

/// AR(3) factor path after a discarded warm-up from zero initial conditions.
inline Vector simulate_factor(const DgpSpec& spec, Rng& rng) {
    spec.validate();
    if (spectral_radius(spec.companion()) >= 1.0) throw ConfigError("factor AR coefficients are not stationary");
    const int total = spec.n_obs + spec.burn_in;
    Vector f = Vector::Zero(total + 3);
    const auto& b = spec.ar_coefs;
    for (int t = 3; t < total + 3; ++t)
        f(t) = spec.intercept + b[0] * f(t - 1) + b[1] * f(t - 2) + b[2] * f(t - 3) + spec.innov_sd * rng.normal();
    return f.tail(spec.n_obs);
}

struct SimulatedPanel {
    Matrix x;
    Vector loadings;
    Vector idio_var;
    Matrix noise;
};

inline Matrix measurement_map(const Vector& f, const Vector& loadings, DgpKind kind) {
    Matrix bf = f * loadings.transpose();
    switch (kind) {
        case DgpKind::Linear: return bf;
        case DgpKind::SquaredLoading: return f * loadings.cwiseProduct(loadings).transpose();
        case DgpKind::Tanh: return bf.array().tanh().matrix();
    }
    return bf;
}

/// Draws B, R and V in a fixed order, so one seed gives the same B, R, V for
/// every kind; only the measurement map differs.
inline SimulatedPanel simulate_panel(const Vector& f, const DgpSpec& spec, Rng& rng) {
    spec.validate();
    if (!f.allFinite()) throw DataError("factor path contains non-finite values");
    const Eigen::Index n = spec.n_vars;
    SimulatedPanel p;
    p.loadings.resize(n);
    p.idio_var.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) p.loadings(j) = rng.uniform(spec.loading_lo, spec.loading_hi);
    for (Eigen::Index j = 0; j < n; ++j) p.idio_var(j) = rng.uniform(spec.idio_lo, spec.idio_hi);
    p.noise.resize(f.size(), n);
    for (Eigen::Index t = 0; t < f.size(); ++t)
        for (Eigen::Index j = 0; j < n; ++j) p.noise(t, j) = std::sqrt(p.idio_var(j)) * rng.normal();
    p.x = measurement_map(f, p.loadings, spec.kind) + p.noise;
    return p;
}

inline favar::PanelData to_panel_data(const SimulatedPanel& sim) {
    favar::PanelData p;
    p.x = sim.x;
    for (Eigen::Index j = 0; j < sim.x.cols(); ++j) p.names.push_back("X" + std::to_string(j + 1));
    for (Eigen::Index t = 0; t < sim.x.rows(); ++t) p.dates.push_back(std::to_string(t + 1));
    p.transform_codes.assign(static_cast<std::size_t>(sim.x.cols()), 1);
    return p;
}

/// Lag-k autocorrelation of a stationary AR(3) by Yule-Walker.
inline Vector ar3_autocorrelations(const std::array<double, 3>& b, int max_lag) {
    // rho1 = b1 + b2 rho1 + b3 rho2, rho2 = b1 rho1 + b2 + b3 rho1
    Matrix a(2, 2);
    a << 1.0 - b[1], -b[2], -(b[0] + b[2]), 1.0;
    Vector rhs(2);
    rhs << b[0], b[1];
    const Vector r12 = a.lu().solve(rhs);
    Vector rho(max_lag + 1);
    rho(0) = 1.0;
    if (max_lag >= 1) rho(1) = r12(0);
    if (max_lag >= 2) rho(2) = r12(1);
    for (int k = 3; k <= max_lag; ++k) rho(k) = b[0] * rho(k - 1) + b[1] * rho(k - 2) + b[2] * rho(k - 3);
    return rho;
}

}  // namespace fabart::sim
