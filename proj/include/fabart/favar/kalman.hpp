#pragma once

#include <string>
#include <vector>

#include "fabart/core/error.hpp"
#include "fabart/core/linalg.hpp"
#include "fabart/core/random.hpp"

namespace fabart::favar {

/// s_t = A s_{t-1} + c + G eta_t, eta_t ~ N(0, Q), where G selects the first
/// Q.rows() state elements; y_t = H s_t[0:k] + e_t with diagonal, possibly
/// zero, measurement variances. `initial_mean`/`initial_cov` are the
/// predictive moments of s_0.
struct LinearGaussianModel {
    Matrix transition;
    Vector intercept;
    Matrix state_noise;
    Matrix obs_loadings;
    Vector obs_var;
    Vector initial_mean;
    Matrix initial_cov;

    Eigen::Index state_dim() const noexcept { return transition.rows(); }

    Matrix full_state_noise() const {
        Matrix q = Matrix::Zero(state_dim(), state_dim());
        q.topLeftCorner(state_noise.rows(), state_noise.cols()) = state_noise;
        return q;
    }
};

struct FilterResult {
    std::vector<Vector> filtered_mean;
    std::vector<Matrix> filtered_cov;
    std::vector<Vector> predicted_mean;
    std::vector<Matrix> predicted_cov;
};

/// Kalman filter with observations processed one series at a time.
inline FilterResult kalman_filter(const LinearGaussianModel& model, const Matrix& obs) {
    const Eigen::Index T = obs.rows();
    const Eigen::Index k = model.obs_loadings.cols();
    if (obs.cols() != model.obs_loadings.rows()) throw StructuralError("observation width differs from loadings");
    const Matrix q = model.full_state_noise();
    FilterResult out;
    out.filtered_mean.resize(T);
    out.filtered_cov.resize(T);
    out.predicted_mean.resize(T);
    out.predicted_cov.resize(T);
    Vector a = model.initial_mean;
    Matrix p = model.initial_cov;
    for (Eigen::Index t = 0; t < T; ++t) {
        if (t > 0) {
            a = model.transition * a + model.intercept;
            p = symmetrize(model.transition * p * model.transition.transpose() + q);
        }
        out.predicted_mean[t] = a;
        out.predicted_cov[t] = p;
        for (Eigen::Index j = 0; j < obs.cols(); ++j) {
            const Vector h = model.obs_loadings.row(j).transpose();
            const Vector ph = p.leftCols(k) * h;
            const double f = h.dot(ph.head(k)) + model.obs_var(j);
            if (model.obs_var(j) == 0.0 && f < 1e-12) continue;  // already pinned down
            if (!(f > 0.0))
                throw NumericalError("Kalman filter innovation variance non-positive at period " + std::to_string(t) +
                                     ", series " + std::to_string(j));
            const double v = obs(t, j) - h.dot(a.head(k));
            a += ph * (v / f);
            p -= ph * ph.transpose() / f;
        }
        p = symmetrize(p);
        out.filtered_mean[t] = a;
        out.filtered_cov[t] = p;
    }
    return out;
}

/// Carter-Kohn backward simulation: one joint draw of s_0..s_{T-1} from the
/// smoothing distribution, returned as a T x n matrix.
inline Matrix simulation_smoother(const LinearGaussianModel& model, const FilterResult& filt, Rng& rng) {
    const auto T = static_cast<Eigen::Index>(filt.filtered_mean.size());
    const Eigen::Index n = model.state_dim();
    Matrix draws(T, n);
    draws.row(T - 1) = sample_mvn(filt.filtered_mean[T - 1], filt.filtered_cov[T - 1], rng).transpose();
    for (Eigen::Index t = T - 2; t >= 0; --t) {
        const Matrix& p = filt.filtered_cov[t];
        const Matrix pa = p * model.transition.transpose();
        const Matrix gain = pa * psd_pinv(filt.predicted_cov[t + 1]);
        const Vector next = draws.row(t + 1).transpose();
        const Vector mean = filt.filtered_mean[t] + gain * (next - filt.predicted_mean[t + 1]);
        const Matrix cov = symmetrize(p - gain * pa.transpose());
        draws.row(t) = sample_mvn(mean, cov, rng).transpose();
    }
    return draws;
}

/// Unconditional covariance of a stable s_t = A s_{t-1} + w, w ~ N(0, Q),
/// by the doubling recursion.
inline Matrix stationary_covariance(const Matrix& a, const Matrix& q) {
    Matrix p = q;
    Matrix ak = a;
    for (int it = 0; it < 64; ++it) {
        const Matrix next = p + ak * p * ak.transpose();
        ak = ak * ak;
        const double change = (next - p).cwiseAbs().maxCoeff();
        p = next;
        if (change <= 1e-13 * std::max(1.0, p.cwiseAbs().maxCoeff())) break;
    }
    return symmetrize(p);
}

}  // namespace fabart::favar
