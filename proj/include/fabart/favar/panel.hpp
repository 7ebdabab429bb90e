#pragma once

#include <string>
#include <vector>

#include "fabart/core/error.hpp"
#include "fabart/core/linalg.hpp"

namespace fabart::favar {

/// Observable panel X (T x N) and the optional observed factor Z (T).
/// Values are in transformed but unstandardized units.
struct PanelData {
    std::vector<std::string> dates;
    std::vector<std::string> names;
    std::vector<int> transform_codes;
    Matrix x;
    Vector z;
    std::string z_name;

    Eigen::Index periods() const noexcept { return x.rows(); }
    Eigen::Index n_vars() const noexcept { return x.cols(); }
    bool has_z() const noexcept { return z.size() > 0; }

    void validate() const {
        if (x.rows() == 0 || x.cols() == 0) throw DataError("empty panel");
        if (has_z() && z.size() != x.rows()) throw DataError("observed factor length differs from panel length");
        if (!names.empty() && static_cast<Eigen::Index>(names.size()) != x.cols())
            throw DataError("panel has " + std::to_string(x.cols()) + " columns but " +
                            std::to_string(names.size()) + " names");
        if (!dates.empty() && static_cast<Eigen::Index>(dates.size()) != x.rows())
            throw DataError("panel has " + std::to_string(x.rows()) + " rows but " +
                            std::to_string(dates.size()) + " dates");
        if (!x.allFinite() || (has_z() && !z.allFinite())) throw DataError("panel contains missing or non-finite values");
    }
};

/// Column means and standard deviations, with the inverse map.
struct Standardizer {
    Vector mean;
    Vector scale;

    static Standardizer fit(const Matrix& m) {
        Standardizer s;
        s.mean = m.colwise().mean().transpose();
        s.scale.resize(m.cols());
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double v = sample_variance(m.col(j));
            if (!(v > 0.0)) throw DataError("column " + std::to_string(j) + " has zero variance");
            s.scale(j) = std::sqrt(v);
        }
        return s;
    }

    Matrix apply(const Matrix& m) const {
        return (m.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
    }

    Matrix invert(const Matrix& m) const {
        return (m.array().rowwise() * scale.transpose().array()).matrix().rowwise() + mean.transpose();
    }
};

/// First `k` principal-component scores of a (standardized) panel, each
/// scaled to unit variance. Signs are fixed so each score correlates
/// positively with the panel column it loads on most heavily.
inline Matrix principal_components(const Matrix& x, Eigen::Index k) {
    if (k > x.cols()) throw ConfigError("more factors requested than panel columns");
    const Matrix centered = x.rowwise() - x.colwise().mean();
    Eigen::SelfAdjointEigenSolver<Matrix> es(centered.transpose() * centered);
    Matrix scores(x.rows(), k);
    for (Eigen::Index j = 0; j < k; ++j) {
        Vector v = es.eigenvectors().col(x.cols() - 1 - j);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        Vector s = centered * v;
        s.array() -= s.mean();
        const double sd = std::sqrt(sample_variance(s));
        scores.col(j) = sd > 0 ? Vector(s / sd) : s;
    }
    return scores;
}

}  // namespace fabart::favar
