#pragma once

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>

#include "fabart/bart/tree.hpp"
#include "fabart/core/error.hpp"

namespace fabart::bart {

/// How the terminal-node prior standard deviation is set.
enum class LeafScale {
    /// 0.5 / (kappa * sqrt(S)) on a target rescaled to [-0.5, 0.5].
    Standard,
    /// (max - min) / (2 * sqrt(nu * S)), the tabulated alternative.
    RangeOverNu,
};

struct BartPrior {
    double alpha = 0.95;
    double beta = 2.0;
    double kappa = 2.0;
    int n_trees = 250;
    /// Degrees of freedom of the error-variance prior; <= 0 means T/2.
    double nu = 0.0;
    double quantile = 0.75;
    /// Scale of the error-variance prior; set by calibrate_sigma_prior.
    double xi = 1.0;
    LeafScale leaf_scale = LeafScale::Standard;

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("bart alpha must lie in (0,1)");
        if (!(beta > 0.0)) throw ConfigError("bart beta must be positive");
        if (!(kappa > 0.0)) throw ConfigError("bart kappa must be positive");
        if (n_trees < 1) throw ConfigError("bart needs at least one tree");
        if (!(quantile > 0.0 && quantile < 1.0)) throw ConfigError("bart sigma quantile must lie in (0,1)");
    }

    double nu_for(std::size_t n_obs) const {
        return nu > 0.0 ? nu : 0.5 * static_cast<double>(n_obs);
    }

    /// Terminal-node prior sd for a target already rescaled to [-0.5, 0.5].
    double leaf_sd(std::size_t n_obs = 0) const {
        if (leaf_scale == LeafScale::RangeOverNu)
            return 1.0 / (2.0 * std::sqrt(nu_for(n_obs) * n_trees));
        return 0.5 / (kappa * std::sqrt(static_cast<double>(n_trees)));
    }
};

/// Prior probability that a node at `depth` is internal: alpha (1 + d)^-beta.
inline double node_split_probability(int depth, const BartPrior& prior) {
    return prior.alpha * std::pow(1.0 + depth, -prior.beta);
}

/// Observed range of each regressor column; threshold proposals are uniform
/// over it.
struct SplitSpace {
    Vector lower;
    Vector upper;

    static SplitSpace from_rows(const Matrix& rows) {
        if (rows.rows() == 0) throw DataError("no rows to define split ranges");
        return {rows.colwise().minCoeff().transpose(), rows.colwise().maxCoeff().transpose()};
    }

    std::size_t columns() const noexcept { return static_cast<std::size_t>(lower.size()); }
    double width(std::size_t v) const { return upper(static_cast<Eigen::Index>(v)) - lower(static_cast<Eigen::Index>(v)); }

    /// Log density of drawing this rule: uniform column, uniform threshold.
    double log_rule_density(const SplitRule& rule) const {
        const double w = width(rule.variable);
        return -std::log(static_cast<double>(columns())) - (w > 0.0 ? std::log(w) : 0.0);
    }
};

/// Log prior of a tree structure: split/stop probabilities times the
/// rule-selection densities of every internal node.
inline double log_tree_prior(const RegressionTree& tree, const BartPrior& prior, const SplitSpace& space) {
    double lp = 0.0;
    for (const auto& n : tree.nodes()) {
        const double p = node_split_probability(n.depth, prior);
        if (n.is_leaf()) {
            lp += std::log1p(-p);
        } else {
            lp += std::log(p) + space.log_rule_density(n.rule);
        }
    }
    return lp;
}

/// Scale xi such that P(sigma < sigma_hat) = quantile under
/// sigma^2 ~ nu * xi / chi2_nu.
inline double calibrate_sigma_prior(double sigma_hat, double nu, double quantile) {
    if (!(sigma_hat > 0.0)) throw NumericalError("preliminary sigma estimate must be positive");
    boost::math::chi_squared chi(nu);
    const double q = boost::math::quantile(chi, 1.0 - quantile);
    return sigma_hat * sigma_hat * q / nu;
}

}  // namespace fabart::bart
