#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string_view>
#include <vector>

#include "fabart/bart/forest.hpp"
#include "fabart/bart/prior.hpp"
#include "fabart/bart/tree.hpp"
#include "fabart/core/random.hpp"

namespace fabart::bart {

enum class Move { Grow = 0, Prune = 1, Change = 2, Swap = 3 };

inline constexpr std::array<double, 4> kMoveProbabilities{0.25, 0.25, 0.40, 0.10};

inline std::string_view move_name(Move m) {
    switch (m) {
        case Move::Grow: return "grow";
        case Move::Prune: return "prune";
        case Move::Change: return "change";
        case Move::Swap: return "swap";
    }
    return "?";
}

/// A proposed tree. `candidate` is empty when the drawn move cannot be
/// applied to the current topology; the caller treats that as a rejection.
struct Proposal {
    Move move = Move::Grow;
    std::optional<RegressionTree> candidate;
    /// log q(candidate -> current) - log q(current -> candidate)
    double log_proposal_ratio = 0.0;

    bool feasible() const noexcept { return candidate.has_value(); }
};

namespace detail {

inline Move draw_move(Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < kMoveProbabilities.size(); ++i) {
        acc += kMoveProbabilities[i];
        if (u < acc) return static_cast<Move>(i);
    }
    return Move::Swap;
}

inline SplitRule draw_rule(const SplitSpace& space, Rng& rng) {
    const std::size_t v = rng.index(space.columns());
    const auto vi = static_cast<Eigen::Index>(v);
    const double lo = space.lower(vi);
    const double hi = space.upper(vi);
    return {v, hi > lo ? rng.uniform(lo, hi) : lo};
}

}  // namespace detail

inline Proposal propose_move(const RegressionTree& tree, const SplitSpace& space, Rng& rng) {
    Proposal p;
    p.move = detail::draw_move(rng);
    switch (p.move) {
        case Move::Grow: {
            const auto leaves = tree.leaves();
            const int leaf = leaves[rng.index(leaves.size())];
            const SplitRule rule = detail::draw_rule(space, rng);
            RegressionTree cand = tree;
            cand.grow(leaf, rule);
            p.log_proposal_ratio = std::log(static_cast<double>(leaves.size())) -
                                   space.log_rule_density(rule) -
                                   std::log(static_cast<double>(cand.prunable().size()));
            p.candidate = std::move(cand);
            break;
        }
        case Move::Prune: {
            const auto nogs = tree.prunable();
            if (nogs.empty()) break;
            const int node = nogs[rng.index(nogs.size())];
            const SplitRule removed = tree.node(node).rule;
            RegressionTree cand = tree;
            cand.prune(node);
            p.log_proposal_ratio = std::log(static_cast<double>(nogs.size())) +
                                   space.log_rule_density(removed) -
                                   std::log(static_cast<double>(cand.leaf_count()));
            p.candidate = std::move(cand);
            break;
        }
        case Move::Change: {
            const auto internals = tree.internals();
            if (internals.empty()) break;
            const int node = internals[rng.index(internals.size())];
            RegressionTree cand = tree;
            cand.set_rule(node, detail::draw_rule(space, rng));
            p.candidate = std::move(cand);
            break;
        }
        case Move::Swap: {
            const auto children = tree.swappable_children();
            if (children.empty()) break;
            const int child = children[rng.index(children.size())];
            const int parent = tree.node(child).parent;
            const auto& pn = tree.node(parent);
            const int sibling = pn.left == child ? pn.right : pn.left;
            const SplitRule child_rule = tree.node(child).rule;
            RegressionTree cand = tree;
            cand.set_rule(parent, child_rule);
            cand.set_rule(child, pn.rule);
            const auto& sn = tree.node(sibling);
            if (!sn.is_leaf() && sn.rule == child_rule) cand.set_rule(sibling, pn.rule);
            p.candidate = std::move(cand);
            break;
        }
    }
    return p;
}

/// Per-leaf sufficient statistics of residuals routed through a tree.
struct LeafStats {
    std::vector<double> count;
    std::vector<double> sum;
    std::vector<double> sum_sq;

    void accumulate(const RegressionTree& tree, const std::vector<int>& leaf_of_row, const Vector& residuals) {
        count.assign(tree.size(), 0.0);
        sum.assign(tree.size(), 0.0);
        sum_sq.assign(tree.size(), 0.0);
        for (std::size_t r = 0; r < leaf_of_row.size(); ++r) {
            const double e = residuals(static_cast<Eigen::Index>(r));
            const auto l = static_cast<std::size_t>(leaf_of_row[r]);
            count[l] += 1.0;
            sum[l] += e;
            sum_sq[l] += e * e;
        }
    }
};

/// Log of the residual density with every terminal value integrated out
/// against its N(0, leaf_sd^2) prior. A leaf that receives no rows makes the
/// tree inadmissible (-inf).
inline double log_marginal_likelihood(const RegressionTree& tree, const LeafStats& stats, double sigma,
                                      double leaf_sd) {
    const double s2 = sigma * sigma;
    const double t2 = leaf_sd * leaf_sd;
    const double log_2pi = std::log(2.0 * std::numbers::pi);
    double ll = 0.0;
    for (std::size_t i = 0; i < tree.size(); ++i) {
        if (!tree.nodes()[i].is_leaf()) continue;
        const double n = stats.count[i];
        if (n == 0.0) return -std::numeric_limits<double>::infinity();
        const double denom = s2 + n * t2;
        ll += -0.5 * n * log_2pi - (n - 1.0) * std::log(sigma) - 0.5 * std::log(denom) -
              0.5 * (stats.sum_sq[i] / s2 - t2 * stats.sum[i] * stats.sum[i] / (s2 * denom));
    }
    return ll;
}

inline double log_marginal_likelihood(const Vector& residuals, const RegressionTree& tree, const Matrix& rows,
                                      double sigma, const BartPrior& prior) {
    if (!(sigma > 0.0)) throw NumericalError("sigma must be positive");
    if (residuals.size() != rows.rows()) throw StructuralError("residual length differs from row count");
    tree.check_columns(static_cast<std::size_t>(rows.cols()));
    std::vector<int> leaf;
    tree.route(rows, leaf);
    LeafStats stats;
    stats.accumulate(tree, leaf, residuals);
    return log_marginal_likelihood(tree, stats, sigma, prior.leaf_sd(static_cast<std::size_t>(rows.rows())));
}

struct MhOptions {
    /// Drop the residual term and target the tree prior alone.
    bool use_likelihood = true;
};

struct MhResult {
    RegressionTree tree;
    bool accepted = false;
    /// Leaf of every row under the returned tree (filled when likelihood is used).
    std::vector<int> leaf_of_row;
};

/// Metropolis-Hastings step on a tree structure.
inline MhResult mh_accept(const RegressionTree& current, const Proposal& proposal, const Vector& residuals,
                          const Matrix& rows, const SplitSpace& space, double sigma, const BartPrior& prior,
                          Rng& rng, const MhOptions& options = {}) {
    std::vector<int> cur_leaf;
    if (options.use_likelihood) current.route(rows, cur_leaf);
    if (!proposal.feasible()) return {current, false, std::move(cur_leaf)};
    const RegressionTree& cand = *proposal.candidate;

    double log_a = proposal.log_proposal_ratio + log_tree_prior(cand, prior, space) -
                   log_tree_prior(current, prior, space);
    std::vector<int> cand_leaf;
    if (options.use_likelihood) {
        const double leaf_sd = prior.leaf_sd(static_cast<std::size_t>(rows.rows()));
        cand.route(rows, cand_leaf);
        LeafStats cs;
        cs.accumulate(cand, cand_leaf, residuals);
        const double ll_cand = log_marginal_likelihood(cand, cs, sigma, leaf_sd);
        if (ll_cand == -std::numeric_limits<double>::infinity()) return {current, false, std::move(cur_leaf)};
        LeafStats ks;
        ks.accumulate(current, cur_leaf, residuals);
        log_a += ll_cand - log_marginal_likelihood(current, ks, sigma, leaf_sd);
    }
    if (log_a >= 0.0 || std::log(rng.uniform()) < log_a) return {cand, true, std::move(cand_leaf)};
    return {current, false, std::move(cur_leaf)};
}

/// Conjugate Normal draw of every terminal value given routed residuals.
inline void sample_leaf_values(RegressionTree& tree, const LeafStats& stats, double sigma, double leaf_sd,
                               Rng& rng) {
    const double prec_prior = 1.0 / (leaf_sd * leaf_sd);
    const double s2 = sigma * sigma;
    for (int leaf : tree.leaves()) {
        const auto l = static_cast<std::size_t>(leaf);
        const double post_var = 1.0 / (stats.count[l] / s2 + prec_prior);
        const double post_mean = post_var * stats.sum[l] / s2;
        tree.set_value(leaf, rng.normal(post_mean, std::sqrt(post_var)));
    }
}

inline RegressionTree sample_leaf_values(const RegressionTree& tree, const Vector& residuals, const Matrix& rows,
                                         double sigma, const BartPrior& prior, Rng& rng) {
    RegressionTree out = tree;
    std::vector<int> leaf;
    out.route(rows, leaf);
    LeafStats stats;
    stats.accumulate(out, leaf, residuals);
    sample_leaf_values(out, stats, sigma, prior.leaf_sd(static_cast<std::size_t>(rows.rows())), rng);
    return out;
}

/// sigma^2 ~ (nu xi + SSR) / chi2(nu + T).
inline double sample_sigma(const Vector& residuals, const BartPrior& prior, Rng& rng) {
    if (residuals.size() < 1) throw NumericalError("sigma draw needs at least one residual");
    const auto n = static_cast<std::size_t>(residuals.size());
    const double nu = prior.nu_for(n);
    const double chi = rng.chi_squared(nu + static_cast<double>(n));
    return std::sqrt((nu * prior.xi + residuals.squaredNorm()) / chi);
}

struct SweepStats {
    std::array<int, 4> proposed{};
    std::array<int, 4> accepted{};

    int total_accepted() const { return accepted[0] + accepted[1] + accepted[2] + accepted[3]; }
};

/// One backfitting pass: every tree gets a structure MH step and a leaf
/// draw against its partial residual, then sigma is redrawn.
inline Forest backfit_sweep(const Forest& forest, const Vector& target, const Matrix& rows,
                            const BartPrior& prior, Rng& rng, SweepStats* stats = nullptr) {
    if (target.size() != rows.rows()) throw StructuralError("target and regressor row counts differ");
    Forest out = forest;
    const auto n = static_cast<std::size_t>(rows.rows());
    const SplitSpace space = SplitSpace::from_rows(rows);
    const double leaf_sd = prior.leaf_sd(n);

    std::vector<Vector> fits(out.trees.size());
    Vector resid = target;
    for (std::size_t s = 0; s < out.trees.size(); ++s) {
        fits[s] = predict_tree(out.trees[s], rows);
        resid -= fits[s];
    }

    LeafStats leaf_stats;
    for (std::size_t s = 0; s < out.trees.size(); ++s) {
        const Vector partial = resid + fits[s];
        const Proposal prop = propose_move(out.trees[s], space, rng);
        MhResult mh = mh_accept(out.trees[s], prop, partial, rows, space, out.sigma, prior, rng);
        if (stats) {
            stats->proposed[static_cast<std::size_t>(prop.move)]++;
            if (mh.accepted) stats->accepted[static_cast<std::size_t>(prop.move)]++;
        }
        out.trees[s] = std::move(mh.tree);
        leaf_stats.accumulate(out.trees[s], mh.leaf_of_row, partial);
        sample_leaf_values(out.trees[s], leaf_stats, out.sigma, leaf_sd, rng);
        Vector& fit = fits[s];
        for (std::size_t r = 0; r < n; ++r)
            fit(static_cast<Eigen::Index>(r)) = out.trees[s].node(mh.leaf_of_row[r]).value;
        resid = partial - fit;
    }
    out.sigma = sample_sigma(resid, prior, rng);
    return out;
}

}  // namespace fabart::bart
