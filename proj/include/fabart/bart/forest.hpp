#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "fabart/bart/prior.hpp"
#include "fabart/bart/tree.hpp"

namespace fabart::bart {

/// Sum-of-trees fit for one measurement equation, on the rescaled target.
struct Forest {
    std::vector<RegressionTree> trees;
    double sigma = 1.0;
    std::size_t equation_index = 0;

    static Forest stumps(std::size_t n_trees, double sigma, std::size_t equation = 0) {
        if (n_trees == 0) throw ConfigError("a forest needs at least one tree");
        return Forest{std::vector<RegressionTree>(n_trees), sigma, equation};
    }

    std::size_t size() const noexcept { return trees.size(); }
};

inline Vector predict_forest(const Forest& forest, const Matrix& rows) {
    if (forest.trees.empty()) throw StructuralError("empty forest");
    Vector out = Vector::Zero(rows.rows());
    for (const auto& t : forest.trees) out += predict_tree(t, rows);
    return out;
}

/// Target minus the fit of every tree except `exclude`.
inline Vector partial_residual(const Vector& target, const Forest& forest, const Matrix& rows,
                               std::size_t exclude) {
    if (exclude >= forest.trees.size()) throw StructuralError("partial residual tree index out of range");
    if (target.size() != rows.rows()) throw StructuralError("target and regressor row counts differ");
    Vector out = target;
    for (std::size_t s = 0; s < forest.trees.size(); ++s)
        if (s != exclude) out -= predict_tree(forest.trees[s], rows);
    return out;
}

inline void dump_forest(std::ostream& os, const Forest& forest) {
    os << "forest equation=" << forest.equation_index << " trees=" << forest.trees.size()
       << " sigma=" << forest.sigma << '\n';
    for (std::size_t s = 0; s < forest.trees.size(); ++s) {
        const auto& t = forest.trees[s];
        os << "tree " << s << " leaves=" << t.leaf_count() << " depth=" << t.max_depth() << '\n';
        dump_tree(os, t);
    }
}

}  // namespace fabart::bart
