#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "fabart/core/error.hpp"
#include "fabart/core/linalg.hpp"

namespace fabart::bart {

/// Route left when row[variable] <= threshold, right otherwise.
struct SplitRule {
    std::size_t variable = 0;
    double threshold = 0.0;

    bool goes_left(double value) const noexcept { return value <= threshold; }
    friend bool operator==(const SplitRule&, const SplitRule&) = default;
};

/// Binary regression tree stored as a flat node array. Node 0 is the root;
/// children always have larger indices than their parent.
class RegressionTree {
public:
    static constexpr int kNone = -1;

    struct Node {
        int parent = kNone;
        int left = kNone;
        int right = kNone;
        int depth = 0;
        SplitRule rule{};
        double value = 0.0;

        bool is_leaf() const noexcept { return left == kNone; }
    };

    explicit RegressionTree(double leaf_value = 0.0) { nodes_.push_back(Node{.value = leaf_value}); }

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const Node& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
    std::size_t size() const noexcept { return nodes_.size(); }

    std::size_t leaf_count() const noexcept { return (nodes_.size() + 1) / 2; }
    std::size_t internal_count() const noexcept { return nodes_.size() / 2; }

    std::vector<int> leaves() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (nodes_[i].is_leaf()) out.push_back(static_cast<int>(i));
        return out;
    }

    std::vector<int> internals() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (!nodes_[i].is_leaf()) out.push_back(static_cast<int>(i));
        return out;
    }

    /// Internal nodes whose two children are both leaves (prune candidates).
    std::vector<int> prunable() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const Node& n = nodes_[i];
            if (!n.is_leaf() && nodes_[n.left].is_leaf() && nodes_[n.right].is_leaf())
                out.push_back(static_cast<int>(i));
        }
        return out;
    }

    /// Internal nodes with an internal parent (swap candidates, keyed by child).
    std::vector<int> swappable_children() const {
        std::vector<int> out;
        for (std::size_t i = 1; i < nodes_.size(); ++i)
            if (!nodes_[i].is_leaf()) out.push_back(static_cast<int>(i));
        return out;
    }

    int max_depth() const noexcept {
        int d = 0;
        for (const auto& n : nodes_) d = std::max(d, n.depth);
        return d;
    }

    template <typename Row>
    int leaf_index(const Row& row) const {
        int i = 0;
        while (!nodes_[i].is_leaf()) {
            const Node& n = nodes_[i];
            i = n.rule.goes_left(row(static_cast<Eigen::Index>(n.rule.variable))) ? n.left : n.right;
        }
        return i;
    }

    /// Leaf index of every row of `rows`, written into `out`.
    void route(const Matrix& rows, std::vector<int>& out) const {
        out.assign(static_cast<std::size_t>(rows.rows()), 0);
        if (nodes_.size() == 1) return;
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            int i = 0;
            while (!nodes_[i].is_leaf()) {
                const Node& n = nodes_[i];
                i = n.rule.goes_left(rows(r, static_cast<Eigen::Index>(n.rule.variable))) ? n.left : n.right;
            }
            out[static_cast<std::size_t>(r)] = i;
        }
    }

    /// Throws if any rule references a column outside [0, n_columns).
    void check_columns(std::size_t n_columns) const {
        for (const auto& n : nodes_) {
            if (!n.is_leaf() && n.rule.variable >= n_columns)
                throw StructuralError("split on column " + std::to_string(n.rule.variable) +
                                      " but only " + std::to_string(n_columns) + " regressors");
        }
    }

    void grow(int leaf, SplitRule rule, double left_value = 0.0, double right_value = 0.0) {
        if (!nodes_.at(static_cast<std::size_t>(leaf)).is_leaf())
            throw StructuralError("grow target is not a leaf");
        const int depth = nodes_[leaf].depth + 1;
        const int l = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{.parent = leaf, .depth = depth, .value = left_value});
        nodes_.push_back(Node{.parent = leaf, .depth = depth, .value = right_value});
        nodes_[leaf].left = l;
        nodes_[leaf].right = l + 1;
        nodes_[leaf].rule = rule;
    }

    /// Collapses an internal node whose children are leaves.
    void prune(int node, double value = 0.0) {
        Node& n = nodes_.at(static_cast<std::size_t>(node));
        if (n.is_leaf() || !nodes_[n.left].is_leaf() || !nodes_[n.right].is_leaf())
            throw StructuralError("prune target must have two leaf children");
        const int l = n.left;
        const int r = n.right;
        n.left = kNone;
        n.right = kNone;
        n.value = value;
        remove_leaf(std::max(l, r));
        remove_leaf(std::min(l, r));
    }

    void set_rule(int node, SplitRule rule) {
        Node& n = nodes_.at(static_cast<std::size_t>(node));
        if (n.is_leaf()) throw StructuralError("cannot set a rule on a leaf");
        n.rule = rule;
    }

    void set_value(int leaf, double value) {
        Node& n = nodes_.at(static_cast<std::size_t>(leaf));
        if (!n.is_leaf()) throw StructuralError("leaf value on an internal node");
        n.value = value;
    }

    /// Structural comparison ignoring leaf values.
    bool same_topology(const RegressionTree& other) const {
        return same_shape(0, other, 0);
    }

    friend bool operator==(const RegressionTree& a, const RegressionTree& b) {
        if (a.nodes_.size() != b.nodes_.size()) return false;
        for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
            const Node& x = a.nodes_[i];
            const Node& y = b.nodes_[i];
            if (x.left != y.left || x.right != y.right || x.parent != y.parent) return false;
            if (x.is_leaf() ? x.value != y.value : !(x.rule == y.rule)) return false;
        }
        return true;
    }

    /// Builds a tree from a raw node list (deserialization). Validates links.
    static RegressionTree from_nodes(std::vector<Node> nodes) {
        if (nodes.empty()) throw StructuralError("empty tree");
        RegressionTree t;
        t.nodes_ = std::move(nodes);
        t.nodes_[0].parent = kNone;
        t.nodes_[0].depth = 0;
        std::size_t reached = 1;
        for (std::size_t i = 0; i < t.nodes_.size(); ++i) {
            Node& n = t.nodes_[i];
            if ((n.left == kNone) != (n.right == kNone))
                throw StructuralError("node with a single child");
            if (n.is_leaf()) continue;
            for (int c : {n.left, n.right}) {
                if (c <= static_cast<int>(i) || c >= static_cast<int>(t.nodes_.size()))
                    throw StructuralError("child index out of order");
                t.nodes_[c].parent = static_cast<int>(i);
                t.nodes_[c].depth = n.depth + 1;
                ++reached;
            }
        }
        if (reached != t.nodes_.size()) throw StructuralError("unreachable nodes in tree");
        return t;
    }

private:
    // Removes a leaf slot and shifts later indices down by one.
    void remove_leaf(int idx) {
        nodes_.erase(nodes_.begin() + idx);
        auto fix = [idx](int& link) {
            if (link > idx) --link;
        };
        for (auto& n : nodes_) {
            fix(n.parent);
            fix(n.left);
            fix(n.right);
        }
    }

    bool same_shape(int i, const RegressionTree& o, int j) const {
        const Node& a = nodes_[i];
        const Node& b = o.nodes_[j];
        if (a.is_leaf() != b.is_leaf()) return false;
        if (a.is_leaf()) return true;
        return a.rule == b.rule && same_shape(a.left, o, b.left) && same_shape(a.right, o, b.right);
    }

    std::vector<Node> nodes_;
};

/// Leaf value of every row (the tree's step function).
inline Vector predict_tree(const RegressionTree& tree, const Matrix& rows) {
    tree.check_columns(static_cast<std::size_t>(rows.cols()));
    std::vector<int> leaf;
    tree.route(rows, leaf);
    Vector out(rows.rows());
    for (Eigen::Index r = 0; r < rows.rows(); ++r) out(r) = tree.node(leaf[r]).value;
    return out;
}

/// Plain-text dump: one line per node with depth indentation.
inline void dump_tree(std::ostream& os, const RegressionTree& tree, int node = 0) {
    const auto& n = tree.node(node);
    os << std::string(static_cast<std::size_t>(2 * n.depth), ' ');
    if (n.is_leaf()) {
        os << "leaf[" << node << "] mu=" << n.value << '\n';
        return;
    }
    os << "split[" << node << "] y" << n.rule.variable << " <= " << n.rule.threshold << '\n';
    dump_tree(os, tree, n.left);
    dump_tree(os, tree, n.right);
}

}  // namespace fabart::bart
