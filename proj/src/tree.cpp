#include "pvcast/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pvcast/errors.hpp"

namespace pvcast {

FeatureOrder FeatureOrder::build(const Matrix& X) {
    FeatureOrder order;
    order.by_feature.resize(X.cols());
    for (std::size_t f = 0; f < X.cols(); ++f) {
        std::vector<int>& idx = order.by_feature[f];
        idx.resize(X.rows());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&X, f](int a, int b) { return X(a, f) < X(b, f); });
    }
    return order;
}

namespace {

struct Builder {
    const Matrix& X;
    std::span<const double> y;
    int max_depth;
    int min_samples_leaf;
    std::vector<TreeNode> nodes;

    // lists[f] holds this node's row indices sorted by feature f.
    int build(const std::vector<std::vector<int>>& lists, int depth) {
        const std::vector<int>& rows = lists[0];
        const std::int64_t n = static_cast<std::int64_t>(rows.size());
        double sum = 0.0;
        double lo = y[rows[0]], hi = y[rows[0]];
        for (int r : rows) {
            sum += y[r];
            lo = std::min(lo, y[r]);
            hi = std::max(hi, y[r]);
        }
        const int node_index = static_cast<int>(nodes.size());
        nodes.push_back({});
        TreeNode& self = nodes[node_index];
        self.cover = n;
        self.value = sum / static_cast<double>(n);

        const bool pure = (lo == hi);
        if (depth >= max_depth || pure || n < 2 * min_samples_leaf)
            return node_index;

        // Exact split scan: for every feature, every midpoint between
        // consecutive distinct sorted values. The -sum^2/n term of the gain is
        // constant per node, so maximizing sumL^2/nL + sumR^2/nR is enough.
        // Strict improvement plus ascending iteration order gives the
        // lowest-feature / lowest-threshold tie-break.
        int best_feature = -1;
        double best_threshold = 0.0;
        double best_proxy = -std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < X.cols(); ++f) {
            const std::vector<int>& idx = lists[f];
            double sum_left = 0.0;
            for (std::int64_t k = 1; k < n; ++k) {
                sum_left += y[idx[k - 1]];
                const double v_prev = X(idx[k - 1], f);
                const double v_cur = X(idx[k], f);
                if (!(v_prev < v_cur)) continue;
                if (k < min_samples_leaf || n - k < min_samples_leaf) continue;
                double thr = v_prev + (v_cur - v_prev) * 0.5;
                if (!(thr > v_prev)) thr = v_cur;  // adjacent doubles
                const double sum_right = sum - sum_left;
                const double proxy = sum_left * sum_left / static_cast<double>(k) +
                                     sum_right * sum_right / static_cast<double>(n - k);
                if (proxy > best_proxy) {
                    best_proxy = proxy;
                    best_feature = static_cast<int>(f);
                    best_threshold = thr;
                }
            }
        }
        if (best_feature < 0) return node_index;  // no splittable feature left

        std::vector<std::vector<int>> left_lists(X.cols()), right_lists(X.cols());
        for (std::size_t f = 0; f < X.cols(); ++f) {
            left_lists[f].reserve(rows.size());
            right_lists[f].reserve(rows.size());
            for (int r : lists[f]) {
                if (X(r, best_feature) < best_threshold)
                    left_lists[f].push_back(r);
                else
                    right_lists[f].push_back(r);
            }
        }

        const int left_index = build(left_lists, depth + 1);
        const int right_index = build(right_lists, depth + 1);
        TreeNode& node = nodes[node_index];  // re-fetch: vector may have grown
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = left_index;
        node.right = right_index;
        return node_index;
    }
};

}  // namespace

RegressionTree fit_tree(const Matrix& X, const FeatureOrder& order,
                        std::span<const double> targets, int max_depth,
                        int min_samples_leaf) {
    if (X.rows() == 0 || X.cols() == 0)
        throw DataError("fit_tree: empty matrix");
    if (targets.size() != X.rows())
        throw DataError("fit_tree: targets length does not match row count");
    if (max_depth < 0 || min_samples_leaf < 1)
        throw DataError("fit_tree: invalid depth or leaf floor");

    Builder builder{X, targets, max_depth, min_samples_leaf, {}};
    builder.build(order.by_feature, 0);

    RegressionTree tree;
    tree.nodes = std::move(builder.nodes);
    tree.feature_count = static_cast<int>(X.cols());
    tree.max_depth = max_depth;
    return tree;
}

RegressionTree fit_tree(const Matrix& X, std::span<const double> targets, int max_depth,
                        int min_samples_leaf) {
    return fit_tree(X, FeatureOrder::build(X), targets, max_depth, min_samples_leaf);
}

double predict_tree(const RegressionTree& tree, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(tree.feature_count))
        throw DataError("predict_tree: feature count mismatch");
    int i = 0;
    while (!tree.nodes[i].is_leaf()) {
        const TreeNode& node = tree.nodes[i];
        i = x[node.feature] < node.threshold ? node.left : node.right;
    }
    return tree.nodes[i].value;
}

}  // namespace pvcast
