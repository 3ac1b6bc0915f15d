#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pvcast/matrix.hpp"

namespace pvcast {

/// One node of a regression tree, stored in a flat vector. Internal nodes
/// carry a split (feature, threshold, children); leaves carry the mean of the
/// routed targets. Every node stores its cover (count of training rows routed
/// through it) because the explanation code weights by child covers.
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::int64_t cover = 0;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    int feature_count = 0;
    int max_depth = 0;
};

/// Row indices presorted per feature. Built once per X and reused across all
/// trees fitted on the same matrix (boosting refits on identical X).
struct FeatureOrder {
    std::vector<std::vector<int>> by_feature;

    static FeatureOrder build(const Matrix& X);
};

/// Greedy CART fit: exact best-split scan on squared-error reduction,
/// thresholds at midpoints of consecutive distinct sorted values, leaf value =
/// mean of routed targets. Ties broken by lowest feature index, then lowest
/// threshold. Stops on depth, purity, or the min_samples_leaf floor.
RegressionTree fit_tree(const Matrix& X, const FeatureOrder& order,
                        std::span<const double> targets, int max_depth,
                        int min_samples_leaf);

RegressionTree fit_tree(const Matrix& X, std::span<const double> targets, int max_depth,
                        int min_samples_leaf);

/// Routes by x[feature] < threshold -> left; returns the leaf value.
double predict_tree(const RegressionTree& tree, std::span<const double> x);

}  // namespace pvcast
