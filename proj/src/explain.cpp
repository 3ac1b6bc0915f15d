#include "pvcast/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "pvcast/errors.hpp"

namespace pvcast {

namespace {

const RegressionTree& head_tree(const NgbStage& stage, Head head) {
    return head == Head::Mu ? stage.tree_mu : stage.tree_log_scale;
}

double head_theta0(const NgbModel& model, Head head) {
    return head == Head::Mu ? model.theta0.mu : model.theta0.log_scale;
}

double head_value(const NgbModel& model, std::span<const double> x, Head head) {
    const auto [mu, log_scale] = predict_raw(model, x);
    return head == Head::Mu ? mu : log_scale;
}

double cond_exp_mask(const RegressionTree& tree, std::span<const double> x,
                     std::uint32_t mask, int node_index) {
    const TreeNode& node = tree.nodes[node_index];
    if (node.is_leaf()) return node.value;
    if (mask & (1u << node.feature)) {
        const int next = x[node.feature] < node.threshold ? node.left : node.right;
        return cond_exp_mask(tree, x, mask, next);
    }
    const double wl = static_cast<double>(tree.nodes[node.left].cover);
    const double wr = static_cast<double>(tree.nodes[node.right].cover);
    return (wl * cond_exp_mask(tree, x, mask, node.left) +
            wr * cond_exp_mask(tree, x, mask, node.right)) /
           static_cast<double>(node.cover);
}

// ---------------------------------------------------------------------------
// Exact per-tree attribution: recursion over root-to-leaf paths that keeps,
// for every subset size, the summed proportion of feature subsets flowing to
// the current node ("path weights"). Extending the path adds a feature with
// its cover fraction (feature excluded) and indicator fraction (feature
// included); unwinding removes one feature to evaluate its contribution.
// ---------------------------------------------------------------------------

struct PathElement {
    int feature_index = -1;
    double zero_fraction = 0.0;
    double one_fraction = 0.0;
    double pweight = 0.0;
};

void extend_path(PathElement* path, unsigned depth, double zero_fraction,
                 double one_fraction, int feature_index) {
    path[depth] = {feature_index, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
    for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
        path[i + 1].pweight +=
            one_fraction * path[i].pweight * (i + 1) / static_cast<double>(depth + 1);
        path[i].pweight =
            zero_fraction * path[i].pweight * (depth - i) / static_cast<double>(depth + 1);
    }
}

void unwind_path(PathElement* path, unsigned depth, unsigned index) {
    const double one_fraction = path[index].one_fraction;
    const double zero_fraction = path[index].zero_fraction;
    double next_one_portion = path[depth].pweight;
    for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
        if (one_fraction != 0.0) {
            const double tmp = path[i].pweight;
            path[i].pweight =
                next_one_portion * (depth + 1) / static_cast<double>((i + 1) * one_fraction);
            next_one_portion = tmp - path[i].pweight * zero_fraction * (depth - i) /
                                         static_cast<double>(depth + 1);
        } else {
            path[i].pweight = path[i].pweight * (depth + 1) /
                              static_cast<double>(zero_fraction * (depth - i));
        }
    }
    for (unsigned i = index; i < depth; ++i) {
        path[i].feature_index = path[i + 1].feature_index;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
}

double unwound_path_sum(const PathElement* path, unsigned depth, unsigned index) {
    const double one_fraction = path[index].one_fraction;
    const double zero_fraction = path[index].zero_fraction;
    double next_one_portion = path[depth].pweight;
    double total = 0.0;
    if (one_fraction != 0.0) {
        for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
            const double tmp =
                next_one_portion * (depth + 1) / static_cast<double>((i + 1) * one_fraction);
            total += tmp;
            next_one_portion =
                path[i].pweight - tmp * zero_fraction * (depth - i) /
                                      static_cast<double>(depth + 1);
        }
    } else {
        for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
            total += path[i].pweight * (depth + 1) /
                     static_cast<double>(zero_fraction * (depth - i));
        }
    }
    return total;
}

void tree_shap_recursive(const RegressionTree& tree, std::span<const double> x,
                         std::vector<double>& phi, int node_index, unsigned depth,
                         PathElement* parent_path, double parent_zero_fraction,
                         double parent_one_fraction, int parent_feature_index) {
    PathElement* path = parent_path + depth + 1;
    std::copy(parent_path, parent_path + depth + 1, path);
    extend_path(path, depth, parent_zero_fraction, parent_one_fraction,
                parent_feature_index);

    const TreeNode& node = tree.nodes[node_index];
    if (node.is_leaf()) {
        for (unsigned i = 1; i <= depth; ++i) {
            const double w = unwound_path_sum(path, depth, i);
            phi[path[i].feature_index] +=
                w * (path[i].one_fraction - path[i].zero_fraction) * node.value;
        }
        return;
    }

    const bool goes_left = x[node.feature] < node.threshold;
    const int hot = goes_left ? node.left : node.right;
    const int cold = goes_left ? node.right : node.left;
    const double cover = static_cast<double>(node.cover);
    const double hot_zero_fraction = static_cast<double>(tree.nodes[hot].cover) / cover;
    const double cold_zero_fraction = static_cast<double>(tree.nodes[cold].cover) / cover;
    double incoming_zero_fraction = 1.0;
    double incoming_one_fraction = 1.0;

    unsigned index = 0;
    for (; index <= depth; ++index)
        if (path[index].feature_index == node.feature) break;
    if (index != depth + 1) {
        incoming_zero_fraction = path[index].zero_fraction;
        incoming_one_fraction = path[index].one_fraction;
        unwind_path(path, depth, index);
        depth -= 1;
    }

    tree_shap_recursive(tree, x, phi, hot, depth + 1, path,
                        hot_zero_fraction * incoming_zero_fraction,
                        incoming_one_fraction, node.feature);
    tree_shap_recursive(tree, x, phi, cold, depth + 1, path,
                        cold_zero_fraction * incoming_zero_fraction, 0.0, node.feature);
}

void tree_shap(const RegressionTree& tree, std::span<const double> x,
               std::vector<double>& phi) {
    const unsigned maxd = static_cast<unsigned>(tree.max_depth) + 2;
    std::vector<PathElement> buffer(maxd * (maxd + 1) / 2 + 1);
    tree_shap_recursive(tree, x, phi, 0, 0, buffer.data(), 1.0, 1.0, -1);
}

// Shapley weights 1/(n * C(n-1, s)) computed from an exact Pascal triangle.
std::vector<std::vector<double>> binomial_rows(int n) {
    std::vector<std::vector<double>> rows(n + 1);
    for (int i = 0; i <= n; ++i) {
        rows[i].assign(i + 1, 1.0);
        for (int j = 1; j < i; ++j) rows[i][j] = rows[i - 1][j - 1] + rows[i - 1][j];
    }
    return rows;
}

double model_cond_exp(const NgbModel& model, std::span<const double> x, Head head,
                      std::uint32_t mask) {
    double value = head_theta0(model, head);
    for (const NgbStage& stage : model.stages) {
        const double step = model.config.learning_rate * stage.rho;
        value -= step * cond_exp_mask(head_tree(stage, head), x, mask, 0);
    }
    return value;
}

std::vector<int> used_features(const RegressionTree& tree) {
    std::vector<int> used;
    for (const TreeNode& node : tree.nodes)
        if (!node.is_leaf()) used.push_back(node.feature);
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    return used;
}

}  // namespace

double conditional_expectation(const RegressionTree& tree, std::span<const double> x,
                               std::span<const int> S) {
    std::uint32_t mask = 0;
    for (int f : S) {
        if (f < 0 || f >= tree.feature_count)
            throw DataError("conditional_expectation: feature index out of range");
        mask |= 1u << f;
    }
    return cond_exp_mask(tree, x, mask, 0);
}

Explanation shap_values(const NgbModel& model, std::span<const double> x, Head head) {
    const std::size_t d = x.size();
    Explanation out;
    out.head = head;
    out.x.assign(x.begin(), x.end());
    out.phi.assign(d, 0.0);
    out.base_value = model_cond_exp(model, x, head, 0);

    std::vector<double> scratch(d);
    for (const NgbStage& stage : model.stages) {
        const double step = model.config.learning_rate * stage.rho;
        std::fill(scratch.begin(), scratch.end(), 0.0);
        tree_shap(head_tree(stage, head), x, scratch);
        for (std::size_t f = 0; f < d; ++f) out.phi[f] -= step * scratch[f];
    }
    return out;
}

Explanation shap_brute_force(const NgbModel& model, std::span<const double> x, Head head) {
    const int d = static_cast<int>(x.size());
    if (d > 20) throw DataError("shap_brute_force: feature count above 20");

    const std::uint32_t n_masks = 1u << d;
    std::vector<double> f(n_masks);
    for (std::uint32_t mask = 0; mask < n_masks; ++mask)
        f[mask] = model_cond_exp(model, x, head, mask);

    const auto binom = binomial_rows(std::max(d - 1, 1));
    Explanation out;
    out.head = head;
    out.x.assign(x.begin(), x.end());
    out.phi.assign(d, 0.0);
    out.base_value = f[0];
    for (int feat = 0; feat < d; ++feat) {
        const std::uint32_t bit = 1u << feat;
        double total = 0.0;
        for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
            if (mask & bit) continue;
            const int s = std::popcount(mask);
            const double weight = 1.0 / (d * binom[d - 1][s]);
            total += weight * (f[mask | bit] - f[mask]);
        }
        out.phi[feat] = total;
    }
    return out;
}

InteractionMatrix shap_interactions(const NgbModel& model, std::span<const double> x,
                                    Head head) {
    const std::size_t d = x.size();
    InteractionMatrix out;
    out.head = head;
    out.x.assign(x.begin(), x.end());
    out.phi = Matrix(d, d, 0.0);

    // Features a tree never splits on are null players for that tree, so each
    // pair's interaction can be enumerated over the tree's own feature set.
    std::vector<double> fsub;
    for (const NgbStage& stage : model.stages) {
        const RegressionTree& tree = head_tree(stage, head);
        const std::vector<int> used = used_features(tree);
        const int u = static_cast<int>(used.size());
        if (u < 2) continue;
        const double step = model.config.learning_rate * stage.rho;

        const std::uint32_t n_masks = 1u << u;
        fsub.resize(n_masks);
        for (std::uint32_t sub = 0; sub < n_masks; ++sub) {
            std::uint32_t mask = 0;
            for (int j = 0; j < u; ++j)
                if (sub & (1u << j)) mask |= 1u << used[j];
            fsub[sub] = cond_exp_mask(tree, x, mask, 0);
        }

        const auto binom = binomial_rows(std::max(u - 2, 1));
        for (int p = 0; p < u; ++p) {
            for (int q = p + 1; q < u; ++q) {
                const std::uint32_t bp = 1u << p, bq = 1u << q;
                double total = 0.0;
                for (std::uint32_t sub = 0; sub < n_masks; ++sub) {
                    if (sub & (bp | bq)) continue;
                    const int s = std::popcount(sub);
                    const double weight = 1.0 / ((u - 1) * binom[u - 2][s]);
                    total += weight * (fsub[sub | bp | bq] - fsub[sub | bp] -
                                       fsub[sub | bq] + fsub[sub]);
                }
                const double value = -step * 0.5 * total;
                out.phi(used[p], used[q]) += value;
                out.phi(used[q], used[p]) += value;
            }
        }
    }

    const Explanation expl = shap_values(model, x, head);
    out.base_value = expl.base_value;
    for (std::size_t f = 0; f < d; ++f) {
        double off_diag = 0.0;
        for (std::size_t g = 0; g < d; ++g)
            if (g != f) off_diag += out.phi(f, g);
        out.phi(f, f) = expl.phi[f] - off_diag;
    }
    return out;
}

InteractionMatrix shap_interactions_brute_force(const NgbModel& model,
                                                std::span<const double> x, Head head) {
    const int d = static_cast<int>(x.size());
    if (d > 20) throw DataError("shap_interactions_brute_force: feature count above 20");

    const std::uint32_t n_masks = 1u << d;
    std::vector<double> f(n_masks);
    for (std::uint32_t mask = 0; mask < n_masks; ++mask)
        f[mask] = model_cond_exp(model, x, head, mask);

    InteractionMatrix out;
    out.head = head;
    out.x.assign(x.begin(), x.end());
    out.phi = Matrix(d, d, 0.0);
    out.base_value = f[0];

    if (d >= 2) {
        const auto binom = binomial_rows(std::max(d - 2, 1));
        for (int p = 0; p < d; ++p) {
            for (int q = p + 1; q < d; ++q) {
                const std::uint32_t bp = 1u << p, bq = 1u << q;
                double total = 0.0;
                for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
                    if (mask & (bp | bq)) continue;
                    const int s = std::popcount(mask);
                    const double weight = 1.0 / ((d - 1) * binom[d - 2][s]);
                    total += weight *
                             (f[mask | bp | bq] - f[mask | bp] - f[mask | bq] + f[mask]);
                }
                out.phi(p, q) = 0.5 * total;
                out.phi(q, p) = 0.5 * total;
            }
        }
    }

    const Explanation expl = shap_brute_force(model, x, head);
    for (int feat = 0; feat < d; ++feat) {
        double off_diag = 0.0;
        for (int g = 0; g < d; ++g)
            if (g != feat) off_diag += out.phi(feat, g);
        out.phi(feat, feat) = expl.phi[feat] - off_diag;
    }
    return out;
}

Summary summarize(const NgbModel& model, const Dataset& data, Head head) {
    if (data.y.empty()) throw DataError("summarize: empty dataset");
    const std::size_t d = data.X.cols();
    Summary out;
    std::vector<double> abs_sum(d, 0.0);
    out.records.reserve(data.X.rows() * d);
    for (std::size_t i = 0; i < data.X.rows(); ++i) {
        const Explanation expl = shap_values(model, data.X.row(i), head);
        for (std::size_t f = 0; f < d; ++f) {
            abs_sum[f] += std::abs(expl.phi[f]);
            out.records.push_back({static_cast<int>(i), static_cast<int>(f),
                                   data.X(i, f), expl.phi[f]});
        }
    }
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&abs_sum](int a, int b) { return abs_sum[a] > abs_sum[b]; });
    for (int f : order) {
        out.importance.feature.push_back(f);
        out.importance.mean_abs_phi.push_back(abs_sum[f] /
                                              static_cast<double>(data.X.rows()));
    }
    return out;
}

std::vector<ForceEntry> force_record(const Explanation& explanation) {
    const std::size_t d = explanation.phi.size();
    double sum_phi = 0.0;
    for (double p : explanation.phi) sum_phi += p;
    const double display_floor = 1e-6 * std::abs(sum_phi);

    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(explanation.phi[a]) > std::abs(explanation.phi[b]);
    });

    std::vector<ForceEntry> entries;
    entries.reserve(d);
    double cumulative = explanation.base_value;
    for (int f : order) {
        const double phi = explanation.phi[f];
        cumulative += phi;
        const bool displayed = std::abs(phi) > 0.0 && std::abs(phi) >= display_floor;
        entries.push_back({f, explanation.x[f], phi, cumulative, displayed});
    }
    return entries;
}

}  // namespace pvcast
