#pragma once

#include <span>
#include <vector>

#include "pvcast/matrix.hpp"
#include "pvcast/ngboost.hpp"
#include "pvcast/tree.hpp"

namespace pvcast {

/// Which additive parameter accumulation is being explained. Attribution
/// targets the raw theta components (mu and log-scale sums over stages);
/// additivity only holds before the exp transform of the scale.
enum class Head { Mu, Scale };

struct Explanation {
    Head head = Head::Mu;
    double base_value = 0.0;     // conditional expectation with nothing known
    std::vector<double> phi;     // one contribution per feature
    std::vector<double> x;       // the explained input
};

struct InteractionMatrix {
    Head head = Head::Mu;
    double base_value = 0.0;
    Matrix phi;  // D x D, symmetric, rows sum to the per-feature contributions
    std::vector<double> x;
};

struct GlobalImportance {
    std::vector<int> feature;        // sorted by importance desc, ties by index
    std::vector<double> mean_abs_phi;
};

struct SummaryRecord {
    int sample_id = 0;
    int feature = 0;
    double feature_value = 0.0;
    double phi = 0.0;
};

struct Summary {
    GlobalImportance importance;
    std::vector<SummaryRecord> records;  // plot-ready per-sample contributions
};

struct ForceEntry {
    int feature = 0;
    double feature_value = 0.0;
    double phi = 0.0;
    double cumulative = 0.0;  // base value plus contributions so far
    bool displayed = false;
};

/// E[tree(x') | x'_S = x_S]: walks the tree following x on features in S and
/// taking the cover-weighted average of both children elsewhere.
double conditional_expectation(const RegressionTree& tree, std::span<const double> x,
                               std::span<const int> S);

/// Exact per-tree Shapley attribution (path recursion over subset sizes),
/// summed across stages with their applied weights.
Explanation shap_values(const NgbModel& model, std::span<const double> x, Head head);

/// Shapley formula evaluated verbatim over all 2^D subsets. Refuses D > 20.
Explanation shap_brute_force(const NgbModel& model, std::span<const double> x, Head head);

/// Pairwise Shapley interaction values; off-diagonal pairs split equally,
/// diagonal set so each row sums to the plain contribution phi[d].
InteractionMatrix shap_interactions(const NgbModel& model, std::span<const double> x,
                                    Head head);

/// Interaction formula enumerated over all subsets of the full feature set.
InteractionMatrix shap_interactions_brute_force(const NgbModel& model,
                                                std::span<const double> x, Head head);

/// Mean |phi| per feature over a dataset plus the per-sample records behind
/// summary/dependence plots.
Summary summarize(const NgbModel& model, const Dataset& data, Head head);

/// Features ordered by |phi| descending with the cumulative reconstruction
/// from the base value; negligible contributions are flagged not-displayed.
std::vector<ForceEntry> force_record(const Explanation& explanation);

}  // namespace pvcast
