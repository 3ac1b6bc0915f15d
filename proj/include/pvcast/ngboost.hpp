#pragma once

#include <span>
#include <string>
#include <vector>

#include "pvcast/dataset.hpp"
#include "pvcast/dists.hpp"
#include "pvcast/tree.hpp"

namespace pvcast {

struct LineSearchSettings {
    int max_doublings = 10;
    double rel_tol = 1e-3;      // golden-section refinement stop
    double min_bracket = 1e-8;  // below this, the stage is discarded
};

struct NgbConfig {
    int n_stages = 500;
    double learning_rate = 0.01;
    int max_depth = 3;
    int min_samples_leaf = 1;
    Family family = Family::Normal;
    ScoreRule rule = ScoreRule::LogScore;
    LineSearchSettings line_search;
};

/// One boosting stage: a tree per distribution parameter plus the line-search
/// scaling. The applied update is theta -= learning_rate * rho * f(x).
struct NgbStage {
    RegressionTree tree_mu;
    RegressionTree tree_log_scale;
    double rho = 0.0;
};

struct NgbModel {
    DistParams theta0;
    bool theta0_floored = false;  // zero-variance targets forced the scale floor
    std::vector<NgbStage> stages;
    NgbConfig config;
    std::vector<std::string> feature_names;
    double nominal_power = 1.0;  // dataset scaling metadata, carried for forecasts
    bool scaled = false;
};

/// Global parameter fit: argmin over theta of the summed score. Closed forms
/// for the log score (Normal: mean / population std; Laplace: median / mean
/// absolute deviation); CRPS by damped natural-gradient descent from the
/// log-score solution. Zero-variance targets floor the scale at 1e-6 and set
/// *floored.
DistParams fit_theta0(std::span<const double> y, Family family, ScoreRule rule,
                      bool* floored = nullptr);

NgbModel train(const Dataset& data, const NgbConfig& config);

DistParams predict_dist(const NgbModel& model, std::span<const double> x);

/// Raw additive parameter accumulation at x: (mu head, log-scale head). The
/// explanation code attributes these pre-transform values.
std::pair<double, double> predict_raw(const NgbModel& model, std::span<const double> x);

/// Mean training score after 0, 1, ..., n stages (length = stage count + 1).
std::vector<double> staged_scores(const NgbModel& model, const Dataset& data);

}  // namespace pvcast
