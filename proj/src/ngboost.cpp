#include "pvcast/ngboost.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pvcast/errors.hpp"
#include "pvcast/util.hpp"

namespace pvcast {

namespace {

constexpr double kScaleFloor = 1e-6;

DistParams log_score_theta0(std::span<const double> y, Family family, bool* floored) {
    double mu, s;
    if (family == Family::Normal) {
        mu = mean_of(y);
        s = population_std(y);
    } else {
        mu = median_of(y);
        double abs_dev = 0.0;
        for (double v : y) abs_dev += std::abs(v - mu);
        s = abs_dev / static_cast<double>(y.size());
    }
    if (floored) *floored = s < kScaleFloor;
    s = std::max(s, kScaleFloor);
    return {family, mu, std::log(s)};
}

double total_score(const DistParams& params, ScoreRule rule, std::span<const double> y) {
    double total = 0.0;
    for (double v : y) total += score(params, rule, v);
    return total;
}

}  // namespace

DistParams fit_theta0(std::span<const double> y, Family family, ScoreRule rule,
                      bool* floored) {
    if (y.size() < 2) throw DataError("fit_theta0: need at least 2 targets");
    DistParams theta = log_score_theta0(y, family, floored);
    if (rule == ScoreRule::LogScore) return theta;

    // CRPS: damped natural-gradient descent from the log-score solution.
    double current = total_score(theta, rule, y);
    for (int iter = 0; iter < 200; ++iter) {
        double g_mu = 0.0, g_ls = 0.0;
        for (double v : y) {
            const Grad2 g = natural_grad(theta, rule, v);
            g_mu += g.d_mu;
            g_ls += g.d_log_scale;
        }
        g_mu /= static_cast<double>(y.size());
        g_ls /= static_cast<double>(y.size());

        double step = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 40; ++halving) {
            const DistParams cand{family, theta.mu - step * g_mu,
                                  theta.log_scale - step * g_ls};
            const double value = total_score(cand, rule, y);
            if (value <= current) {
                theta = cand;
                accepted = value < current;
                current = value;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    if (theta.log_scale < std::log(kScaleFloor)) {
        theta.log_scale = std::log(kScaleFloor);
        if (floored) *floored = true;
    }
    return theta;
}

namespace {

/// Total score after the tentative step theta_i - s * f(x_i).
struct StepObjective {
    const std::vector<double>& mu;
    const std::vector<double>& log_scale;
    const std::vector<double>& f_mu;
    const std::vector<double>& f_ls;
    std::span<const double> y;
    Family family;
    ScoreRule rule;

    double operator()(double s) const {
        double total = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const DistParams p{family, mu[i] - s * f_mu[i], log_scale[i] - s * f_ls[i]};
            total += score(p, rule, y[i]);
        }
        return total;
    }
};

/// Bracketed line search for Eq.-style scaling: start at 1, double while
/// improving, golden-section refine; returns false when no rho > 0 improves on
/// rho = 0 before the bracket shrinks below min_bracket.
bool line_search_rho(const StepObjective& phi, double phi0, const LineSearchSettings& ls,
                     double* rho_out) {
    double best_rho = 0.0, best_val = phi0;
    const auto track = [&](double r, double v) {
        if (v < best_val) {
            best_val = v;
            best_rho = r;
        }
    };

    double a = 0.0, b;
    double r = 1.0;
    double v = phi(r);
    if (v < phi0) {
        track(r, v);
        int doublings = 0;
        while (doublings < ls.max_doublings) {
            const double v_next = phi(2.0 * r);
            if (!(v_next < v)) break;
            a = r;
            r *= 2.0;
            v = v_next;
            track(r, v);
            ++doublings;
        }
        b = 2.0 * r;
    } else {
        while (r >= ls.min_bracket) {
            r *= 0.5;
            v = phi(r);
            if (v < phi0) break;
        }
        if (!(v < phi0)) return false;
        track(r, v);
        b = 2.0 * r;
    }

    // Golden-section refinement on [a, b].
    constexpr double kInvGolden = 0.618033988749894848;
    double x1 = b - kInvGolden * (b - a);
    double x2 = a + kInvGolden * (b - a);
    double f1 = phi(x1), f2 = phi(x2);
    track(x1, f1);
    track(x2, f2);
    for (int iter = 0; iter < 80 && (b - a) > ls.rel_tol * b; ++iter) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvGolden * (b - a);
            f1 = phi(x1);
            track(x1, f1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvGolden * (b - a);
            f2 = phi(x2);
            track(x2, f2);
        }
    }
    if (!(best_val < phi0) || best_rho <= 0.0) return false;
    *rho_out = best_rho;
    return true;
}

}  // namespace

NgbModel train(const Dataset& data, const NgbConfig& config) {
    const std::size_t m = data.y.size();
    if (m < 2 || data.X.rows() != m)
        throw DataError("train: dataset needs at least 2 consistent rows");
    if (config.n_stages < 1) throw DataError("train: n_stages must be >= 1");
    if (!(config.learning_rate > 0.0 && config.learning_rate <= 1.0))
        throw DataError("train: learning_rate must be in (0, 1]");

    NgbModel model;
    model.config = config;
    model.feature_names = data.feature_names;
    model.nominal_power = data.nominal_power;
    model.scaled = data.scaled;
    model.theta0 = fit_theta0(data.y, config.family, config.rule, &model.theta0_floored);

    std::vector<double> mu(m, model.theta0.mu);
    std::vector<double> log_scale(m, model.theta0.log_scale);
    std::vector<double> g_mu(m), g_ls(m), f_mu(m), f_ls(m);

    const FeatureOrder order = FeatureOrder::build(data.X);

    for (int stage = 0; stage < config.n_stages; ++stage) {
        for (std::size_t i = 0; i < m; ++i) {
            const DistParams p{config.family, mu[i], log_scale[i]};
            const Grad2 g = natural_grad(p, config.rule, data.y[i]);
            g_mu[i] = g.d_mu;
            g_ls[i] = g.d_log_scale;
        }
        NgbStage fitted;
        fitted.tree_mu = fit_tree(data.X, order, g_mu, config.max_depth,
                                  config.min_samples_leaf);
        fitted.tree_log_scale = fit_tree(data.X, order, g_ls, config.max_depth,
                                         config.min_samples_leaf);
        for (std::size_t i = 0; i < m; ++i) {
            f_mu[i] = predict_tree(fitted.tree_mu, data.X.row(i));
            f_ls[i] = predict_tree(fitted.tree_log_scale, data.X.row(i));
        }

        const StepObjective phi{mu, log_scale, f_mu, f_ls, data.y,
                                config.family, config.rule};
        const double phi0 = phi(0.0);
        if (!std::isfinite(phi0))
            throw NumericalError("train: non-finite score at stage " +
                                 std::to_string(stage));

        double rho = 0.0;
        if (!line_search_rho(phi, phi0, config.line_search, &rho)) break;

        // The update applies the learning-rate-damped step; make sure the
        // damped step itself does not increase the total score either.
        double applied = config.learning_rate * rho;
        bool ok = false;
        for (int halving = 0; halving < 60; ++halving) {
            const double value = phi(applied);
            if (std::isfinite(value) && value <= phi0) {
                ok = true;
                break;
            }
            rho *= 0.5;
            applied = config.learning_rate * rho;
        }
        if (!ok) break;

        for (std::size_t i = 0; i < m; ++i) {
            mu[i] -= applied * f_mu[i];
            log_scale[i] -= applied * f_ls[i];
        }
        fitted.rho = rho;
        model.stages.push_back(std::move(fitted));
    }
    return model;
}

std::pair<double, double> predict_raw(const NgbModel& model, std::span<const double> x) {
    if (!model.stages.empty()) {
        if (x.size() != static_cast<std::size_t>(model.stages.front().tree_mu.feature_count))
            throw DataError("predict: feature count mismatch");
    } else if (!model.feature_names.empty() && x.size() != model.feature_names.size()) {
        throw DataError("predict: feature count mismatch");
    }
    double mu = model.theta0.mu;
    double log_scale = model.theta0.log_scale;
    for (const NgbStage& stage : model.stages) {
        const double step = model.config.learning_rate * stage.rho;
        mu -= step * predict_tree(stage.tree_mu, x);
        log_scale -= step * predict_tree(stage.tree_log_scale, x);
    }
    return {mu, log_scale};
}

DistParams predict_dist(const NgbModel& model, std::span<const double> x) {
    const auto [mu, log_scale] = predict_raw(model, x);
    return {model.theta0.family, mu, log_scale};
}

std::vector<double> staged_scores(const NgbModel& model, const Dataset& data) {
    const std::size_t m = data.y.size();
    if (m == 0 || data.X.rows() != m)
        throw DataError("staged_scores: dataset rows do not match targets");
    std::vector<double> mu(m, model.theta0.mu);
    std::vector<double> log_scale(m, model.theta0.log_scale);

    const auto mean_score = [&]() {
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const DistParams p{model.theta0.family, mu[i], log_scale[i]};
            total += score(p, model.config.rule, data.y[i]);
        }
        return total / static_cast<double>(m);
    };

    std::vector<double> trace;
    trace.reserve(model.stages.size() + 1);
    trace.push_back(mean_score());
    for (const NgbStage& stage : model.stages) {
        const double step = model.config.learning_rate * stage.rho;
        for (std::size_t i = 0; i < m; ++i) {
            mu[i] -= step * predict_tree(stage.tree_mu, data.X.row(i));
            log_scale[i] -= step * predict_tree(stage.tree_log_scale, data.X.row(i));
        }
        trace.push_back(mean_score());
    }
    return trace;
}

}  // namespace pvcast
