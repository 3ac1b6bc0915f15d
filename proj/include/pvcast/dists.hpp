#pragma once

#include <cmath>
#include <utility>

namespace pvcast {

enum class Family { Normal, Laplace };
enum class ScoreRule { LogScore, Crps };

/// Two-parameter predictive distribution in (location, log scale). The log
/// parametrization keeps scale = exp(log_scale) positive without clamping.
struct DistParams {
    Family family = Family::Normal;
    double mu = 0.0;
    double log_scale = 0.0;

    double scale() const { return std::exp(log_scale); }
};

/// Gradient with respect to (mu, log_scale).
struct Grad2 {
    double d_mu = 0.0;
    double d_log_scale = 0.0;
};

/// Fisher information in the (mu, log_scale) chart. Diagonal for the families
/// implemented here, but kept as a full 2x2 for the record.
struct Fisher2 {
    double m00 = 0.0, m01 = 0.0;
    double m10 = 0.0, m11 = 0.0;
};

/// Scoring-rule loss of params against observation y (lower is better).
double score(const DistParams& params, ScoreRule rule, double y);

/// Analytic gradient of score w.r.t. (mu, log_scale). At the Laplace kink
/// (y == mu under LogScore) the location component uses subgradient 0.
Grad2 grad(const DistParams& params, ScoreRule rule, double y);

/// Fisher information of the scoring rule at params. The CRPS rule reuses the
/// log-score Fisher as its naturalization metric.
Fisher2 fisher(const DistParams& params, ScoreRule rule);

/// fisher(params, rule)^-1 * grad(params, rule, y).
Grad2 natural_grad(const DistParams& params, ScoreRule rule, double y);

/// Central interval at the Normal k-sigma coverage level. Normal: mu +- k*sigma;
/// Laplace: the quantile interval with the same total coverage erf(k/sqrt(2)).
std::pair<double, double> interval(const DistParams& params, double k_sigma);

/// Cumulative distribution function.
double cdf(const DistParams& params, double y);

/// Probability density function.
double pdf(const DistParams& params, double y);

/// Closed-form continuous ranked probability score (same value as
/// score(params, Crps, y); exposed for metrics).
double crps(const DistParams& params, double y);

/// Two-sided coverage of the k-sigma Normal interval: erf(k/sqrt(2)).
double coverage_from_k(double k_sigma);

/// Inverse of coverage_from_k: the k with erf(k/sqrt(2)) = coverage.
double k_from_coverage(double coverage);

/// Standard normal quantile (rational approximation + one Halley step).
double normal_quantile(double p);

}  // namespace pvcast
