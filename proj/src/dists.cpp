#include "pvcast/dists.hpp"

#include <cmath>

#include "pvcast/errors.hpp"

namespace pvcast {

namespace {

constexpr double kHalfLog2Pi = 0.918938533204672741780329736406;  // log(2*pi)/2
constexpr double kLog2 = 0.693147180559945309417232121458;
constexpr double kInvSqrtPi = 0.564189583547756286948079451561;   // 1/sqrt(pi)
constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;  // 1/sqrt(2*pi)
constexpr double kInvSqrt2 = 0.707106781186547524400844362105;    // 1/sqrt(2)

double std_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
double std_normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

double score(const DistParams& params, ScoreRule rule, double y) {
    const double s = params.scale();
    if (rule == ScoreRule::LogScore) {
        if (params.family == Family::Normal) {
            const double z = (y - params.mu) / s;
            return params.log_scale + 0.5 * z * z + kHalfLog2Pi;
        }
        return params.log_scale + std::abs(y - params.mu) / s + kLog2;
    }
    return crps(params, y);
}

double crps(const DistParams& params, double y) {
    const double s = params.scale();
    const double z = (y - params.mu) / s;
    if (params.family == Family::Normal)
        return s * (z * (2.0 * std_normal_cdf(z) - 1.0) + 2.0 * std_normal_pdf(z) - kInvSqrtPi);
    const double az = std::abs(z);
    return s * (az + std::exp(-az) - 0.75);
}

Grad2 grad(const DistParams& params, ScoreRule rule, double y) {
    const double s = params.scale();
    if (rule == ScoreRule::LogScore) {
        if (params.family == Family::Normal) {
            const double d = y - params.mu;
            return {(params.mu - y) / (s * s), 1.0 - (d * d) / (s * s)};
        }
        // Laplace: subgradient 0 for the location term at the kink y == mu.
        const double d = y - params.mu;
        return {-sign(d) / s, 1.0 - std::abs(d) / s};
    }
    const double z = (y - params.mu) / s;
    if (params.family == Family::Normal) {
        return {-(2.0 * std_normal_cdf(z) - 1.0),
                s * (2.0 * std_normal_pdf(z) - kInvSqrtPi)};
    }
    const double az = std::abs(z);
    const double e = std::exp(-az);
    return {-sign(z) * (1.0 - e), s * (e * (1.0 + az) - 0.75)};
}

Fisher2 fisher(const DistParams& params, ScoreRule /*rule*/) {
    // The CRPS rule reuses the log-score Fisher as its metric.
    const double s = params.scale();
    if (params.family == Family::Normal)
        return {1.0 / (s * s), 0.0, 0.0, 2.0};
    return {1.0 / (s * s), 0.0, 0.0, 1.0};
}

Grad2 natural_grad(const DistParams& params, ScoreRule rule, double y) {
    const Grad2 g = grad(params, rule, y);
    const Fisher2 f = fisher(params, rule);
    if (f.m01 == 0.0 && f.m10 == 0.0)
        return {g.d_mu / f.m00, g.d_log_scale / f.m11};
    const double det = f.m00 * f.m11 - f.m01 * f.m10;
    return {(f.m11 * g.d_mu - f.m01 * g.d_log_scale) / det,
            (f.m00 * g.d_log_scale - f.m10 * g.d_mu) / det};
}

std::pair<double, double> interval(const DistParams& params, double k_sigma) {
    if (!(k_sigma > 0.0))
        throw DataError("interval: k_sigma must be positive");
    const double s = params.scale();
    if (params.family == Family::Normal)
        return {params.mu - k_sigma * s, params.mu + k_sigma * s};
    // Equal-coverage central interval: P(|Y - mu| < w) = c with c = erf(k/sqrt 2)
    // gives w = b * log(1/(1-c)) for the Laplace.
    const double c = coverage_from_k(k_sigma);
    const double w = s * -std::log1p(-c);
    return {params.mu - w, params.mu + w};
}

double cdf(const DistParams& params, double y) {
    const double s = params.scale();
    if (params.family == Family::Normal)
        return std_normal_cdf((y - params.mu) / s);
    const double z = (y - params.mu) / s;
    return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
}

double pdf(const DistParams& params, double y) {
    const double s = params.scale();
    if (params.family == Family::Normal)
        return std_normal_pdf((y - params.mu) / s) / s;
    return 0.5 * std::exp(-std::abs(y - params.mu) / s) / s;
}

double coverage_from_k(double k_sigma) { return std::erf(k_sigma * kInvSqrt2); }

double k_from_coverage(double coverage) {
    if (!(coverage > 0.0 && coverage < 1.0))
        throw DataError("k_from_coverage: coverage must be in (0,1)");
    return normal_quantile(0.5 * (1.0 + coverage));
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw DataError("normal_quantile: p must be in (0,1)");
    // Acklam's rational approximation, then one Halley refinement.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = std_normal_cdf(x) - p;
    const double u = e / std_normal_pdf(x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

}  // namespace pvcast
