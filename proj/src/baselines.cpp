#include "pvcast/baselines.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pvcast/errors.hpp"
#include "pvcast/util.hpp"

namespace pvcast {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kLog2PiHalf = 0.918938533204672741780329736405617630;

}  // namespace

double persistence_forecast(const RawSeries& series, Minutes t) {
    for (int days_back = 1; days_back <= 7; ++days_back) {
        const Minutes src = t - days_back * kMinutesPerDay;
        const auto it = std::lower_bound(series.timestamps.begin(),
                                         series.timestamps.end(), src);
        if (it == series.timestamps.end() || *it != src) continue;
        const double value =
            series.power[static_cast<std::size_t>(it - series.timestamps.begin())];
        if (std::isnan(value)) continue;
        return value;
    }
    throw DataError("persistence: no same-time-of-day power value within 7 days before " +
                    format_timestamp(t));
}

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

namespace {

// Number of free kernel parameters (noise excluded) in packed order.
int kernel_param_count(KernelKind kind) {
    switch (kind) {
        case KernelKind::RBF: return 2;
        case KernelKind::RQ: return 3;
        case KernelKind::Periodic: return 3;
        case KernelKind::SumRQPer:
        case KernelKind::ProductRQPer: return 6;
    }
    throw DataError("gp: unknown kernel kind");
}

void pack_kernel(const KernelSpec& spec, std::vector<double>& out) {
    out.clear();
    switch (spec.kind) {
        case KernelKind::RBF:
            out = {spec.a.log_var, spec.a.log_length};
            break;
        case KernelKind::RQ:
            out = {spec.a.log_var, spec.a.log_length, spec.a.log_alpha};
            break;
        case KernelKind::Periodic:
            out = {spec.a.log_var, spec.a.log_length, spec.a.log_period};
            break;
        case KernelKind::SumRQPer:
        case KernelKind::ProductRQPer:
            out = {spec.a.log_var, spec.a.log_length, spec.a.log_alpha,
                   spec.b.log_var, spec.b.log_length, spec.b.log_period};
            break;
    }
    out.push_back(std::log(spec.noise_variance));
}

void unpack_kernel(const std::vector<double>& packed, KernelSpec& spec) {
    switch (spec.kind) {
        case KernelKind::RBF:
            spec.a.log_var = packed[0];
            spec.a.log_length = packed[1];
            break;
        case KernelKind::RQ:
            spec.a.log_var = packed[0];
            spec.a.log_length = packed[1];
            spec.a.log_alpha = packed[2];
            break;
        case KernelKind::Periodic:
            spec.a.log_var = packed[0];
            spec.a.log_length = packed[1];
            spec.a.log_period = packed[2];
            break;
        case KernelKind::SumRQPer:
        case KernelKind::ProductRQPer:
            spec.a.log_var = packed[0];
            spec.a.log_length = packed[1];
            spec.a.log_alpha = packed[2];
            spec.b.log_var = packed[3];
            spec.b.log_length = packed[4];
            spec.b.log_period = packed[5];
            break;
    }
    spec.noise_variance = std::exp(packed.back());
}

// Covariance value and its derivatives with respect to the packed log
// parameters, for one pair at squared distance r2.
struct PairEval {
    double value = 0.0;
    double d[6] = {0, 0, 0, 0, 0, 0};
};

void eval_rbf(double r2, double log_var, double log_length, double* value,
              double* d_log_var, double* d_log_length) {
    const double v = std::exp(log_var);
    const double l2 = std::exp(2.0 * log_length);
    const double c = v * std::exp(-0.5 * r2 / l2);
    *value = c;
    *d_log_var = c;
    *d_log_length = c * r2 / l2;
}

void eval_rq(double r2, double log_var, double log_length, double log_alpha,
             double* value, double* d_log_var, double* d_log_length,
             double* d_log_alpha) {
    const double v = std::exp(log_var);
    const double l2 = std::exp(2.0 * log_length);
    const double al = std::exp(log_alpha);
    const double q = 0.5 * r2 / (al * l2);
    const double u = 1.0 + q;
    const double c = v * std::pow(u, -al);
    *value = c;
    *d_log_var = c;
    *d_log_length = c * (r2 / l2) / u;
    *d_log_alpha = c * al * (q / u - std::log(u));
}

void eval_periodic(double r2, double log_var, double log_length, double log_period,
                   double* value, double* d_log_var, double* d_log_length,
                   double* d_log_period) {
    const double v = std::exp(log_var);
    const double l2 = std::exp(2.0 * log_length);
    const double p = std::exp(log_period);
    const double r = std::sqrt(r2);
    const double arg = kPi * r / p;
    const double s = std::sin(arg);
    const double c = v * std::exp(-2.0 * s * s / l2);
    *value = c;
    *d_log_var = c;
    *d_log_length = c * 4.0 * s * s / l2;
    *d_log_period = c * (2.0 * kPi * r / (l2 * p)) * std::sin(2.0 * arg);
}

PairEval eval_pair(KernelKind kind, const std::vector<double>& packed, double r2) {
    PairEval out;
    switch (kind) {
        case KernelKind::RBF:
            eval_rbf(r2, packed[0], packed[1], &out.value, &out.d[0], &out.d[1]);
            break;
        case KernelKind::RQ:
            eval_rq(r2, packed[0], packed[1], packed[2], &out.value, &out.d[0],
                    &out.d[1], &out.d[2]);
            break;
        case KernelKind::Periodic:
            eval_periodic(r2, packed[0], packed[1], packed[2], &out.value, &out.d[0],
                          &out.d[1], &out.d[2]);
            break;
        case KernelKind::SumRQPer: {
            PairEval pa, pb;
            eval_rq(r2, packed[0], packed[1], packed[2], &pa.value, &pa.d[0],
                    &pa.d[1], &pa.d[2]);
            eval_periodic(r2, packed[3], packed[4], packed[5], &pb.value, &pb.d[0],
                          &pb.d[1], &pb.d[2]);
            out.value = pa.value + pb.value;
            for (int k = 0; k < 3; ++k) {
                out.d[k] = pa.d[k];
                out.d[3 + k] = pb.d[k];
            }
            break;
        }
        case KernelKind::ProductRQPer: {
            PairEval pa, pb;
            eval_rq(r2, packed[0], packed[1], packed[2], &pa.value, &pa.d[0],
                    &pa.d[1], &pa.d[2]);
            eval_periodic(r2, packed[3], packed[4], packed[5], &pb.value, &pb.d[0],
                          &pb.d[1], &pb.d[2]);
            out.value = pa.value * pb.value;
            for (int k = 0; k < 3; ++k) {
                out.d[k] = pa.d[k] * pb.value;
                out.d[3 + k] = pa.value * pb.d[k];
            }
            break;
        }
    }
    return out;
}

double squared_distance(std::span<const double> xi, std::span<const double> xj) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < xi.size(); ++k) {
        const double d = xi[k] - xj[k];
        r2 += d * d;
    }
    return r2;
}

Scaler fit_scaler(const Matrix& x) {
    Scaler s;
    s.mean.resize(x.cols());
    s.std.resize(x.cols());
    std::vector<double> column(x.rows());
    for (std::size_t c = 0; c < x.cols(); ++c) {
        for (std::size_t r = 0; r < x.rows(); ++r) column[r] = x(r, c);
        s.mean[c] = mean_of(column);
        const double sd = population_std(column);
        s.std[c] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
}

void apply_scaler(const Scaler& s, std::span<const double> x, double* out) {
    for (std::size_t c = 0; c < x.size(); ++c) out[c] = (x[c] - s.mean[c]) / s.std[c];
}

// Cholesky of K + jitter*I with escalating jitter; throws once 1e-4 fails.
struct Factorization {
    Eigen::MatrixXd chol;  // lower
    double jitter = 0.0;
};

Factorization factorize(const Eigen::MatrixXd& k) {
    static const double kJitters[] = {0.0, 1e-10, 1e-8, 1e-6, 1e-4};
    const auto m = k.rows();
    for (const double jitter : kJitters) {
        Eigen::MatrixXd shifted = k;
        if (jitter > 0.0) shifted.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(shifted);
        if (llt.info() == Eigen::Success) {
            Factorization out;
            out.chol = llt.matrixL();
            out.jitter = jitter;
            return out;
        }
        (void)m;
    }
    throw NumericalError("gp: covariance matrix not positive definite even with jitter 1e-4");
}

struct Objective {
    double value = 0.0;
    std::vector<double> grad;
    double jitter = 0.0;
};

// Negative log marginal likelihood and its gradient in the packed log
// parameters (kernel params followed by log noise variance). r2 holds the
// precomputed pairwise squared distances, row-major m x m.
Objective nlml(const Matrix& x, const std::vector<double>& y,
               const std::vector<double>& r2, KernelKind kind,
               const std::vector<double>& packed, bool want_grad) {
    const auto m = static_cast<Eigen::Index>(x.rows());
    const int nk = kernel_param_count(kind);
    const double noise = std::exp(packed.back());

    Eigen::MatrixXd k(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i; j < m; ++j) {
            const double value =
                eval_pair(kind, packed, r2[static_cast<std::size_t>(i) * x.rows() + j]).value;
            k(i, j) = value;
            k(j, i) = value;
        }
        k(i, i) += noise;
    }

    Factorization fac = factorize(k);
    Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), m);
    Eigen::VectorXd alpha = fac.chol.triangularView<Eigen::Lower>().solve(yv);
    fac.chol.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha);

    Objective out;
    out.jitter = fac.jitter;
    out.value = 0.5 * yv.dot(alpha) + fac.chol.diagonal().array().log().sum() +
                static_cast<double>(m) * kLog2PiHalf;
    if (!want_grad) return out;

    // dNLML/dtheta = 0.5 tr((K^-1 - alpha alpha^T) dK/dtheta)
    Eigen::MatrixXd kinv = Eigen::MatrixXd::Identity(m, m);
    fac.chol.triangularView<Eigen::Lower>().solveInPlace(kinv);
    fac.chol.triangularView<Eigen::Lower>().transpose().solveInPlace(kinv);

    out.grad.assign(static_cast<std::size_t>(nk) + 1, 0.0);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i; j < m; ++j) {
            const PairEval pe =
                eval_pair(kind, packed, r2[static_cast<std::size_t>(i) * x.rows() + j]);
            const double w = (i == j ? 0.5 : 1.0) * (kinv(i, j) - alpha(i) * alpha(j));
            for (int p = 0; p < nk; ++p) out.grad[static_cast<std::size_t>(p)] += w * pe.d[p];
        }
    }
    out.grad.back() = 0.5 * noise * (kinv.trace() - alpha.squaredNorm());
    return out;
}

void cache_factorization(GpModel& model) {
    const auto m = static_cast<Eigen::Index>(model.X.rows());
    std::vector<double> packed;
    pack_kernel(model.kernel, packed);
    Eigen::MatrixXd k(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i; j < m; ++j) {
            const double value = kernel_eval(model.kernel, model.X.row(static_cast<std::size_t>(i)),
                                             model.X.row(static_cast<std::size_t>(j)));
            k(i, j) = value;
            k(j, i) = value;
        }
        k(i, i) += model.kernel.noise_variance;
    }
    Factorization fac = factorize(k);
    model.jitter = fac.jitter;

    Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(model.y_std_units.data(), m);
    Eigen::VectorXd alpha = fac.chol.triangularView<Eigen::Lower>().solve(yv);
    fac.chol.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha);

    model.chol.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            model.chol[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                       static_cast<std::size_t>(j)] = fac.chol(i, j);
    model.alpha.assign(alpha.data(), alpha.data() + m);
}

}  // namespace

double kernel_eval(const KernelSpec& spec, std::span<const double> xi,
                   std::span<const double> xj) {
    if (xi.size() != xj.size()) throw DataError("kernel_eval: dimension mismatch");
    std::vector<double> packed;
    pack_kernel(spec, packed);
    return eval_pair(spec.kind, packed, squared_distance(xi, xj)).value;
}

GpModel gp_fit(const Dataset& data, const KernelSpec& spec, const GpSettings& settings) {
    if (data.X.rows() < 2) throw DataError("gp: need at least 2 training rows");
    if (data.X.cols() == 0) throw DataError("gp: need at least one feature");
    if (!(spec.noise_variance > 0.0)) throw DataError("gp: noise variance must be positive");
    if (settings.adam_steps < 0) throw DataError("gp: negative step count");
    if (settings.max_rows < 2) throw DataError("gp: max_rows must be at least 2");

    GpModel model;
    model.kernel = spec;

    // Exact inference is cubic in the row count, so keep only the most recent
    // rows when the training set is too large.
    std::size_t rows = data.X.rows();
    std::size_t first = 0;
    if (rows > settings.max_rows) {
        first = rows - settings.max_rows;
        rows = settings.max_rows;
        model.truncated = true;
    }

    Matrix raw(rows, data.X.cols());
    std::vector<double> y(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto src = data.X.row(first + r);
        std::copy(src.begin(), src.end(), raw.row(r).begin());
        y[r] = data.y[first + r];
    }

    model.x_scaler = fit_scaler(raw);
    model.X = Matrix(rows, raw.cols());
    for (std::size_t r = 0; r < rows; ++r)
        apply_scaler(model.x_scaler, raw.row(r), model.X.row(r).data());

    model.y_mean = mean_of(y);
    const double sd = population_std(y);
    model.y_std = sd > 1e-12 ? sd : 1.0;
    model.y_std_units.resize(rows);
    for (std::size_t r = 0; r < rows; ++r)
        model.y_std_units[r] = (y[r] - model.y_mean) / model.y_std;

    // Pairwise squared distances are parameter independent; compute them once.
    std::vector<double> r2(rows * rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = i + 1; j < rows; ++j) {
            const double d2 = squared_distance(model.X.row(i), model.X.row(j));
            r2[i * rows + j] = d2;
            r2[j * rows + i] = d2;
        }
    }

    std::vector<double> packed;
    pack_kernel(model.kernel, packed);

    const std::size_t np = packed.size();
    std::vector<double> m1(np, 0.0), m2(np, 0.0);
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    for (int step = 1; step <= settings.adam_steps; ++step) {
        const Objective obj = nlml(model.X, model.y_std_units, r2, model.kernel.kind,
                                   packed, /*want_grad=*/true);
        if (!std::isfinite(obj.value))
            throw NumericalError("gp: non-finite marginal likelihood during optimization");
        model.nlml_trace.push_back(obj.value);
        for (std::size_t p = 0; p < np; ++p) {
            m1[p] = beta1 * m1[p] + (1.0 - beta1) * obj.grad[p];
            m2[p] = beta2 * m2[p] + (1.0 - beta2) * obj.grad[p] * obj.grad[p];
            const double mhat = m1[p] / (1.0 - std::pow(beta1, step));
            const double vhat = m2[p] / (1.0 - std::pow(beta2, step));
            packed[p] -= settings.adam_lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
    unpack_kernel(packed, model.kernel);

    const Objective final_obj =
        nlml(model.X, model.y_std_units, r2, model.kernel.kind, packed, /*want_grad=*/false);
    model.nlml_trace.push_back(final_obj.value);

    cache_factorization(model);
    return model;
}

void gp_refactorize(GpModel& model) {
    if (model.X.rows() == 0 || model.X.rows() != model.y_std_units.size())
        throw DataError("gp: inconsistent stored training data");
    cache_factorization(model);
}

DistParams gp_predict(const GpModel& model, std::span<const double> x) {
    const std::size_t m = model.X.rows();
    if (x.size() != model.X.cols()) throw DataError("gp: feature count mismatch");
    if (model.alpha.size() != m) throw DataError("gp: model has no cached factorization");

    std::vector<double> xs(x.size());
    apply_scaler(model.x_scaler, x, xs.data());

    std::vector<double> kstar(m);
    for (std::size_t i = 0; i < m; ++i)
        kstar[i] = kernel_eval(model.kernel, xs, model.X.row(i));

    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean += kstar[i] * model.alpha[i];

    // v = L^-1 k*; latent variance = k(x,x) - |v|^2, floored at zero.
    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i) {
        double acc = kstar[i];
        const double* row = model.chol.data() + i * m;
        for (std::size_t j = 0; j < i; ++j) acc -= row[j] * v[j];
        v[i] = acc / row[i];
    }
    double vnorm2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) vnorm2 += v[i] * v[i];

    const double kself = kernel_eval(model.kernel, xs, xs);
    const double latent = std::max(kself - vnorm2, 0.0);
    const double variance = latent + model.kernel.noise_variance;

    DistParams out;
    out.family = Family::Normal;
    out.mu = model.y_mean + model.y_std * mean;
    out.log_scale = std::log(std::max(model.y_std * std::sqrt(variance), 1e-12));
    return out;
}

// ---------------------------------------------------------------------------
// LUBE
// ---------------------------------------------------------------------------

namespace {

std::size_t lube_weight_count(int input_dim, int hidden) {
    return static_cast<std::size_t>(hidden) * static_cast<std::size_t>(input_dim + 3) + 2;
}

// Forward pass on an already standardized input.
void lube_forward(const LubeNet& net, const double* xs, double* lower, double* upper) {
    const int d = net.input_dim;
    const int h = net.hidden;
    const double* w1 = net.weights.data();
    const double* b1 = w1 + static_cast<std::size_t>(h) * d;
    const double* w2 = b1 + h;
    const double* b2 = w2 + 2 * static_cast<std::size_t>(h);
    double o0 = b2[0];
    double o1 = b2[1];
    for (int j = 0; j < h; ++j) {
        double a = b1[j];
        const double* row = w1 + static_cast<std::size_t>(j) * d;
        for (int i = 0; i < d; ++i) a += row[i] * xs[i];
        const double act = std::tanh(a);
        o0 += w2[j] * act;
        o1 += w2[h + j] * act;
    }
    *lower = std::min(o0, o1);
    *upper = std::max(o0, o1);
}

// Cost on feature rows standardized up front; r is the normalizing range.
double lube_cost_standardized(const LubeNet& net, const Matrix& xs,
                              std::span<const double> y, double r, double mu_conf,
                              double eta_pen, bool training_mode) {
    const std::size_t m = xs.rows();
    std::size_t covered = 0;
    double width_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double lo, hi;
        lube_forward(net, xs.row(i).data(), &lo, &hi);
        if (lo <= y[i] && y[i] <= hi) ++covered;
        width_sum += hi - lo;
    }
    const double picp = static_cast<double>(covered) / static_cast<double>(m);
    const double pinaw = width_sum / (static_cast<double>(m) * r);
    const double gamma = (training_mode || picp < mu_conf) ? 1.0 : 0.0;
    return pinaw * (1.0 + gamma * std::exp(-eta_pen * (picp - mu_conf)));
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

void lube_bounds(const LubeNet& net, std::span<const double> x, double* lower,
                 double* upper) {
    if (x.size() != static_cast<std::size_t>(net.input_dim))
        throw DataError("lube: feature count mismatch");
    if (net.weights.size() != lube_weight_count(net.input_dim, net.hidden))
        throw DataError("lube: weight vector size mismatch");
    std::vector<double> xs(x.size());
    apply_scaler(net.x_scaler, x, xs.data());
    lube_forward(net, xs.data(), lower, upper);
}

double lube_cost(const LubeNet& net, const Matrix& x, std::span<const double> y,
                 double mu_conf, double eta_pen, bool training_mode) {
    if (x.rows() == 0 || x.rows() != y.size())
        throw DataError("lube: empty data or size mismatch");
    const double r = *std::max_element(y.begin(), y.end());
    if (!(r > 0.0)) throw DataError("lube: target range must be positive");
    Matrix xs(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        apply_scaler(net.x_scaler, x.row(i), xs.row(i).data());
    return lube_cost_standardized(net, xs, y, r, mu_conf, eta_pen, training_mode);
}

LubeNet lube_train(const Dataset& data, int width, double mu_conf, double eta_pen,
                   const AnnealSchedule& schedule, std::vector<double>* best_cost_trace) {
    if (data.X.rows() < 2) throw DataError("lube: need at least 2 training rows");
    if (width < 1) throw DataError("lube: hidden width must be positive");
    if (!(mu_conf > 0.0 && mu_conf < 1.0))
        throw DataError("lube: confidence must lie in (0, 1)");

    const std::size_t m = data.X.rows();
    const int d = static_cast<int>(data.X.cols());

    LubeNet net;
    net.input_dim = d;
    net.hidden = width;
    net.x_scaler = fit_scaler(data.X);
    net.weights.assign(lube_weight_count(d, width), 0.0);

    Matrix xs(m, data.X.cols());
    for (std::size_t i = 0; i < m; ++i)
        apply_scaler(net.x_scaler, data.X.row(i), xs.row(i).data());

    const double r = *std::max_element(data.y.begin(), data.y.end());
    if (!(r > 0.0)) throw DataError("lube: target range must be positive");

    Rng rng(schedule.seed);
    const std::size_t nw = net.weights.size();
    const std::size_t w1_end = static_cast<std::size_t>(width) * d;
    const std::size_t b1_end = w1_end + static_cast<std::size_t>(width);
    const std::size_t w2_end = b1_end + 2 * static_cast<std::size_t>(width);
    const double w1_scale = 1.0 / std::sqrt(static_cast<double>(d));
    const double w2_scale = 0.5 / std::sqrt(static_cast<double>(width));
    for (std::size_t i = 0; i < w1_end; ++i) net.weights[i] = w1_scale * rng.normal();
    for (std::size_t i = w1_end; i < b1_end; ++i) net.weights[i] = 0.1 * rng.normal();
    for (std::size_t i = b1_end; i < w2_end; ++i) net.weights[i] = w2_scale * rng.normal();
    std::vector<double> sorted_y(data.y);
    std::sort(sorted_y.begin(), sorted_y.end());
    net.weights[w2_end] = quantile_sorted(sorted_y, 0.25);
    net.weights[w2_end + 1] = quantile_sorted(sorted_y, 0.75);

    double current = lube_cost_standardized(net, xs, data.y, r, mu_conf, eta_pen, true);
    std::vector<double> best_weights = net.weights;
    double best = current;
    if (best_cost_trace) {
        best_cost_trace->clear();
        best_cost_trace->push_back(best);
    }

    const double t0 = schedule.t0 > 0.0 ? schedule.t0 : current;
    if (t0 > 0.0 && schedule.iters_per_temp > 0) {
        double temp = t0;
        while (temp >= schedule.stop_fraction * t0) {
            for (int it = 0; it < schedule.iters_per_temp; ++it) {
                const std::size_t idx =
                    static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(nw) - 1));
                const double old = net.weights[idx];
                net.weights[idx] = old + schedule.step * rng.normal();
                const double proposed =
                    lube_cost_standardized(net, xs, data.y, r, mu_conf, eta_pen, true);
                const double delta = proposed - current;
                const bool accept =
                    delta <= 0.0 || rng.uniform() < std::exp(-delta / temp);
                if (accept) {
                    current = proposed;
                    if (proposed < best) {
                        best = proposed;
                        best_weights = net.weights;
                    }
                } else {
                    net.weights[idx] = old;
                }
            }
            if (best_cost_trace) best_cost_trace->push_back(best);
            temp *= schedule.cooling;
        }
    }

    net.weights = std::move(best_weights);
    return net;
}

}  // namespace pvcast
