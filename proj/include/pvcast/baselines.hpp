#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pvcast/dataset.hpp"
#include "pvcast/dists.hpp"
#include "pvcast/matrix.hpp"

namespace pvcast {

/// Yesterday's power at the same time of day; falls back to the nearest
/// earlier same-time value within 7 days, then errors.
double persistence_forecast(const RawSeries& series, Minutes t);

// ---------------------------------------------------------------------------
// Gaussian process regression
// ---------------------------------------------------------------------------

enum class KernelKind { RBF, RQ, Periodic, SumRQPer, ProductRQPer };

/// Hyperparameters of one primitive kernel, log-parametrized so positivity
/// never needs clamping. log_alpha is RQ-only, log_period Periodic-only.
///
/// The default period (e^2.5 ~ 12) is large relative to typical standardized
/// feature distances; a short period makes sin(pi*r/p) oscillate across pairs
/// and the resulting matrix is usually indefinite beyond what jitter can fix.
struct KernelParams {
    double log_var = 0.0;
    double log_length = 0.0;
    double log_alpha = 0.0;
    double log_period = 2.5;
};

struct KernelSpec {
    KernelKind kind = KernelKind::RBF;
    KernelParams a;  // the RBF/RQ component (or the Periodic when kind==Periodic)
    KernelParams b;  // the Periodic component of Sum/Product composites
    double noise_variance = 1e-2;
};

double kernel_eval(const KernelSpec& spec, std::span<const double> xi,
                   std::span<const double> xj);

struct GpSettings {
    int adam_steps = 500;
    double adam_lr = 0.01;
    std::size_t max_rows = 5000;  // exact solve is cubic; newest rows kept
};

struct Scaler {
    std::vector<double> mean;
    std::vector<double> std;
};

struct GpModel {
    KernelSpec kernel;
    Matrix X;  // standardized training inputs
    std::vector<double> y_std_units;  // standardized targets
    Scaler x_scaler;
    double y_mean = 0.0;
    double y_std = 1.0;
    std::vector<double> chol;   // lower Cholesky factor of K, row-major
    std::vector<double> alpha;  // K^-1 y (standardized units)
    double jitter = 0.0;        // extra diagonal needed for the factorization
    bool truncated = false;     // max_rows cut applied
    std::vector<double> nlml_trace;  // negative log marginal likelihood per step
};

/// Optimizes the log hyperparameters (and log noise) by Adam on the negative
/// log marginal likelihood, then caches the final factorization. Targets are
/// standardized internally (prior mean 0); features standardized as well.
GpModel gp_fit(const Dataset& data, const KernelSpec& spec, const GpSettings& settings);

/// Predictive Normal at x*, in target units, noise variance included.
DistParams gp_predict(const GpModel& model, std::span<const double> x);

/// Rebuilds the cached factorization from stored inputs (used after loading).
void gp_refactorize(GpModel& model);

// ---------------------------------------------------------------------------
// LUBE interval network
// ---------------------------------------------------------------------------

/// Single tanh hidden layer, two linear outputs; the lower/upper ordering is
/// enforced by sorting the two outputs.
struct LubeNet {
    int input_dim = 0;
    int hidden = 20;
    std::vector<double> weights;  // w1 (hidden x input), b1, w2 (2 x hidden), b2
    Scaler x_scaler;
};

struct AnnealSchedule {
    double t0 = -1.0;  // <= 0 means: start at the initial cost
    double cooling = 0.95;
    int iters_per_temp = 200;
    double step = 0.2;
    double stop_fraction = 1e-4;  // stop once T < stop_fraction * T0
    std::uint64_t seed = 1;
};

void lube_bounds(const LubeNet& net, std::span<const double> x, double* lower,
                 double* upper);

/// Coverage-width criterion over a dataset: PINAW * (1 + gamma * exp(-eta *
/// (PICP - mu_conf))). Training mode keeps the penalty term always on;
/// evaluation mode applies it only when coverage falls short.
double lube_cost(const LubeNet& net, const Matrix& X, std::span<const double> y,
                 double mu_conf, double eta_pen, bool training_mode);

/// Simulated annealing over the flattened weights: Gaussian single-weight
/// proposals, Metropolis acceptance, geometric cooling; returns the best net
/// seen. best_cost_trace (one entry per temperature level, training-mode cost)
/// is non-increasing by construction.
LubeNet lube_train(const Dataset& data, int width, double mu_conf, double eta_pen,
                   const AnnealSchedule& schedule,
                   std::vector<double>* best_cost_trace = nullptr);

}  // namespace pvcast
