// Acceptance gate: one end-to-end check per shipped guarantee. Each check
// prints exactly one [PASS]/[FAIL] line with the measured numbers; the
// process exits nonzero if any check fails. Unlike the unit suites these
// run the full-size fixtures (large sample counts, default benchmark).

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "pvcast/dataset.hpp"
#include "pvcast/dists.hpp"
#include "pvcast/explain.hpp"
#include "pvcast/metrics.hpp"
#include "pvcast/model_io.hpp"
#include "pvcast/ngboost.hpp"
#include "pvcast/pipeline.hpp"
#include "pvcast/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pvcast;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

struct Outcome {
    bool ok = false;
    std::string detail;
};

Outcome pass(std::string detail) { return {true, std::move(detail)}; }
Outcome fail(std::string detail) { return {false, std::move(detail)}; }

// Hand-built feature table; names and timestamps are filler metadata.
Dataset table(Matrix X, std::vector<double> y) {
    Dataset ds;
    ds.feature_names.reserve(X.cols());
    for (std::size_t d = 0; d < X.cols(); ++d)
        ds.feature_names.push_back("f" + std::to_string(d));
    ds.row_timestamps.reserve(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        ds.row_timestamps.push_back(static_cast<Minutes>(15 * i));
    ds.X = std::move(X);
    ds.y = std::move(y);
    return ds;
}

// ---------------------------------------------------------------------------
// 1. analytic gradients vs central finite differences
// ---------------------------------------------------------------------------

Outcome check_gradients() {
    const auto t0 = Clock::now();
    Rng rng(101);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        DistParams p;
        p.family = (i % 2 == 0) ? Family::Normal : Family::Laplace;
        p.mu = rng.uniform(-5.0, 5.0);
        p.log_scale = rng.uniform(-1.5, 1.5);
        const ScoreRule rule = ((i / 2) % 2 == 0) ? ScoreRule::LogScore : ScoreRule::Crps;
        double offset = rng.uniform(-4.0, 4.0);
        // keep Laplace log-score draws away from the non-differentiable point
        if (p.family == Family::Laplace && std::abs(offset) < 1e-2)
            offset += offset < 0.0 ? -0.05 : 0.05;
        const double y = p.mu + p.scale() * offset;

        const Grad2 analytic = grad(p, rule, y);
        const Grad2 fd = oracles::fd_grad(p, rule, y);
        worst = std::max(worst, std::abs(analytic.d_mu - fd.d_mu));
        worst = std::max(worst, std::abs(analytic.d_log_scale - fd.d_log_scale));
    }
    const double secs = seconds_since(t0);
    if (worst > 1e-5) return fail("max |analytic - fd| = " + num(worst));
    if (secs >= 5.0) return fail("took " + num(secs) + "s, budget 5s");
    return pass("max diff " + num(worst) + " over 1000 draws");
}

// ---------------------------------------------------------------------------
// 2. natural gradients vs closed forms
// ---------------------------------------------------------------------------

Outcome check_natural_gradient() {
    Rng rng(202);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        DistParams p;
        p.mu = rng.uniform(-5.0, 5.0);
        p.log_scale = rng.uniform(-1.5, 1.5);
        const double y = p.mu + p.scale() * rng.uniform(-4.0, 4.0);

        const Grad2 natural = natural_grad(p, ScoreRule::LogScore, y);
        const double z = (y - p.mu) / p.scale();
        worst = std::max(worst, std::abs(natural.d_mu - (p.mu - y)));
        worst = std::max(worst, std::abs(natural.d_log_scale - 0.5 * (1.0 - z * z)));
    }
    if (worst > 1e-12) return fail("max deviation from closed form = " + num(worst));
    return pass("max diff " + num(worst) + " at 100 points");
}

// ---------------------------------------------------------------------------
// 3. Monte-Carlo Fisher information vs closed form
// ---------------------------------------------------------------------------

Outcome check_fisher_monte_carlo() {
    const DistParams cases[] = {
        {Family::Normal, 0.0, 0.0},
        {Family::Normal, 2.5, std::log(0.4)},
        {Family::Normal, -1.0, std::log(3.0)},
    };
    double worst = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const DistParams& p = cases[i];
        const Fisher2 mc =
            oracles::mc_fisher(p, ScoreRule::LogScore, 1'000'000, 3000 + i);
        const double sigma2 = p.scale() * p.scale();
        worst = std::max(worst, std::abs(mc.m00 * sigma2 - 1.0));
        worst = std::max(worst, std::abs(mc.m11 / 2.0 - 1.0));
        // off-diagonal is exactly zero; allow Monte-Carlo noise at the same scale
        if (std::abs(mc.m01) > 0.01 * std::sqrt(2.0) / p.scale())
            return fail("off-diagonal " + num(mc.m01) + " too large at sigma " +
                        num(p.scale()));
    }
    if (worst > 1e-2) return fail("max relative diagonal error = " + num(worst));
    return pass("max relative error " + num(worst) + " over 3 parameter sets");
}

// ---------------------------------------------------------------------------
// 4. closed-form CRPS vs adaptive quadrature
// ---------------------------------------------------------------------------

Outcome check_crps_closed_form() {
    Rng rng(404);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        DistParams p;
        p.family = (i % 2 == 0) ? Family::Normal : Family::Laplace;
        p.mu = rng.uniform(-3.0, 3.0);
        p.log_scale = rng.uniform(-1.0, 1.0);
        const double y = p.mu + p.scale() * rng.uniform(-3.0, 3.0);

        const double closed = crps(p, y);
        const double quad = oracles::crps_quadrature(p, y);
        worst = std::max(worst, std::abs(closed - quad) / std::abs(closed));
    }
    const DistParams unit{Family::Normal, 0.0, 0.0};
    const double anchor = std::abs(crps(unit, 0.0) - 0.2336950);
    if (worst > 1e-6) return fail("max relative error vs quadrature = " + num(worst));
    if (anchor > 1e-6) return fail("standard normal anchor off by " + num(anchor));
    return pass("max rel diff " + num(worst) + ", anchor off by " + num(anchor));
}

// ---------------------------------------------------------------------------
// 5. staged training score is non-increasing
// ---------------------------------------------------------------------------

// Smooth heteroscedastic regression surface used by several checks below.
Dataset hetero_data(std::uint64_t seed, std::size_t rows) {
    Rng rng(seed);
    Matrix X(rows, 3);
    std::vector<double> y(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t d = 0; d < 3; ++d) X(i, d) = rng.uniform();
        const double mean = std::sin(2.0 * M_PI * X(i, 0)) + 2.0 * X(i, 1);
        const double sd = 0.25 + 0.75 * X(i, 2);
        y[i] = mean + sd * rng.normal();
    }
    return table(std::move(X), std::move(y));
}

Outcome check_boosting_monotonicity() {
    double worst_increase = 0.0;
    double worst_secs = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Dataset ds = hetero_data(500 + seed, 2000);
        NgbConfig cfg;
        cfg.n_stages = 200;
        cfg.learning_rate = 0.05;
        cfg.max_depth = 3;

        const auto t0 = Clock::now();
        const NgbModel model = train(ds, cfg);
        worst_secs = std::max(worst_secs, seconds_since(t0));

        const std::vector<double> staged = staged_scores(model, ds);
        for (std::size_t s = 1; s < staged.size(); ++s)
            worst_increase = std::max(worst_increase, staged[s] - staged[s - 1]);
    }
    if (worst_increase > 1e-9)
        return fail("score increased by " + num(worst_increase) + " at some stage");
    if (worst_secs >= 60.0) return fail("slowest fit " + num(worst_secs) + "s, budget 60s");
    return pass("worst stage delta " + num(worst_increase) + ", slowest fit " +
                num(worst_secs) + "s");
}

// ---------------------------------------------------------------------------
// 6. fast SHAP vs exhaustive enumeration
// ---------------------------------------------------------------------------

// Multi-feature target so every column earns splits in a small model.
Dataset mixed_data(std::uint64_t seed, std::size_t rows, std::size_t dims) {
    Rng rng(seed);
    Matrix X(rows, dims);
    std::vector<double> y(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t d = 0; d < dims; ++d) X(i, d) = rng.uniform();
        double v = 0.3 * rng.normal();
        for (std::size_t d = 0; d < dims; ++d) {
            switch (d % 4) {
                case 0: v += 2.0 * X(i, d); break;
                case 1: v += std::sin(2.0 * M_PI * X(i, d)); break;
                case 2: v -= 1.5 * X(i, d) * X(i, (d + 1) % dims); break;
                case 3: v += X(i, d) * X(i, d); break;
            }
        }
        y[i] = v;
    }
    return table(std::move(X), std::move(y));
}

Outcome check_shap_against_brute_force() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Dataset ds = mixed_data(600 + seed, 300, 6);
        NgbConfig cfg;
        cfg.n_stages = 20;
        cfg.learning_rate = 0.1;
        cfg.max_depth = 3;
        const NgbModel model = train(ds, cfg);

        Rng rng(6600 + seed);
        std::vector<double> x(6);
        for (int probe = 0; probe < 50; ++probe) {
            for (double& v : x) v = rng.uniform();
            for (const Head head : {Head::Mu, Head::Scale}) {
                const Explanation fast = shap_values(model, x, head);
                const Explanation brute = shap_brute_force(model, x, head);
                worst = std::max(worst, std::abs(fast.base_value - brute.base_value));
                for (std::size_t d = 0; d < 6; ++d)
                    worst = std::max(worst, std::abs(fast.phi[d] - brute.phi[d]));

                const InteractionMatrix fi = shap_interactions(model, x, head);
                const InteractionMatrix bi = shap_interactions_brute_force(model, x, head);
                for (std::size_t a = 0; a < 6; ++a)
                    for (std::size_t b = 0; b < 6; ++b)
                        worst = std::max(worst, std::abs(fi.phi(a, b) - bi.phi(a, b)));
            }
        }
    }
    const double secs = seconds_since(t0);
    if (worst > 1e-9) return fail("max |fast - brute| = " + num(worst));
    if (secs >= 120.0) return fail("took " + num(secs) + "s, budget 120s");
    return pass("max diff " + num(worst) + " over 10 models x 50 probes, " +
                num(secs) + "s");
}

// ---------------------------------------------------------------------------
// 7. SHAP local accuracy and interaction row sums at full size
// ---------------------------------------------------------------------------

Outcome check_shap_identities() {
    const Dataset ds = mixed_data(700, 2000, 12);
    NgbConfig cfg;
    cfg.n_stages = 500;
    cfg.learning_rate = 0.05;
    cfg.max_depth = 3;
    cfg.min_samples_leaf = 20;
    const NgbModel model = train(ds, cfg);

    Rng rng(707);
    std::vector<double> x(12);
    double worst_local = 0.0;
    double worst_rowsum = 0.0;
    for (int probe = 0; probe < 500; ++probe) {
        for (double& v : x) v = rng.uniform();
        const Head head = (probe % 2 == 0) ? Head::Mu : Head::Scale;
        const auto [raw_mu, raw_log_scale] = predict_raw(model, x);
        const double target = head == Head::Mu ? raw_mu : raw_log_scale;

        const Explanation e = shap_values(model, x, head);
        double total = e.base_value;
        for (const double phi : e.phi) total += phi;
        worst_local = std::max(worst_local, std::abs(total - target));

        const InteractionMatrix m = shap_interactions(model, x, head);
        for (std::size_t a = 0; a < 12; ++a) {
            double row = 0.0;
            for (std::size_t b = 0; b < 12; ++b) row += m.phi(a, b);
            worst_rowsum = std::max(worst_rowsum, std::abs(row - e.phi[a]));
        }
    }
    if (worst_local > 1e-8)
        return fail("local accuracy residual " + num(worst_local));
    if (worst_rowsum > 1e-8)
        return fail("interaction row-sum residual " + num(worst_rowsum));
    return pass("local accuracy " + num(worst_local) + ", row sums " +
                num(worst_rowsum) + " over 500 explanations");
}

// ---------------------------------------------------------------------------
// 8. interval calibration on well-specified heteroscedastic data
// ---------------------------------------------------------------------------

Outcome check_calibration() {
    // Calibration needs the scale head to converge, not just the mean: with
    // too little data the leaf scale estimates track training residuals and
    // intervals come out narrow.
    const Dataset train_ds = hetero_data(801, 20000);
    const Dataset test_ds = hetero_data(802, 5000);

    NgbConfig cfg;
    cfg.n_stages = 200;
    cfg.learning_rate = 0.05;
    cfg.max_depth = 3;
    cfg.min_samples_leaf = 50;
    const NgbModel model = train(train_ds, cfg);

    std::vector<DistParams> dists;
    dists.reserve(test_ds.y.size());
    for (std::size_t i = 0; i < test_ds.y.size(); ++i)
        dists.push_back(predict_dist(model, test_ds.X.row(i)));

    const double k = k_from_coverage(0.9545);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < dists.size(); ++i) {
        const auto [lo, hi] = interval(dists[i], k);
        if (test_ds.y[i] >= lo && test_ds.y[i] <= hi) ++inside;
    }
    const double picp = static_cast<double>(inside) / static_cast<double>(dists.size());

    const PitHistogram pit = pit_histogram(dists, test_ds.y, 20);
    double max_dev = 0.0;
    for (const double d : pit.density) max_dev = std::max(max_dev, std::abs(d - 0.05));

    if (picp < 0.92 || picp > 0.98)
        return fail("95.45% PICP = " + num(picp) + ", want [0.92, 0.98]");
    if (max_dev >= 0.02) return fail("PIT bin deviation " + num(max_dev) + ", want < 0.02");
    return pass("PICP " + num(picp) + ", max PIT deviation " + num(max_dev));
}

// ---------------------------------------------------------------------------
// 9. benchmark direction checks on the default synthetic setup
// ---------------------------------------------------------------------------

Outcome check_benchmark_directions() {
    RunConfig cfg = parse_run_config(json::object());
    cfg.seed = 1;
    cfg.synthetic.seed = 1;

    const RawSeries series = load_or_generate(cfg);
    const BenchResult result = run_bench(series, cfg);

    const auto row = [&](const std::string& name) -> const BenchRow& {
        for (const BenchRow& r : result.rows)
            if (r.model == name) return r;
        throw std::runtime_error("bench row missing: " + name);
    };
    const double ngb_mae = row("ngboost").mean_report.point->mae;
    const double pers_mae = row("persistence").mean_report.point->mae;
    const double ngb_crps = *row("ngboost").mean_report.mean_crps;
    const double gp_crps = *row("gp").mean_report.mean_crps;

    const json bj = bench_json(result, run_config_hash(cfg));
    if (!bj.contains("seed") || bj["seed"].get<std::uint64_t>() != 1)
        return fail("bench output does not record the seed");
    if (!result.ngb_mae_below_persistence)
        return fail("MAE: ngboost " + num(ngb_mae) + " vs persistence " + num(pers_mae));
    if (!result.ngb_crps_below_gp)
        return fail("CRPS: ngboost " + num(ngb_crps) + " vs gp " + num(gp_crps));
    return pass("MAE " + num(ngb_mae) + " < " + num(pers_mae) + ", CRPS " +
                num(ngb_crps) + " < " + num(gp_crps));
}

// ---------------------------------------------------------------------------
// 10. GP reproduces training targets at near-zero noise
// ---------------------------------------------------------------------------

Outcome check_gp_interpolation() {
    // 10 x 20 grid over [0,10]^2: 200 well-separated inputs, so a short
    // lengthscale makes the kernel matrix near-identity and the posterior
    // mean must pass through every target.
    Matrix X(200, 2);
    std::vector<double> y(200);
    for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t jcol = 0; jcol < 20; ++jcol) {
            const std::size_t r = i * 20 + jcol;
            X(r, 0) = 10.0 * static_cast<double>(i) / 9.0;
            X(r, 1) = 10.0 * static_cast<double>(jcol) / 19.0;
            y[r] = std::sin(X(r, 0)) + std::cos(X(r, 1));
        }
    }
    const Dataset ds = table(std::move(X), std::move(y));

    KernelSpec spec;
    spec.kind = KernelKind::RBF;
    spec.a.log_var = 0.0;
    spec.a.log_length = std::log(0.05);
    spec.noise_variance = 1e-8;
    GpSettings settings;
    settings.adam_steps = 0;  // keep the prescribed hyperparameters untouched

    const GpModel model = gp_fit(ds, spec, settings);
    double worst = 0.0;
    for (std::size_t i = 0; i < ds.y.size(); ++i)
        worst = std::max(worst, std::abs(gp_predict(model, ds.X.row(i)).mu - ds.y[i]));
    if (worst > 1e-6) return fail("max |mean - target| = " + num(worst));
    return pass("max |mean - target| = " + num(worst) + " at 200 training inputs");
}

// ---------------------------------------------------------------------------
// 11. LUBE coverage and width on homoscedastic data
// ---------------------------------------------------------------------------

Dataset linear_noise_data(std::uint64_t seed, std::size_t rows) {
    Rng rng(seed);
    Matrix X(rows, 2);
    std::vector<double> y(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        X(i, 0) = rng.uniform();
        X(i, 1) = rng.uniform();
        y[i] = 1.0 + 0.8 * X(i, 0) + 0.3 * X(i, 1) + 0.1 * rng.normal();
    }
    return table(std::move(X), std::move(y));
}

Outcome check_lube() {
    const Dataset train_ds = linear_noise_data(1101, 600);
    const Dataset test_ds = linear_noise_data(1102, 600);

    AnnealSchedule schedule;
    schedule.iters_per_temp = 200;
    schedule.stop_fraction = 1e-3;
    schedule.seed = 7;
    std::vector<double> trace;
    const LubeNet net = lube_train(train_ds, 10, 0.95, 50.0, schedule, &trace);

    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i] > trace[i - 1])
            return fail("best-seen cost rose from " + num(trace[i - 1]) + " to " +
                        num(trace[i]));

    std::vector<double> lower(test_ds.y.size()), upper(test_ds.y.size());
    for (std::size_t i = 0; i < test_ds.y.size(); ++i)
        lube_bounds(net, test_ds.X.row(i), &lower[i], &upper[i]);
    const double range = *std::max_element(test_ds.y.begin(), test_ds.y.end());
    const IntervalMetrics m = interval_metrics(lower, upper, test_ds.y, range);

    if (m.picp < 0.90) return fail("held-out PICP = " + num(m.picp) + ", want >= 0.90");
    if (m.pinaw >= 1.0) return fail("held-out PINAW = " + num(m.pinaw) + ", want < 1");
    return pass("held-out PICP " + num(m.picp) + ", PINAW " + num(m.pinaw) + ", " +
                num(trace.size()) + " cooling steps");
}

// ---------------------------------------------------------------------------
// 12. pruning drops injected noise features
// ---------------------------------------------------------------------------

Outcome check_pruning() {
    // Four driving features plus three pure-noise columns that never enter
    // the target.
    const auto build = [](std::uint64_t seed, std::size_t rows) {
        Rng rng(seed);
        Matrix X(rows, 7);
        std::vector<double> y(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t d = 0; d < 7; ++d) X(i, d) = rng.uniform();
            y[i] = std::sin(2.0 * M_PI * X(i, 0)) + 2.0 * X(i, 1) + 1.5 * X(i, 2) +
                   X(i, 3) * X(i, 3) + 0.3 * rng.normal();
        }
        Dataset ds = table(std::move(X), std::move(y));
        ds.feature_names = {"drive_a", "drive_b", "drive_c", "drive_d",
                            "noise_a", "noise_b", "noise_c"};
        return ds;
    };
    const Dataset train_ds = build(1201, 3000);
    const Dataset test_ds = build(1202, 1000);

    RunConfig cfg;
    cfg.ngb.n_stages = 150;
    cfg.ngb.learning_rate = 0.05;
    cfg.ngb.max_depth = 3;
    cfg.ngb.min_samples_leaf = 20;
    cfg.prune_rows = 1000;

    const NgbModel model = train(train_ds, cfg.ngb);
    const PruneResult result = prune_and_retrain(model, train_ds, test_ds, 0.02, cfg);

    const std::set<std::string> dropped(result.dropped.begin(), result.dropped.end());
    const std::set<std::string> expected = {"noise_a", "noise_b", "noise_c"};
    if (dropped != expected) {
        std::string got;
        for (const std::string& name : result.dropped) got += name + " ";
        return fail("dropped {" + got + "}, expected the three noise columns");
    }
    const double before = *result.before.mean_crps;
    const double after = *result.after.mean_crps;
    if (after > 1.05 * before)
        return fail("CRPS rose from " + num(before) + " to " + num(after));
    return pass("dropped all 3 noise features, CRPS " + num(before) + " -> " +
                num(after));
}

// ---------------------------------------------------------------------------
// 13. bit-exact reruns and save/load round-trips
// ---------------------------------------------------------------------------

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PVCAST_BIN) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Every command of the toolkit, run against one scratch directory. Budgets
// are tiny: determinism does not depend on model quality.
std::vector<std::string> command_battery(const fs::path& dir, const fs::path& cfg_ngb,
                                         const fs::path& cfg_gp) {
    const std::string common = " --seed 9 --out-dir " + dir.string();
    const std::string model = " --model " + (dir / "model.json").string();
    return {
        "generate --config " + cfg_ngb.string() + common,
        "train --config " + cfg_ngb.string() + common + model,
        "evaluate --config " + cfg_ngb.string() + common + model,
        "forecast --config " + cfg_ngb.string() + common + model,
        "explain --config " + cfg_ngb.string() + common + model,
        "grid --config " + cfg_gp.string() + common,
        "prune --config " + cfg_ngb.string() + common,
        "bench --config " + cfg_ngb.string() + common,
    };
}

fs::path write_small_config(const fs::path& dir, const std::string& kind) {
    json cfg{
        {"data", json{{"synthetic", json{{"days", 40}}}, {"lags", json::array({1, 96})}}},
        {"model",
         json{{"kind", kind},
              {"ngboost", json{{"stages", 25}, {"learning_rate", 0.1}}},
              {"gp", json{{"adam_steps", 5}, {"max_rows", 48}}},
              {"lube",
               json{{"neurons", 4}, {"max_rows", 128},
                    {"anneal", json{{"iters_per_temp", 10}, {"stop_fraction", 0.1}}}}}}},
        {"splits", json::array({json{{"train_begin", "2018-01-02T00:00"},
                                     {"train_end", "2018-01-30T00:00"},
                                     {"test_begin", "2018-01-30T00:00"},
                                     {"test_end", "2018-02-06T00:00"}}})},
        {"prune", json{{"rows", 512}}},
        {"bench", json{{"ngb_stages", 25}, {"gp_max_rows", 48}, {"gp_adam_steps", 5},
                       {"lube_max_rows", 128}, {"lube_iters_per_temp", 10},
                       {"lube_stop_fraction", 0.1}}},
    };
    const fs::path path = dir / ("config_" + kind + ".json");
    std::ofstream out(path);
    out << cfg.dump(2);
    return path;
}

// Byte comparison of two output directories, ignoring the wall-clock file.
std::string compare_dirs(const fs::path& a, const fs::path& b) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(a))
        if (entry.is_regular_file()) names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());

    std::size_t b_files = 0;
    for (const auto& entry : fs::directory_iterator(b))
        if (entry.is_regular_file()) ++b_files;
    if (b_files != names.size()) return "runs produced different file sets";

    for (const std::string& name : names) {
        if (name == "timings.csv") continue;  // wall-clock measurements, excluded
        if (!fs::exists(b / name)) return name + " missing from the second run";
        if (slurp(a / name) != slurp(b / name)) return name + " differs between runs";
    }
    return "";
}

Outcome check_determinism() {
    const fs::path root = fs::path("/tmp") / "pvcast_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);

    const fs::path cfg_ngb = write_small_config(root, "ngboost");
    const fs::path cfg_gp = write_small_config(root, "gp");

    const fs::path dir_a = root / "a";
    const fs::path dir_b = root / "b";
    fs::create_directories(dir_a);
    fs::create_directories(dir_b);
    const std::vector<std::string> battery_a = command_battery(dir_a, cfg_ngb, cfg_gp);
    const std::vector<std::string> battery_b = command_battery(dir_b, cfg_ngb, cfg_gp);
    for (std::size_t i = 0; i < battery_a.size(); ++i) {
        if (run_cli(battery_a[i]) != 0)
            return fail("command failed: " + battery_a[i].substr(0, battery_a[i].find(' ')));
        if (run_cli(battery_b[i]) != 0)
            return fail("rerun failed: " + battery_b[i].substr(0, battery_b[i].find(' ')));
    }
    const std::string diff = compare_dirs(dir_a, dir_b);
    if (!diff.empty()) return fail(diff);

    // Save/load round-trips: reloaded models must predict like the originals.
    double worst = 0.0;
    {
        const Dataset ds = mixed_data(1301, 400, 4);
        NgbConfig cfg;
        cfg.n_stages = 30;
        cfg.learning_rate = 0.1;
        const NgbModel before = train(ds, cfg);
        save_ngb_model(before, (root / "ngb.json").string());
        const NgbModel after = load_ngb_model((root / "ngb.json").string());
        Rng rng(1311);
        std::vector<double> x(4);
        for (int probe = 0; probe < 50; ++probe) {
            for (double& v : x) v = rng.uniform();
            const DistParams p0 = predict_dist(before, x);
            const DistParams p1 = predict_dist(after, x);
            worst = std::max(worst, std::abs(p0.mu - p1.mu));
            worst = std::max(worst, std::abs(p0.log_scale - p1.log_scale));
        }
    }
    {
        const Dataset ds = mixed_data(1302, 80, 2);
        KernelSpec spec;
        spec.kind = KernelKind::RQ;
        GpSettings settings;
        settings.adam_steps = 10;
        const GpModel before = gp_fit(ds, spec, settings);
        save_gp_model(before, (root / "gp.json").string());
        const GpModel after = load_gp_model((root / "gp.json").string());
        Rng rng(1312);
        std::vector<double> x(2);
        for (int probe = 0; probe < 30; ++probe) {
            for (double& v : x) v = rng.uniform();
            const DistParams p0 = gp_predict(before, x);
            const DistParams p1 = gp_predict(after, x);
            worst = std::max(worst, std::abs(p0.mu - p1.mu));
            worst = std::max(worst, std::abs(p0.log_scale - p1.log_scale));
        }
    }
    {
        const Dataset ds = linear_noise_data(1303, 200);
        AnnealSchedule schedule;
        schedule.iters_per_temp = 15;
        schedule.stop_fraction = 0.05;
        schedule.seed = 5;
        const LubeNet before = lube_train(ds, 4, 0.9, 30.0, schedule, nullptr);
        save_lube_model(before, (root / "lube.json").string());
        const LubeNet after = load_lube_model((root / "lube.json").string());
        Rng rng(1313);
        std::vector<double> x(2);
        for (int probe = 0; probe < 30; ++probe) {
            for (double& v : x) v = rng.uniform();
            double lo0 = 0.0, hi0 = 0.0, lo1 = 0.0, hi1 = 0.0;
            lube_bounds(before, x, &lo0, &hi0);
            lube_bounds(after, x, &lo1, &hi1);
            worst = std::max(worst, std::abs(lo0 - lo1));
            worst = std::max(worst, std::abs(hi0 - hi1));
        }
    }
    if (worst > 1e-12) return fail("round-trip prediction drift " + num(worst));
    return pass("all commands byte-identical on rerun, round-trip drift " + num(worst));
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* label;
        Outcome (*fn)();
    };
    const Criterion criteria[] = {
        {1, "score gradients match central finite differences", check_gradients},
        {2, "natural gradients match the closed forms", check_natural_gradient},
        {3, "Monte-Carlo Fisher information matches the closed form",
         check_fisher_monte_carlo},
        {4, "closed-form CRPS matches quadrature", check_crps_closed_form},
        {5, "staged training score never increases", check_boosting_monotonicity},
        {6, "SHAP matches exhaustive enumeration", check_shap_against_brute_force},
        {7, "SHAP local accuracy and interaction row sums hold", check_shap_identities},
        {8, "intervals are calibrated on heteroscedastic data", check_calibration},
        {9, "benchmark favors ngboost over persistence and GP",
         check_benchmark_directions},
        {10, "GP reproduces training targets at near-zero noise", check_gp_interpolation},
        {11, "LUBE covers held-out data at acceptable width", check_lube},
        {12, "pruning drops injected noise features", check_pruning},
        {13, "reruns are bit-exact and models round-trip", check_determinism},
    };

    bool all_ok = true;
    for (const Criterion& c : criteria) {
        const auto t0 = Clock::now();
        Outcome outcome;
        try {
            outcome = c.fn();
        } catch (const std::exception& e) {
            outcome = fail(std::string("unexpected exception: ") + e.what());
        }
        all_ok = all_ok && outcome.ok;
        std::printf("[%s] %2d %s (%s; %.1fs)\n", outcome.ok ? "PASS" : "FAIL", c.id,
                    c.label, outcome.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    return all_ok ? 0 : 1;
}
