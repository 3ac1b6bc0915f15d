#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvcast/baselines.hpp"
#include "pvcast/dataset.hpp"
#include "pvcast/explain.hpp"
#include "pvcast/forecast.hpp"
#include "pvcast/metrics.hpp"
#include "pvcast/ngboost.hpp"
#include "pvcast/synthetic.hpp"

namespace pvcast {

enum class ModelKind { Ngboost, Gp, Lube, Persistence };

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from(const std::string& name);

struct LubeConfig {
    int neurons = 20;
    double eta = 50.0;
    double confidence = 0.95;
    std::size_t max_rows = 2048;  // annealing cost is linear in rows per proposal
    AnnealSchedule anneal;
};

struct GpConfig {
    KernelSpec kernel;
    GpSettings settings;
};

/// Reduced training budgets for the bench command (exact GP inference and
/// annealing are too slow at full data size on one core).
struct BenchBudget {
    int ngb_stages = 300;
    std::size_t gp_max_rows = 256;
    int gp_adam_steps = 120;
    std::size_t lube_max_rows = 1024;
    int lube_iters_per_temp = 120;
    double lube_stop_fraction = 1e-3;
};

/// Fully resolved run settings. Every command hashes the resolved form, so two
/// runs agree on outputs exactly when they agree on this.
struct RunConfig {
    // data
    std::string csv_path;  // empty: generate the synthetic series
    SyntheticSpec synthetic;
    double nominal_power = 10.0;  // per-unit base for CSV input
    bool scale_power = true;
    std::vector<int> lags = {1, 2, 3};

    // model
    ModelKind model = ModelKind::Ngboost;
    NgbConfig ngb;
    GpConfig gp;
    LubeConfig lube;

    // splits (empty: four seasonal splits starting one year after data start)
    std::vector<SplitSpec> splits;

    // evaluation
    std::vector<double> coverage_levels = {0.6827, 0.9545, 0.9973};
    int pit_bins = 20;

    // forecast
    Minutes forecast_origin = -1;  // -1: noon of the first test day
    Minutes forecast_horizon = 36 * 60;

    // explanation exports and pruning
    std::size_t explain_rows = 200;   // cap on explained samples
    std::size_t prune_rows = 2000;    // cap on rows behind pruning importances
    double prune_threshold = 0.02;

    BenchBudget bench;
    std::uint64_t seed = 1;
};

/// Parses and validates the JSON schema documented in the README; unknown
/// keys are rejected. The result has every default filled in.
RunConfig parse_run_config(const nlohmann::json& j);

/// Canonical JSON of the resolved config (sorted keys, round-trip numbers).
nlohmann::json run_config_json(const RunConfig& config);

/// FNV-1a over the canonical dump, as 16 hex digits.
std::string run_config_hash(const RunConfig& config);

/// Loads the CSV when a path is configured, otherwise generates the synthetic
/// series with the spec's own seed.
RawSeries load_or_generate(const RunConfig& config);

/// Night filter + lagged feature assembly per the config.
Dataset build_features(const RawSeries& series, const RunConfig& config);

/// The configured splits, or four seasonal train-year/test-month splits
/// derived from the first data year.
std::vector<SplitSpec> resolve_splits(const RunConfig& config, const Dataset& data);

// One-step-ahead evaluation: lag features hold realized values, so each test
// row is scored independently.
EvalReport evaluate_ngb(const NgbModel& model, const Dataset& test,
                        const std::vector<double>& coverage_levels, int pit_bins);
EvalReport evaluate_gp(const GpModel& model, const Dataset& test,
                       const std::vector<double>& coverage_levels, int pit_bins);
EvalReport evaluate_lube(const LubeNet& net, const Dataset& test, double confidence);
EvalReport evaluate_persistence(const RawSeries& series, const Dataset& test);

/// One-step predictions as a scoring-ready series (test rows in order).
ForecastSeries onestep_series(const NgbModel& model, const Dataset& test,
                              const std::vector<double>& coverage_levels);

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

struct GridCell {
    int index = 0;  // position in the enumerated grid
    nlohmann::json params;
    bool failed = false;
    std::string error;
    EvalReport mean_report;   // metrics averaged over splits
    double objective = 0.0;   // mean CRPS (ngboost/gp) or evaluation CWC (lube)
    double train_seconds = 0.0;
};

struct GridResult {
    ModelKind kind;
    std::vector<GridCell> cells;  // ranked: objective, then time, then index
};

/// Trains every grid combination on every split and ranks by the mean
/// objective. Cell failures are recorded in place, not fatal.
GridResult grid_search(const RawSeries& series, const RunConfig& config);

void leaderboard_csv(const GridResult& result, const std::string& path,
                     const std::string& config_hash, std::uint64_t seed);
/// Wall-clock training seconds per cell; kept out of the leaderboard so that
/// reported rankings and metrics stay byte-reproducible.
void grid_timings_csv(const GridResult& result, const std::string& path,
                      const std::string& config_hash, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Pruning
// ---------------------------------------------------------------------------

struct PruneResult {
    std::vector<std::string> feature_names;  // original order, aligned with share
    std::vector<std::string> kept;
    std::vector<std::string> dropped;
    std::vector<double> share;  // combined mean-|phi| share per original feature
    NgbModel model;             // retrained on the kept features
    EvalReport before;
    EvalReport after;
};

/// Drops features whose combined (mu + scale head) share of total mean |phi|
/// falls below the threshold, retrains with the same config, and evaluates
/// both models on the test set.
PruneResult prune_and_retrain(const NgbModel& model, const Dataset& train_data,
                              const Dataset& test_data, double threshold,
                              const RunConfig& config);

void prune_report_csv(const PruneResult& result, const std::string& path,
                      const std::string& config_hash, std::uint64_t seed);
nlohmann::json prune_report_json(const PruneResult& result);

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

struct BenchRow {
    std::string model;
    std::vector<EvalReport> per_split;
    EvalReport mean_report;
    double train_seconds = 0.0;
};

struct BenchResult {
    std::vector<BenchRow> rows;  // ngboost, gp, lube, persistence
    std::uint64_t seed = 0;
    bool ngb_mae_below_persistence = false;
    bool ngb_crps_below_gp = false;
};

/// Seasonal-split comparison of NGBoost against the three baselines with
/// single-core training budgets.
BenchResult run_bench(const RawSeries& series, const RunConfig& config);

void bench_csv(const BenchResult& result, const std::string& path,
               const std::string& config_hash, std::uint64_t seed);
nlohmann::json bench_json(const BenchResult& result, const std::string& config_hash);

// ---------------------------------------------------------------------------
// Explanation exports
// ---------------------------------------------------------------------------

void explanation_csv(const NgbModel& model, const Dataset& data, std::size_t max_rows,
                     const std::string& path, const std::string& config_hash,
                     std::uint64_t seed);
void interaction_csv(const NgbModel& model, const Dataset& data, std::size_t max_rows,
                     const std::string& path, const std::string& config_hash,
                     std::uint64_t seed);
void importance_csv(const NgbModel& model, const Dataset& data, std::size_t max_rows,
                    const std::string& path, const std::string& config_hash,
                    std::uint64_t seed);

/// First max_rows rows as a standalone dataset (deterministic cap helper).
Dataset head_rows(const Dataset& data, std::size_t max_rows);
/// Last max_rows rows (used to cap cubic/annealing training costs).
Dataset tail_rows(const Dataset& data, std::size_t max_rows);

}  // namespace pvcast
