#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pvcast/errors.hpp"
#include "pvcast/model_io.hpp"
#include "pvcast/pipeline.hpp"
#include "pvcast/util.hpp"

namespace {

using nlohmann::json;
using namespace pvcast;

struct CliArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::string model_path;
    std::uint64_t seed = 0;
    std::vector<double> coverage_pct;
};

// Resolves the run configuration: config file, then CLI overrides. The run
// seed also feeds the synthetic generator unless the config pins its own.
RunConfig make_config(const CliArgs& cli) {
    json raw = json::object();
    if (!cli.config_path.empty()) {
        std::ifstream in(cli.config_path);
        if (!in) throw DataError("cannot open config file " + cli.config_path);
        try {
            in >> raw;
        } catch (const json::exception& e) {
            throw DataError("malformed config JSON: " + std::string(e.what()));
        }
    }
    const bool synthetic_seed_pinned = raw.contains("data") && raw["data"].is_object() &&
                                       raw["data"].contains("synthetic") &&
                                       raw["data"]["synthetic"].is_object() &&
                                       raw["data"]["synthetic"].contains("seed");
    RunConfig cfg = parse_run_config(raw);
    cfg.seed = cli.seed;
    if (!synthetic_seed_pinned) cfg.synthetic.seed = cli.seed;
    if (!cli.coverage_pct.empty()) {
        cfg.coverage_levels.clear();
        for (const double pct : cli.coverage_pct) {
            if (!(pct > 0.0 && pct < 100.0))
                throw DataError("--coverage percents must lie in (0, 100)");
            cfg.coverage_levels.push_back(pct / 100.0);
        }
    }
    return cfg;
}

std::string out_path(const CliArgs& cli, const std::string& name) {
    std::filesystem::create_directories(cli.out_dir);
    return (std::filesystem::path(cli.out_dir) / name).string();
}

// Stamps config hash and seed into a just-written model file so every
// artifact carries its provenance.
void annotate_model_file(const std::string& path, const std::string& hash,
                         std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot reopen " + path);
    json j;
    in >> j;
    in.close();
    j["config_hash"] = hash;
    j["seed"] = seed;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << "\n";
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << text;
    if (!out.good()) throw DataError("failed while writing " + path);
}

// First configured (or derived seasonal) split as train/test datasets.
std::pair<Dataset, Dataset> first_split(const RunConfig& cfg, const Dataset& data) {
    const auto specs = resolve_splits(cfg, data);
    auto pairs = sliding_splits(data, {specs.front()});
    return std::move(pairs.front());
}

void cmd_generate(const CliArgs& cli, const RunConfig& cfg) {
    const RawSeries series = generate_synthetic(cfg.synthetic);
    const std::string preamble = "# config_hash=" + run_config_hash(cfg) +
                                 " seed=" + std::to_string(cfg.seed) + "\n";
    write_raw_csv(series, out_path(cli, "synthetic.csv"), preamble);
}

void cmd_train(const CliArgs& cli, const RunConfig& cfg) {
    const RawSeries series = load_or_generate(cfg);
    const Dataset data = build_features(series, cfg);
    const auto [train_set, test_set] = first_split(cfg, data);
    (void)test_set;
    const std::string path =
        cli.model_path.empty() ? out_path(cli, "model.json") : cli.model_path;
    switch (cfg.model) {
        case ModelKind::Ngboost:
            save_ngb_model(train(train_set, cfg.ngb), path);
            break;
        case ModelKind::Gp:
            save_gp_model(gp_fit(train_set, cfg.gp.kernel, cfg.gp.settings), path);
            break;
        case ModelKind::Lube: {
            AnnealSchedule schedule = cfg.lube.anneal;
            schedule.seed = cfg.seed;
            const Dataset capped = tail_rows(train_set, cfg.lube.max_rows);
            save_lube_model(lube_train(capped, cfg.lube.neurons, cfg.lube.confidence,
                                       cfg.lube.eta, schedule, nullptr),
                            path);
            break;
        }
        case ModelKind::Persistence:
            throw DataError("persistence has no parameters to train");
    }
    annotate_model_file(path, run_config_hash(cfg), cfg.seed);
}

void cmd_forecast(const CliArgs& cli, const RunConfig& cfg) {
    if (cli.model_path.empty()) throw DataError("forecast: --model is required");
    if (model_kind(cli.model_path) != "ngboost")
        throw DataError("forecast: recursive forecasting needs an ngboost model");
    const NgbModel model = load_ngb_model(cli.model_path);
    const RawSeries series = load_or_generate(cfg);
    Minutes origin = cfg.forecast_origin;
    if (origin < 0) {
        // default: noon of the first test day
        const Dataset data = build_features(series, cfg);
        origin = resolve_splits(cfg, data).front().test_begin + 12 * 60;
    }
    ForecastSeries fc = recursive_forecast(model, series, origin, cfg.forecast_horizon,
                                           cfg.coverage_levels);
    attach_realized(fc, series);
    forecast_csv(fc, out_path(cli, "forecast.csv"), run_config_hash(cfg), cfg.seed);
}

void write_report_files(const CliArgs& cli, const RunConfig& cfg,
                        const EvalReport& report) {
    const std::string hash = run_config_hash(cfg);
    write_text(out_path(cli, "eval.json"), eval_report_json(report, hash, cfg.seed));
    write_text(out_path(cli, "eval.csv"), eval_report_csv(report, hash, cfg.seed));
    if (report.pit)
        write_text(out_path(cli, "pit.csv"), pit_csv(*report.pit, hash, cfg.seed));
}

void cmd_evaluate(const CliArgs& cli, const RunConfig& cfg) {
    const RawSeries series = load_or_generate(cfg);
    const Dataset data = build_features(series, cfg);
    const auto [train_set, test_set] = first_split(cfg, data);
    (void)train_set;

    std::string kind = model_kind_name(cfg.model);
    if (!cli.model_path.empty()) kind = model_kind(cli.model_path);
    if (kind != "persistence" && cli.model_path.empty())
        throw DataError("evaluate: --model is required for " + kind);

    if (kind == "ngboost") {
        const NgbModel model = load_ngb_model(cli.model_path);
        write_report_files(cli, cfg,
                           evaluate_ngb(model, test_set, cfg.coverage_levels, cfg.pit_bins));
        forecast_csv(onestep_series(model, test_set, cfg.coverage_levels),
                     out_path(cli, "predictions.csv"), run_config_hash(cfg), cfg.seed);
    } else if (kind == "gp") {
        const GpModel model = load_gp_model(cli.model_path);
        write_report_files(cli, cfg,
                           evaluate_gp(model, test_set, cfg.coverage_levels, cfg.pit_bins));
    } else if (kind == "lube") {
        const LubeNet net = load_lube_model(cli.model_path);
        write_report_files(cli, cfg, evaluate_lube(net, test_set, cfg.lube.confidence));
    } else if (kind == "persistence") {
        write_report_files(cli, cfg, evaluate_persistence(series, test_set));
    } else {
        throw DataError("evaluate: unsupported model kind \"" + kind + "\"");
    }
}

void cmd_explain(const CliArgs& cli, const RunConfig& cfg) {
    if (cli.model_path.empty()) throw DataError("explain: --model is required");
    if (model_kind(cli.model_path) != "ngboost")
        throw DataError("explain: attributions are defined for ngboost models only");
    const NgbModel model = load_ngb_model(cli.model_path);
    const RawSeries series = load_or_generate(cfg);
    const Dataset data = build_features(series, cfg);
    const auto [train_set, test_set] = first_split(cfg, data);
    (void)train_set;
    const std::string hash = run_config_hash(cfg);
    explanation_csv(model, test_set, cfg.explain_rows, out_path(cli, "explanations.csv"),
                    hash, cfg.seed);
    interaction_csv(model, test_set, cfg.explain_rows, out_path(cli, "interactions.csv"),
                    hash, cfg.seed);
    importance_csv(model, test_set, cfg.explain_rows, out_path(cli, "importance.csv"),
                   hash, cfg.seed);
}

void cmd_grid(const CliArgs& cli, const RunConfig& cfg) {
    const RawSeries series = load_or_generate(cfg);
    const GridResult result = grid_search(series, cfg);
    const std::string hash = run_config_hash(cfg);
    leaderboard_csv(result, out_path(cli, "leaderboard.csv"), hash, cfg.seed);
    grid_timings_csv(result, out_path(cli, "timings.csv"), hash, cfg.seed);
}

void cmd_prune(const CliArgs& cli, const RunConfig& cfg) {
    const RawSeries series = load_or_generate(cfg);
    const Dataset data = build_features(series, cfg);
    const auto [train_set, test_set] = first_split(cfg, data);
    NgbModel model;
    if (!cli.model_path.empty()) {
        if (model_kind(cli.model_path) != "ngboost")
            throw DataError("prune: the pruning workflow needs an ngboost model");
        model = load_ngb_model(cli.model_path);
    } else {
        model = train(train_set, cfg.ngb);
    }
    const PruneResult result =
        prune_and_retrain(model, train_set, test_set, cfg.prune_threshold, cfg);
    const std::string hash = run_config_hash(cfg);
    prune_report_csv(result, out_path(cli, "prune.csv"), hash, cfg.seed);
    json pj = prune_report_json(result);
    pj["config_hash"] = hash;
    pj["seed"] = cfg.seed;
    write_text(out_path(cli, "prune.json"), pj.dump(2) + "\n");
    save_ngb_model(result.model, out_path(cli, "pruned_model.json"));
    annotate_model_file(out_path(cli, "pruned_model.json"), hash, cfg.seed);
}

void cmd_bench(const CliArgs& cli, const RunConfig& cfg) {
    const RawSeries series = load_or_generate(cfg);
    const BenchResult result = run_bench(series, cfg);
    const std::string hash = run_config_hash(cfg);
    bench_csv(result, out_path(cli, "bench.csv"), hash, cfg.seed);
    write_text(out_path(cli, "bench.json"), bench_json(result, hash).dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probabilistic PV power forecasting toolkit"};
    app.require_subcommand(1);

    CliArgs cli;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", cli.config_path, "JSON config file");
        sub->add_option("--seed", cli.seed, "run seed (all randomness derives from it)")
            ->required();
        sub->add_option("--out-dir", cli.out_dir, "output directory");
        sub->add_option("--model", cli.model_path, "model file (output of train)");
        sub->add_option("--coverage", cli.coverage_pct,
                        "coverage percents, e.g. 68,95,99")
            ->delimiter(',');
        return sub;
    };

    CLI::App* generate = add_common(app.add_subcommand("generate", "write a synthetic series CSV"));
    CLI::App* train_cmd = add_common(app.add_subcommand("train", "fit the configured model"));
    CLI::App* forecast = add_common(
        app.add_subcommand("forecast", "recursive day-ahead forecast from a trained model"));
    CLI::App* evaluate = add_common(
        app.add_subcommand("evaluate", "score a model on the test split"));
    CLI::App* explain = add_common(
        app.add_subcommand("explain", "export SHAP values, interactions, and importances"));
    CLI::App* grid = add_common(
        app.add_subcommand("grid", "hyperparameter grid search with a ranked leaderboard"));
    CLI::App* prune = add_common(
        app.add_subcommand("prune", "drop low-attribution features and retrain"));
    CLI::App* bench = add_common(
        app.add_subcommand("bench", "compare against persistence, GP, and LUBE baselines"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    RunConfig cfg;
    try {
        cfg = make_config(cli);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (generate->parsed()) cmd_generate(cli, cfg);
        else if (train_cmd->parsed()) cmd_train(cli, cfg);
        else if (forecast->parsed()) cmd_forecast(cli, cfg);
        else if (evaluate->parsed()) cmd_evaluate(cli, cfg);
        else if (explain->parsed()) cmd_explain(cli, cfg);
        else if (grid->parsed()) cmd_grid(cli, cfg);
        else if (prune->parsed()) cmd_prune(cli, cfg);
        else if (bench->parsed()) cmd_bench(cli, cfg);
        return 0;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
