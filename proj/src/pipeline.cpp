#include "pvcast/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pvcast/errors.hpp"
#include "pvcast/util.hpp"

namespace pvcast {

using nlohmann::json;

std::string model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Ngboost: return "ngboost";
        case ModelKind::Gp: return "gp";
        case ModelKind::Lube: return "lube";
        case ModelKind::Persistence: return "persistence";
    }
    throw DataError("unknown model kind");
}

ModelKind model_kind_from(const std::string& name) {
    if (name == "ngboost") return ModelKind::Ngboost;
    if (name == "gp") return ModelKind::Gp;
    if (name == "lube") return ModelKind::Lube;
    if (name == "persistence") return ModelKind::Persistence;
    throw DataError("unknown model kind \"" + name + "\"");
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
    if (!j.is_object()) throw DataError("config: " + where + " must be an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* key : allowed)
            if (item.key() == key) { ok = true; break; }
        if (!ok) throw DataError("config: unknown key \"" + item.key() + "\" in " + where);
    }
}

double num_or(const json& j, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_number()) throw DataError(std::string("config: ") + key + " must be a number");
    return j[key].get<double>();
}

int int_or(const json& j, const char* key, int dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_number_integer())
        throw DataError(std::string("config: ") + key + " must be an integer");
    return j[key].get<int>();
}

bool bool_or(const json& j, const char* key, bool dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_boolean()) throw DataError(std::string("config: ") + key + " must be a bool");
    return j[key].get<bool>();
}

std::string str_or(const json& j, const char* key, const std::string& dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_string()) throw DataError(std::string("config: ") + key + " must be a string");
    return j[key].get<std::string>();
}

Family family_from_name(const std::string& s) {
    if (s == "normal") return Family::Normal;
    if (s == "laplace") return Family::Laplace;
    throw DataError("config: unknown family \"" + s + "\" (normal | laplace)");
}

ScoreRule rule_from_name(const std::string& s) {
    if (s == "log_score") return ScoreRule::LogScore;
    if (s == "crps") return ScoreRule::Crps;
    throw DataError("config: unknown score \"" + s + "\" (log_score | crps)");
}

KernelKind kernel_from_name(const std::string& s) {
    if (s == "rbf") return KernelKind::RBF;
    if (s == "rq") return KernelKind::RQ;
    if (s == "periodic") return KernelKind::Periodic;
    if (s == "rq_plus_periodic") return KernelKind::SumRQPer;
    if (s == "rq_times_periodic") return KernelKind::ProductRQPer;
    throw DataError("config: unknown kernel \"" + s + "\"");
}

const char* kernel_to_name(KernelKind k) {
    switch (k) {
        case KernelKind::RBF: return "rbf";
        case KernelKind::RQ: return "rq";
        case KernelKind::Periodic: return "periodic";
        case KernelKind::SumRQPer: return "rq_plus_periodic";
        case KernelKind::ProductRQPer: return "rq_times_periodic";
    }
    return "rbf";
}

KernelParams kernel_params_from(const json& j, const std::string& where) {
    check_keys(j, {"log_var", "log_length", "log_alpha", "log_period"}, where);
    KernelParams p;
    p.log_var = num_or(j, "log_var", p.log_var);
    p.log_length = num_or(j, "log_length", p.log_length);
    p.log_alpha = num_or(j, "log_alpha", p.log_alpha);
    p.log_period = num_or(j, "log_period", p.log_period);
    return p;
}

json kernel_params_json(const KernelParams& p) {
    return json{{"log_var", p.log_var},
                {"log_length", p.log_length},
                {"log_alpha", p.log_alpha},
                {"log_period", p.log_period}};
}

// Per-row subset copy preserving metadata.
Dataset subset(const Dataset& data, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.feature_names = data.feature_names;
    out.nominal_power = data.nominal_power;
    out.scaled = data.scaled;
    out.X = Matrix(rows.size(), data.X.cols());
    out.y.reserve(rows.size());
    out.row_timestamps.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = data.X.row(rows[i]);
        std::copy(src.begin(), src.end(), out.X.row(i).begin());
        out.y.push_back(data.y[rows[i]]);
        out.row_timestamps.push_back(data.row_timestamps[rows[i]]);
    }
    return out;
}

}  // namespace

RunConfig parse_run_config(const json& j) {
    check_keys(j, {"data", "model", "splits", "evaluate", "forecast", "explain",
                   "prune", "bench", "seed"},
               "top level");
    RunConfig cfg;
    cfg.gp.kernel.kind = KernelKind::RQ;  // best-performing kernel as default
    cfg.synthetic.days = 700;  // long enough for the four seasonal splits

    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
            throw DataError("config: seed must be a nonnegative integer");
        const auto s = j["seed"].get<std::int64_t>();
        if (s < 0) throw DataError("config: seed must be nonnegative");
        cfg.seed = static_cast<std::uint64_t>(s);
    }

    if (j.contains("data")) {
        const json& d = j["data"];
        check_keys(d, {"csv", "synthetic", "nominal_power", "scale_power", "lags"}, "data");
        cfg.csv_path = str_or(d, "csv", "");
        if (d.contains("synthetic")) {
            const json& s = d["synthetic"];
            check_keys(s,
                       {"days", "start", "nominal_power", "sharpness", "min_daylength",
                        "max_daylength", "clouds", "cloud_mean", "cloud_phi", "cloud_sd",
                        "day_shift_sd", "obs_noise", "radiation_noise", "seed"},
                       "data.synthetic");
            cfg.synthetic.days = int_or(s, "days", cfg.synthetic.days);
            if (s.contains("start"))
                cfg.synthetic.start = parse_timestamp(s["start"].get<std::string>());
            cfg.synthetic.nominal_power =
                num_or(s, "nominal_power", cfg.synthetic.nominal_power);
            cfg.synthetic.sharpness = num_or(s, "sharpness", cfg.synthetic.sharpness);
            cfg.synthetic.min_daylength =
                num_or(s, "min_daylength", cfg.synthetic.min_daylength);
            cfg.synthetic.max_daylength =
                num_or(s, "max_daylength", cfg.synthetic.max_daylength);
            cfg.synthetic.clouds = bool_or(s, "clouds", cfg.synthetic.clouds);
            cfg.synthetic.cloud_mean = num_or(s, "cloud_mean", cfg.synthetic.cloud_mean);
            cfg.synthetic.cloud_phi = num_or(s, "cloud_phi", cfg.synthetic.cloud_phi);
            cfg.synthetic.cloud_sd = num_or(s, "cloud_sd", cfg.synthetic.cloud_sd);
            cfg.synthetic.day_shift_sd =
                num_or(s, "day_shift_sd", cfg.synthetic.day_shift_sd);
            cfg.synthetic.obs_noise = num_or(s, "obs_noise", cfg.synthetic.obs_noise);
            cfg.synthetic.radiation_noise =
                num_or(s, "radiation_noise", cfg.synthetic.radiation_noise);
            cfg.synthetic.seed = static_cast<std::uint64_t>(
                int_or(s, "seed", static_cast<int>(cfg.synthetic.seed)));
        }
        cfg.nominal_power = num_or(d, "nominal_power",
                                   cfg.csv_path.empty() ? cfg.synthetic.nominal_power : 10.0);
        cfg.scale_power = bool_or(d, "scale_power", true);
        if (d.contains("lags")) {
            if (!d["lags"].is_array()) throw DataError("config: data.lags must be an array");
            cfg.lags.clear();
            for (const json& v : d["lags"]) {
                if (!v.is_number_integer())
                    throw DataError("config: data.lags entries must be integers");
                cfg.lags.push_back(v.get<int>());
            }
        }
    } else {
        cfg.nominal_power = cfg.synthetic.nominal_power;
    }

    if (j.contains("model")) {
        const json& m = j["model"];
        check_keys(m, {"kind", "ngboost", "gp", "lube"}, "model");
        cfg.model = model_kind_from(str_or(m, "kind", "ngboost"));
        if (m.contains("ngboost")) {
            const json& n = m["ngboost"];
            check_keys(n,
                       {"stages", "learning_rate", "depth", "min_samples_leaf", "family",
                        "score"},
                       "model.ngboost");
            cfg.ngb.n_stages = int_or(n, "stages", cfg.ngb.n_stages);
            cfg.ngb.learning_rate = num_or(n, "learning_rate", cfg.ngb.learning_rate);
            cfg.ngb.max_depth = int_or(n, "depth", cfg.ngb.max_depth);
            cfg.ngb.min_samples_leaf =
                int_or(n, "min_samples_leaf", cfg.ngb.min_samples_leaf);
            cfg.ngb.family = family_from_name(str_or(n, "family", "normal"));
            cfg.ngb.rule = rule_from_name(str_or(n, "score", "log_score"));
        }
        if (m.contains("gp")) {
            const json& g = m["gp"];
            check_keys(g, {"kernel", "a", "b", "noise_variance", "adam_steps", "adam_lr",
                           "max_rows"},
                       "model.gp");
            cfg.gp.kernel.kind = kernel_from_name(str_or(g, "kernel", "rq"));
            if (g.contains("a")) cfg.gp.kernel.a = kernel_params_from(g["a"], "model.gp.a");
            if (g.contains("b")) cfg.gp.kernel.b = kernel_params_from(g["b"], "model.gp.b");
            cfg.gp.kernel.noise_variance =
                num_or(g, "noise_variance", cfg.gp.kernel.noise_variance);
            cfg.gp.settings.adam_steps = int_or(g, "adam_steps", cfg.gp.settings.adam_steps);
            cfg.gp.settings.adam_lr = num_or(g, "adam_lr", cfg.gp.settings.adam_lr);
            cfg.gp.settings.max_rows = static_cast<std::size_t>(
                int_or(g, "max_rows", static_cast<int>(cfg.gp.settings.max_rows)));
        }
        if (m.contains("lube")) {
            const json& l = m["lube"];
            check_keys(l, {"neurons", "eta", "confidence", "max_rows", "anneal"},
                       "model.lube");
            cfg.lube.neurons = int_or(l, "neurons", cfg.lube.neurons);
            cfg.lube.eta = num_or(l, "eta", cfg.lube.eta);
            cfg.lube.confidence = num_or(l, "confidence", cfg.lube.confidence);
            cfg.lube.max_rows = static_cast<std::size_t>(
                int_or(l, "max_rows", static_cast<int>(cfg.lube.max_rows)));
            if (l.contains("anneal")) {
                const json& a = l["anneal"];
                check_keys(a, {"t0", "cooling", "iters_per_temp", "step", "stop_fraction"},
                           "model.lube.anneal");
                cfg.lube.anneal.t0 = num_or(a, "t0", cfg.lube.anneal.t0);
                cfg.lube.anneal.cooling = num_or(a, "cooling", cfg.lube.anneal.cooling);
                cfg.lube.anneal.iters_per_temp =
                    int_or(a, "iters_per_temp", cfg.lube.anneal.iters_per_temp);
                cfg.lube.anneal.step = num_or(a, "step", cfg.lube.anneal.step);
                cfg.lube.anneal.stop_fraction =
                    num_or(a, "stop_fraction", cfg.lube.anneal.stop_fraction);
            }
        }
    }

    if (j.contains("splits")) {
        if (!j["splits"].is_array()) throw DataError("config: splits must be an array");
        for (const json& s : j["splits"]) {
            check_keys(s, {"train_begin", "train_end", "test_begin", "test_end"}, "splits[]");
            SplitSpec spec;
            spec.train_begin = parse_timestamp(s.at("train_begin").get<std::string>());
            spec.train_end = parse_timestamp(s.at("train_end").get<std::string>());
            spec.test_begin = parse_timestamp(s.at("test_begin").get<std::string>());
            spec.test_end = parse_timestamp(s.at("test_end").get<std::string>());
            cfg.splits.push_back(spec);
        }
    }

    if (j.contains("evaluate")) {
        const json& e = j["evaluate"];
        check_keys(e, {"coverage", "pit_bins"}, "evaluate");
        if (e.contains("coverage")) {
            if (!e["coverage"].is_array())
                throw DataError("config: evaluate.coverage must be an array of percents");
            cfg.coverage_levels.clear();
            for (const json& v : e["coverage"]) {
                const double pct = v.get<double>();
                if (!(pct > 0.0 && pct < 100.0))
                    throw DataError("config: coverage percents must lie in (0, 100)");
                cfg.coverage_levels.push_back(pct / 100.0);
            }
            if (cfg.coverage_levels.empty())
                throw DataError("config: evaluate.coverage must not be empty");
        }
        cfg.pit_bins = int_or(e, "pit_bins", cfg.pit_bins);
        if (cfg.pit_bins < 2) throw DataError("config: evaluate.pit_bins must be >= 2");
    }

    if (j.contains("forecast")) {
        const json& f = j["forecast"];
        check_keys(f, {"origin", "horizon_hours"}, "forecast");
        // null means "use the default origin", so resolved configs re-parse
        if (f.contains("origin") && !f["origin"].is_null())
            cfg.forecast_origin = parse_timestamp(f["origin"].get<std::string>());
        const double hours = num_or(f, "horizon_hours", 36.0);
        cfg.forecast_horizon = static_cast<Minutes>(std::llround(hours * 60.0));
    }

    if (j.contains("explain")) {
        check_keys(j["explain"], {"rows"}, "explain");
        cfg.explain_rows =
            static_cast<std::size_t>(int_or(j["explain"], "rows",
                                            static_cast<int>(cfg.explain_rows)));
    }

    if (j.contains("prune")) {
        const json& p = j["prune"];
        check_keys(p, {"threshold", "rows"}, "prune");
        cfg.prune_threshold = num_or(p, "threshold", cfg.prune_threshold);
        if (cfg.prune_threshold < 0.0 || cfg.prune_threshold >= 1.0)
            throw DataError("config: prune.threshold must lie in [0, 1)");
        cfg.prune_rows = static_cast<std::size_t>(
            int_or(p, "rows", static_cast<int>(cfg.prune_rows)));
    }

    if (j.contains("bench")) {
        const json& b = j["bench"];
        check_keys(b,
                   {"ngb_stages", "gp_max_rows", "gp_adam_steps", "lube_max_rows",
                    "lube_iters_per_temp", "lube_stop_fraction"},
                   "bench");
        cfg.bench.ngb_stages = int_or(b, "ngb_stages", cfg.bench.ngb_stages);
        cfg.bench.gp_max_rows = static_cast<std::size_t>(
            int_or(b, "gp_max_rows", static_cast<int>(cfg.bench.gp_max_rows)));
        cfg.bench.gp_adam_steps = int_or(b, "gp_adam_steps", cfg.bench.gp_adam_steps);
        cfg.bench.lube_max_rows = static_cast<std::size_t>(
            int_or(b, "lube_max_rows", static_cast<int>(cfg.bench.lube_max_rows)));
        cfg.bench.lube_iters_per_temp =
            int_or(b, "lube_iters_per_temp", cfg.bench.lube_iters_per_temp);
        cfg.bench.lube_stop_fraction =
            num_or(b, "lube_stop_fraction", cfg.bench.lube_stop_fraction);
    }

    return cfg;
}

json run_config_json(const RunConfig& c) {
    json splits = json::array();
    for (const SplitSpec& s : c.splits) {
        splits.push_back(json{{"train_begin", format_timestamp(s.train_begin)},
                              {"train_end", format_timestamp(s.train_end)},
                              {"test_begin", format_timestamp(s.test_begin)},
                              {"test_end", format_timestamp(s.test_end)}});
    }
    std::vector<double> coverage_pct;
    for (const double v : c.coverage_levels)
        coverage_pct.push_back(std::round(v * 1e6) / 1e4);
    return json{
        {"data",
         json{{"csv", c.csv_path},
              {"synthetic",
               json{{"days", c.synthetic.days},
                    {"start", format_timestamp(c.synthetic.start)},
                    {"nominal_power", c.synthetic.nominal_power},
                    {"sharpness", c.synthetic.sharpness},
                    {"min_daylength", c.synthetic.min_daylength},
                    {"max_daylength", c.synthetic.max_daylength},
                    {"clouds", c.synthetic.clouds},
                    {"cloud_mean", c.synthetic.cloud_mean},
                    {"cloud_phi", c.synthetic.cloud_phi},
                    {"cloud_sd", c.synthetic.cloud_sd},
                    {"day_shift_sd", c.synthetic.day_shift_sd},
                    {"obs_noise", c.synthetic.obs_noise},
                    {"radiation_noise", c.synthetic.radiation_noise},
                    {"seed", c.synthetic.seed}}},
              {"nominal_power", c.nominal_power},
              {"scale_power", c.scale_power},
              {"lags", c.lags}}},
        {"model",
         json{{"kind", model_kind_name(c.model)},
              {"ngboost",
               json{{"stages", c.ngb.n_stages},
                    {"learning_rate", c.ngb.learning_rate},
                    {"depth", c.ngb.max_depth},
                    {"min_samples_leaf", c.ngb.min_samples_leaf},
                    {"family", c.ngb.family == Family::Normal ? "normal" : "laplace"},
                    {"score", c.ngb.rule == ScoreRule::LogScore ? "log_score" : "crps"}}},
              {"gp",
               json{{"kernel", kernel_to_name(c.gp.kernel.kind)},
                    {"a", kernel_params_json(c.gp.kernel.a)},
                    {"b", kernel_params_json(c.gp.kernel.b)},
                    {"noise_variance", c.gp.kernel.noise_variance},
                    {"adam_steps", c.gp.settings.adam_steps},
                    {"adam_lr", c.gp.settings.adam_lr},
                    {"max_rows", c.gp.settings.max_rows}}},
              {"lube",
               json{{"neurons", c.lube.neurons},
                    {"eta", c.lube.eta},
                    {"confidence", c.lube.confidence},
                    {"max_rows", c.lube.max_rows},
                    {"anneal",
                     json{{"t0", c.lube.anneal.t0},
                          {"cooling", c.lube.anneal.cooling},
                          {"iters_per_temp", c.lube.anneal.iters_per_temp},
                          {"step", c.lube.anneal.step},
                          {"stop_fraction", c.lube.anneal.stop_fraction}}}}}}},
        {"splits", splits},
        {"evaluate", json{{"coverage", coverage_pct}, {"pit_bins", c.pit_bins}}},
        {"forecast",
         json{{"origin", c.forecast_origin < 0 ? json() : json(format_timestamp(c.forecast_origin))},
              {"horizon_hours", static_cast<double>(c.forecast_horizon) / 60.0}}},
        {"explain", json{{"rows", c.explain_rows}}},
        {"prune", json{{"threshold", c.prune_threshold}, {"rows", c.prune_rows}}},
        {"bench",
         json{{"ngb_stages", c.bench.ngb_stages},
              {"gp_max_rows", c.bench.gp_max_rows},
              {"gp_adam_steps", c.bench.gp_adam_steps},
              {"lube_max_rows", c.bench.lube_max_rows},
              {"lube_iters_per_temp", c.bench.lube_iters_per_temp},
              {"lube_stop_fraction", c.bench.lube_stop_fraction}}},
        {"seed", c.seed},
    };
}

std::string run_config_hash(const RunConfig& config) {
    const std::uint64_t h = fnv1a64(run_config_json(config).dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RawSeries load_or_generate(const RunConfig& config) {
    if (!config.csv_path.empty()) return read_raw_csv(config.csv_path);
    return generate_synthetic(config.synthetic);
}

Dataset build_features(const RawSeries& series, const RunConfig& config) {
    return build_lagged(filter_night_hours(series), config.lags, config.nominal_power,
                        config.scale_power);
}

std::vector<SplitSpec> resolve_splits(const RunConfig& config, const Dataset& data) {
    if (!config.splits.empty()) return config.splits;
    if (data.row_timestamps.empty()) throw DataError("splits: dataset is empty");
    const int year0 = from_minutes(data.row_timestamps.front()).year;
    std::vector<SplitSpec> specs;
    for (const int month : {1, 4, 7, 10}) {
        SplitSpec s;
        s.train_begin = to_minutes({year0, month, 1, 0, 0});
        s.train_end = to_minutes({year0 + 1, month, 1, 0, 0});
        s.test_begin = s.train_end;
        s.test_end = to_minutes({year0 + 1, month + 1, 1, 0, 0});
        specs.push_back(s);
    }
    return specs;
}

namespace {

// Shared shape of the distribution-based one-step evaluations.
EvalReport report_from_dists(const std::vector<DistParams>& dists,
                             const std::vector<double>& actual,
                             const std::vector<double>& coverage_levels, int pit_bins) {
    EvalReport report;
    report.n_samples = actual.size();
    std::vector<double> mus(dists.size());
    for (std::size_t i = 0; i < dists.size(); ++i) mus[i] = dists[i].mu;
    report.point = point_metrics(mus, actual);
    const double r = *std::max_element(actual.begin(), actual.end());
    for (const double level : coverage_levels) {
        const double k = k_from_coverage(level);
        std::vector<double> lo(dists.size()), hi(dists.size());
        for (std::size_t i = 0; i < dists.size(); ++i) {
            const auto [l, u] = interval(dists[i], k);
            // PV power cannot be negative; clamping both ends keeps hi >= lo
            lo[i] = std::max(l, 0.0);
            hi[i] = std::max(u, 0.0);
        }
        const IntervalMetrics im = interval_metrics(lo, hi, actual, r);
        report.coverage.push_back({level, im.picp, im.pinaw});
    }
    report.mean_crps = crps_mean(dists, actual);
    report.pit = pit_histogram(dists, actual, pit_bins);
    return report;
}

}  // namespace

EvalReport evaluate_ngb(const NgbModel& model, const Dataset& test,
                        const std::vector<double>& coverage_levels, int pit_bins) {
    if (test.X.rows() == 0) throw DataError("evaluate: empty test set");
    std::vector<DistParams> dists;
    dists.reserve(test.X.rows());
    for (std::size_t i = 0; i < test.X.rows(); ++i)
        dists.push_back(predict_dist(model, test.X.row(i)));
    return report_from_dists(dists, test.y, coverage_levels, pit_bins);
}

EvalReport evaluate_gp(const GpModel& model, const Dataset& test,
                       const std::vector<double>& coverage_levels, int pit_bins) {
    if (test.X.rows() == 0) throw DataError("evaluate: empty test set");
    std::vector<DistParams> dists;
    dists.reserve(test.X.rows());
    for (std::size_t i = 0; i < test.X.rows(); ++i)
        dists.push_back(gp_predict(model, test.X.row(i)));
    return report_from_dists(dists, test.y, coverage_levels, pit_bins);
}

EvalReport evaluate_lube(const LubeNet& net, const Dataset& test, double confidence) {
    if (test.X.rows() == 0) throw DataError("evaluate: empty test set");
    const std::size_t m = test.X.rows();
    std::vector<double> lo(m), hi(m);
    for (std::size_t i = 0; i < m; ++i) {
        lube_bounds(net, test.X.row(i), &lo[i], &hi[i]);
        // clamp both ends so a fully-negative interval collapses to [0,0]
        lo[i] = std::max(lo[i], 0.0);
        hi[i] = std::max(hi[i], 0.0);
    }
    const double r = *std::max_element(test.y.begin(), test.y.end());
    const IntervalMetrics im = interval_metrics(lo, hi, test.y, r);
    EvalReport report;
    report.n_samples = m;
    report.coverage.push_back({confidence, im.picp, im.pinaw});
    return report;
}

EvalReport evaluate_persistence(const RawSeries& series, const Dataset& test) {
    if (test.X.rows() == 0) throw DataError("evaluate: empty test set");
    const double unit = test.scaled ? test.nominal_power : 1.0;
    std::vector<double> pred;
    pred.reserve(test.y.size());
    for (const Minutes t : test.row_timestamps)
        pred.push_back(persistence_forecast(series, t) / unit);
    EvalReport report;
    report.n_samples = test.y.size();
    report.point = point_metrics(pred, test.y);
    return report;
}

ForecastSeries onestep_series(const NgbModel& model, const Dataset& test,
                              const std::vector<double>& coverage_levels) {
    ForecastSeries out;
    out.coverage_levels = coverage_levels;
    const double unit = model.scaled ? model.nominal_power : 1.0;
    std::vector<double> ks;
    for (const double level : coverage_levels) ks.push_back(k_from_coverage(level));
    for (std::size_t i = 0; i < test.X.rows(); ++i) {
        const DistParams dist = predict_dist(model, test.X.row(i));
        ForecastEntry entry;
        entry.timestamp = test.row_timestamps[i];
        entry.mu = dist.mu * unit;
        for (const double k : ks) {
            const auto [l, u] = interval(dist, k);
            // clamp both ends at 0 so the band stays ordered
            entry.lower.push_back(std::max(l * unit, 0.0));
            entry.upper.push_back(std::max(u * unit, 0.0));
        }
        entry.realized = test.y[i] * unit;
        out.entries.push_back(std::move(entry));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

namespace {

std::vector<json> enumerate_grid(ModelKind kind) {
    std::vector<json> cells;
    switch (kind) {
        case ModelKind::Ngboost:
            for (const int depth : {3, 4, 5})
                for (const double lr : {0.01, 0.05, 0.1})
                    for (const int iters : {100, 500, 1000})
                        for (const char* family : {"normal", "laplace"})
                            for (const char* score : {"log_score", "crps"})
                                cells.push_back(json{{"depth", depth},
                                                     {"learning_rate", lr},
                                                     {"stages", iters},
                                                     {"family", family},
                                                     {"score", score}});
            break;
        case ModelKind::Gp:
            for (const char* kernel :
                 {"rbf", "rq", "periodic", "rq_plus_periodic", "rq_times_periodic"})
                cells.push_back(json{{"kernel", kernel}});
            break;
        case ModelKind::Lube:
            for (int neurons = 10; neurons <= 100; neurons += 10)
                for (int eta = 10; eta <= 90; eta += 10)
                    cells.push_back(json{{"neurons", neurons}, {"eta", eta}});
            break;
        case ModelKind::Persistence:
            throw DataError("grid: persistence has no hyperparameters to search");
    }
    return cells;
}

double mean_or_nan(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Averages reports across splits; sections survive only when present in all.
EvalReport mean_reports(const std::vector<EvalReport>& reports) {
    EvalReport mean;
    if (reports.empty()) return mean;
    for (const EvalReport& r : reports) mean.n_samples += r.n_samples;
    const double n = static_cast<double>(reports.size());
    if (std::all_of(reports.begin(), reports.end(),
                    [](const EvalReport& r) { return r.point.has_value(); })) {
        PointMetrics pm;
        for (const EvalReport& r : reports) {
            pm.mae += r.point->mae / n;
            pm.rmse += r.point->rmse / n;
            pm.mbe += r.point->mbe / n;
        }
        mean.point = pm;
    }
    const std::size_t levels = reports.front().coverage.size();
    if (std::all_of(reports.begin(), reports.end(), [&](const EvalReport& r) {
            return r.coverage.size() == levels;
        })) {
        for (std::size_t l = 0; l < levels; ++l) {
            CoverageRow row;
            row.nominal = reports.front().coverage[l].nominal;
            for (const EvalReport& r : reports) {
                row.picp += r.coverage[l].picp / n;
                row.pinaw += r.coverage[l].pinaw / n;
            }
            mean.coverage.push_back(row);
        }
    }
    if (std::all_of(reports.begin(), reports.end(),
                    [](const EvalReport& r) { return r.mean_crps.has_value(); })) {
        double crps = 0.0;
        for (const EvalReport& r : reports) crps += *r.mean_crps / n;
        mean.mean_crps = crps;
    }
    return mean;
}

std::string params_label(const json& params) {
    std::string out;
    for (const auto& item : params.items()) {
        if (!out.empty()) out += ';';
        out += item.key();
        out += '=';
        if (item.value().is_string())
            out += item.value().get<std::string>();
        else
            out += item.value().dump();
    }
    return out;
}

std::uint64_t derived_seed(std::uint64_t base, std::uint64_t salt) {
    // splitmix-style mix so per-cell/per-split streams are unrelated
    std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace

GridResult grid_search(const RawSeries& series, const RunConfig& config) {
    GridResult result;
    result.kind = config.model;
    const Dataset data = build_features(series, config);
    const auto splits = sliding_splits(data, resolve_splits(config, data));
    const std::vector<json> cells = enumerate_grid(config.model);
    if (cells.empty()) throw DataError("grid: empty grid");

    for (std::size_t idx = 0; idx < cells.size(); ++idx) {
        GridCell cell;
        cell.index = static_cast<int>(idx);
        cell.params = cells[idx];
        const auto start = std::chrono::steady_clock::now();
        try {
            std::vector<EvalReport> reports;
            std::vector<double> objectives;
            for (std::size_t si = 0; si < splits.size(); ++si) {
                const Dataset& train_set = splits[si].first;
                const Dataset& test_set = splits[si].second;
                switch (config.model) {
                    case ModelKind::Ngboost: {
                        NgbConfig nc = config.ngb;
                        nc.max_depth = cell.params["depth"].get<int>();
                        nc.learning_rate = cell.params["learning_rate"].get<double>();
                        nc.n_stages = cell.params["stages"].get<int>();
                        nc.family = family_from_name(cell.params["family"].get<std::string>());
                        nc.rule = rule_from_name(cell.params["score"].get<std::string>());
                        const NgbModel model = train(train_set, nc);
                        const EvalReport rep = evaluate_ngb(
                            model, test_set, config.coverage_levels, config.pit_bins);
                        objectives.push_back(*rep.mean_crps);
                        reports.push_back(rep);
                        break;
                    }
                    case ModelKind::Gp: {
                        KernelSpec spec = config.gp.kernel;
                        spec.kind = kernel_from_name(cell.params["kernel"].get<std::string>());
                        const GpModel model = gp_fit(train_set, spec, config.gp.settings);
                        const EvalReport rep = evaluate_gp(
                            model, test_set, config.coverage_levels, config.pit_bins);
                        objectives.push_back(*rep.mean_crps);
                        reports.push_back(rep);
                        break;
                    }
                    case ModelKind::Lube: {
                        const Dataset capped = tail_rows(train_set, config.lube.max_rows);
                        AnnealSchedule schedule = config.lube.anneal;
                        schedule.seed = derived_seed(config.seed, idx * 131 + si);
                        const LubeNet net =
                            lube_train(capped, cell.params["neurons"].get<int>(),
                                       config.lube.confidence, cell.params["eta"].get<double>(),
                                       schedule, nullptr);
                        const EvalReport rep =
                            evaluate_lube(net, test_set, config.lube.confidence);
                        // rank by the evaluation-mode CWC on the test split
                        const double cwc = lube_cost(net, test_set.X, test_set.y,
                                                     config.lube.confidence,
                                                     cell.params["eta"].get<double>(), false);
                        objectives.push_back(cwc);
                        reports.push_back(rep);
                        break;
                    }
                    case ModelKind::Persistence:
                        throw DataError("grid: persistence has no hyperparameters to search");
                }
            }
            cell.mean_report = mean_reports(reports);
            cell.objective = mean_or_nan(objectives);
        } catch (const std::exception& e) {
            cell.failed = true;
            cell.error = e.what();
        }
        cell.train_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.cells.push_back(std::move(cell));
    }

    std::stable_sort(result.cells.begin(), result.cells.end(),
                     [](const GridCell& a, const GridCell& b) {
                         if (a.failed != b.failed) return !a.failed;
                         if (a.failed) return a.index < b.index;
                         if (a.objective != b.objective) return a.objective < b.objective;
                         if (a.train_seconds != b.train_seconds)
                             return a.train_seconds < b.train_seconds;
                         return a.index < b.index;
                     });
    return result;
}

namespace {

std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

void report_cells(std::ostream& out, const EvalReport& r, bool with_crps) {
    if (r.point) {
        out << ',' << format_double(r.point->mae) << ',' << format_double(r.point->rmse)
            << ',' << format_double(r.point->mbe);
    } else {
        out << ",,,";
    }
    for (const CoverageRow& row : r.coverage)
        out << ',' << format_double(row.picp) << ',' << format_double(row.pinaw);
    if (with_crps) {
        out << ',';
        if (r.mean_crps) out << format_double(*r.mean_crps);
    }
}

}  // namespace

void leaderboard_csv(const GridResult& result, const std::string& path,
                     const std::string& config_hash, std::uint64_t seed) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "# config_hash=" << config_hash << " seed=" << seed << "\n";
    out << "rank,cell,params,status,n_samples,mae,rmse,mbe";
    // column layout follows the first ranked cell's coverage rows
    const GridCell* ranked = nullptr;
    for (const GridCell& c : result.cells)
        if (!c.failed) { ranked = &c; break; }
    if (ranked)
        for (const CoverageRow& row : ranked->mean_report.coverage) {
            const std::string pct = format_percent(row.nominal);
            out << ",picp_" << pct << ",pinaw_" << pct;
        }
    out << ",mean_crps,objective,error\n";
    int rank = 1;
    for (const GridCell& cell : result.cells) {
        out << rank++ << ',' << cell.index << ',' << params_label(cell.params) << ','
            << (cell.failed ? "failed" : "ok") << ',' << cell.mean_report.n_samples;
        if (cell.failed) {
            out << ",,,";
            if (ranked)
                for (std::size_t i = 0; i < ranked->mean_report.coverage.size(); ++i)
                    out << ",,";
            out << ",," << csv_safe(cell.error) << "\n";
            continue;
        }
        report_cells(out, cell.mean_report, true);
        out << ',' << format_double(cell.objective) << ",\n";
    }
    if (!out.good()) throw DataError("failed while writing " + path);
}

void grid_timings_csv(const GridResult& result, const std::string& path,
                      const std::string& config_hash, std::uint64_t seed) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "# config_hash=" << config_hash << " seed=" << seed << "\n";
    out << "cell,params,train_seconds\n";
    for (const GridCell& cell : result.cells)
        out << cell.index << ',' << params_label(cell.params) << ','
            << format_double(cell.train_seconds, 3) << "\n";
    if (!out.good()) throw DataError("failed while writing " + path);
}

// ---------------------------------------------------------------------------
// Pruning
// ---------------------------------------------------------------------------

PruneResult prune_and_retrain(const NgbModel& model, const Dataset& train_data,
                              const Dataset& test_data, double threshold,
                              const RunConfig& config) {
    if (threshold < 0.0 || threshold >= 1.0)
        throw DataError("prune: threshold must lie in [0, 1)");
    if (train_data.feature_names != model.feature_names)
        throw DataError("prune: training data features disagree with the model");

    // Evenly spaced row subsample keeps the importance pass affordable while
    // still covering the seasons.
    std::vector<std::size_t> rows;
    const std::size_t m = train_data.X.rows();
    const std::size_t want = std::min(config.prune_rows, m);
    if (want == 0) throw DataError("prune: empty training data");
    for (std::size_t i = 0; i < want; ++i) rows.push_back(i * m / want);
    const Dataset sample = subset(train_data, rows);

    const Summary mu_summary = summarize(model, sample, Head::Mu);
    const Summary scale_summary = summarize(model, sample, Head::Scale);

    const std::size_t d = model.feature_names.size();
    std::vector<double> combined(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        combined[static_cast<std::size_t>(mu_summary.importance.feature[i])] +=
            mu_summary.importance.mean_abs_phi[i];
        combined[static_cast<std::size_t>(scale_summary.importance.feature[i])] +=
            scale_summary.importance.mean_abs_phi[i];
    }
    const double total = std::accumulate(combined.begin(), combined.end(), 0.0);

    PruneResult result;
    result.feature_names = model.feature_names;
    result.share.resize(d, 0.0);
    std::vector<int> keep;
    for (std::size_t i = 0; i < d; ++i) {
        result.share[i] = total > 0.0 ? combined[i] / total : 0.0;
        if (result.share[i] >= threshold || threshold == 0.0) {
            keep.push_back(static_cast<int>(i));
            result.kept.push_back(model.feature_names[i]);
        } else {
            result.dropped.push_back(model.feature_names[i]);
        }
    }
    if (keep.empty()) throw DataError("prune: threshold would remove every feature");

    result.before = evaluate_ngb(model, test_data, config.coverage_levels, config.pit_bins);
    const Dataset train_kept = select_features(train_data, keep);
    const Dataset test_kept = select_features(test_data, keep);
    result.model = train(train_kept, model.config);
    result.after = evaluate_ngb(result.model, test_kept, config.coverage_levels,
                                config.pit_bins);
    return result;
}

void prune_report_csv(const PruneResult& result, const std::string& path,
                      const std::string& config_hash, std::uint64_t seed) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "# config_hash=" << config_hash << " seed=" << seed << "\n";
    out << "metric,level,all_features,pruned\n";
    const auto metric_row = [&](const char* name, const std::string& level, double a,
                                double b) {
        out << name << ',' << level << ',' << format_double(a) << ',' << format_double(b)
            << "\n";
    };
    if (result.before.point && result.after.point) {
        metric_row("mae", "", result.before.point->mae, result.after.point->mae);
        metric_row("rmse", "", result.before.point->rmse, result.after.point->rmse);
        metric_row("mbe", "", result.before.point->mbe, result.after.point->mbe);
    }
    for (std::size_t l = 0; l < result.before.coverage.size(); ++l) {
        const std::string pct = format_percent(result.before.coverage[l].nominal);
        metric_row("picp", pct, result.before.coverage[l].picp,
                   result.after.coverage[l].picp);
        metric_row("pinaw", pct, result.before.coverage[l].pinaw,
                   result.after.coverage[l].pinaw);
    }
    if (result.before.mean_crps && result.after.mean_crps)
        metric_row("crps", "", *result.before.mean_crps, *result.after.mean_crps);
    if (!out.good()) throw DataError("failed while writing " + path);
}

json prune_report_json(const PruneResult& result) {
    json shares = json::object();
    for (std::size_t i = 0; i < result.share.size(); ++i)
        shares[result.feature_names[i]] = result.share[i];
    return json{{"kept", result.kept},
                {"dropped", result.dropped},
                {"share", shares}};
}

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

BenchResult run_bench(const RawSeries& series, const RunConfig& config) {
    const Dataset data = build_features(series, config);
    const auto splits = sliding_splits(data, resolve_splits(config, data));

    BenchResult result;
    result.seed = config.seed;

    BenchRow ngb_row{"ngboost", {}, {}, 0.0};
    BenchRow gp_row{"gp", {}, {}, 0.0};
    BenchRow lube_row{"lube", {}, {}, 0.0};
    BenchRow pers_row{"persistence", {}, {}, 0.0};

    for (std::size_t si = 0; si < splits.size(); ++si) {
        const Dataset& train_set = splits[si].first;
        const Dataset& test_set = splits[si].second;

        {
            NgbConfig nc = config.ngb;
            nc.n_stages = config.bench.ngb_stages;
            const auto t0 = std::chrono::steady_clock::now();
            const NgbModel model = train(train_set, nc);
            ngb_row.train_seconds +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            ngb_row.per_split.push_back(
                evaluate_ngb(model, test_set, config.coverage_levels, config.pit_bins));
        }
        {
            GpSettings gs = config.gp.settings;
            gs.max_rows = config.bench.gp_max_rows;
            gs.adam_steps = config.bench.gp_adam_steps;
            const auto t0 = std::chrono::steady_clock::now();
            const GpModel model = gp_fit(train_set, config.gp.kernel, gs);
            gp_row.train_seconds +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            gp_row.per_split.push_back(
                evaluate_gp(model, test_set, config.coverage_levels, config.pit_bins));
        }
        {
            const Dataset capped = tail_rows(train_set, config.bench.lube_max_rows);
            AnnealSchedule schedule = config.lube.anneal;
            schedule.iters_per_temp = config.bench.lube_iters_per_temp;
            schedule.stop_fraction = config.bench.lube_stop_fraction;
            schedule.seed = derived_seed(config.seed, 977 + si);
            const auto t0 = std::chrono::steady_clock::now();
            const LubeNet net = lube_train(capped, config.lube.neurons,
                                           config.lube.confidence, config.lube.eta,
                                           schedule, nullptr);
            lube_row.train_seconds +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            lube_row.per_split.push_back(evaluate_lube(net, test_set, config.lube.confidence));
        }
        pers_row.per_split.push_back(evaluate_persistence(series, test_set));
    }

    for (BenchRow* row : {&ngb_row, &gp_row, &lube_row, &pers_row})
        row->mean_report = mean_reports(row->per_split);

    result.ngb_mae_below_persistence = ngb_row.mean_report.point->mae <
                                       pers_row.mean_report.point->mae;
    result.ngb_crps_below_gp =
        *ngb_row.mean_report.mean_crps < *gp_row.mean_report.mean_crps;

    result.rows.push_back(std::move(ngb_row));
    result.rows.push_back(std::move(gp_row));
    result.rows.push_back(std::move(lube_row));
    result.rows.push_back(std::move(pers_row));
    return result;
}

void bench_csv(const BenchResult& result, const std::string& path,
               const std::string& config_hash, std::uint64_t seed) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "# config_hash=" << config_hash << " seed=" << seed << "\n";
    out << "model,split,metric,level,value\n";
    const auto write_report = [&](const std::string& model, const std::string& split,
                                  const EvalReport& r) {
        const auto row = [&](const char* metric, const std::string& level, double value) {
            out << model << ',' << split << ',' << metric << ',' << level << ','
                << format_double(value) << "\n";
        };
        row("n_samples", "", static_cast<double>(r.n_samples));
        if (r.point) {
            row("mae", "", r.point->mae);
            row("rmse", "", r.point->rmse);
            row("mbe", "", r.point->mbe);
        }
        for (const CoverageRow& c : r.coverage) {
            const std::string pct = format_percent(c.nominal);
            row("picp", pct, c.picp);
            row("pinaw", pct, c.pinaw);
        }
        if (r.mean_crps) row("crps", "", *r.mean_crps);
    };
    for (const BenchRow& row : result.rows) {
        for (std::size_t si = 0; si < row.per_split.size(); ++si)
            write_report(row.model, std::to_string(si + 1), row.per_split[si]);
        write_report(row.model, "mean", row.mean_report);
    }
    if (!out.good()) throw DataError("failed while writing " + path);
}

json bench_json(const BenchResult& result, const std::string& config_hash) {
    json models = json::object();
    for (const BenchRow& row : result.rows) {
        json entry{{"n_samples", row.mean_report.n_samples}};
        if (row.mean_report.point) {
            entry["mae"] = row.mean_report.point->mae;
            entry["rmse"] = row.mean_report.point->rmse;
            entry["mbe"] = row.mean_report.point->mbe;
        }
        if (row.mean_report.mean_crps) entry["mean_crps"] = *row.mean_report.mean_crps;
        json coverage = json::array();
        for (const CoverageRow& c : row.mean_report.coverage)
            coverage.push_back(
                json{{"nominal", c.nominal}, {"picp", c.picp}, {"pinaw", c.pinaw}});
        entry["coverage"] = coverage;
        models[row.model] = entry;
    }
    return json{
        {"config_hash", config_hash},
        {"seed", result.seed},
        {"checks",
         json{{"ngboost_mae_below_persistence", result.ngb_mae_below_persistence},
              {"ngboost_crps_below_gp", result.ngb_crps_below_gp}}},
        {"models", models},
    };
}

// ---------------------------------------------------------------------------
// Explanation exports
// ---------------------------------------------------------------------------

namespace {

const char* head_label(Head head) { return head == Head::Mu ? "mu" : "scale"; }

}  // namespace

void explanation_csv(const NgbModel& model, const Dataset& data, std::size_t max_rows,
                     const std::string& path, const std::string& config_hash,
                     std::uint64_t seed) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "# config_hash=" << config_hash << " seed=" << seed << "\n";
    out << "sample_id,head,feature,feature_value,phi\n";
    const std::size_t rows = std::min(max_rows, data.X.rows());
    for (std::size_t i = 0; i < rows; ++i) {
        for (const Head head : {Head::Mu, Head::Scale}) {
            const Explanation e = shap_values(model, data.X.row(i), head);
            for (std::size_t f = 0; f < e.phi.size(); ++f)
                out << i << ',' << head_label(head) << ',' << model.feature_names[f] << ','
                    << format_double(e.x[f]) << ',' << format_double(e.phi[f]) << "\n";
        }
    }
    if (!out.good()) throw DataError("failed while writing " + path);
}

void interaction_csv(const NgbModel& model, const Dataset& data, std::size_t max_rows,
                     const std::string& path, const std::string& config_hash,
                     std::uint64_t seed) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "# config_hash=" << config_hash << " seed=" << seed << "\n";
    out << "sample_id,head,feature_a,feature_b,phi_ab\n";
    const std::size_t rows = std::min(max_rows, data.X.rows());
    for (std::size_t i = 0; i < rows; ++i) {
        for (const Head head : {Head::Mu, Head::Scale}) {
            const InteractionMatrix im = shap_interactions(model, data.X.row(i), head);
            for (std::size_t a = 0; a < im.phi.rows(); ++a)
                for (std::size_t b = 0; b < im.phi.cols(); ++b)
                    out << i << ',' << head_label(head) << ',' << model.feature_names[a]
                        << ',' << model.feature_names[b] << ','
                        << format_double(im.phi(a, b)) << "\n";
        }
    }
    if (!out.good()) throw DataError("failed while writing " + path);
}

void importance_csv(const NgbModel& model, const Dataset& data, std::size_t max_rows,
                    const std::string& path, const std::string& config_hash,
                    std::uint64_t seed) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    const Dataset capped = head_rows(data, max_rows);
    out << "# config_hash=" << config_hash << " seed=" << seed << "\n";
    out << "head,feature,mean_abs_phi\n";
    for (const Head head : {Head::Mu, Head::Scale}) {
        const Summary summary = summarize(model, capped, head);
        for (std::size_t i = 0; i < summary.importance.feature.size(); ++i)
            out << head_label(head) << ','
                << model.feature_names[static_cast<std::size_t>(
                       summary.importance.feature[i])]
                << ',' << format_double(summary.importance.mean_abs_phi[i]) << "\n";
    }
    if (!out.good()) throw DataError("failed while writing " + path);
}

Dataset head_rows(const Dataset& data, std::size_t max_rows) {
    std::vector<std::size_t> rows;
    const std::size_t n = std::min(max_rows, data.X.rows());
    for (std::size_t i = 0; i < n; ++i) rows.push_back(i);
    return subset(data, rows);
}

Dataset tail_rows(const Dataset& data, std::size_t max_rows) {
    std::vector<std::size_t> rows;
    const std::size_t n = std::min(max_rows, data.X.rows());
    for (std::size_t i = data.X.rows() - n; i < data.X.rows(); ++i) rows.push_back(i);
    return subset(data, rows);
}

}  // namespace pvcast
