#include "pvcast/forecast.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "pvcast/errors.hpp"
#include "pvcast/util.hpp"

namespace pvcast {

namespace {

// How to fill one model input from the forecasting state. Weather indices
// refer to RawSeries columns; lag_minutes > 0 marks a lagged-power feature.
struct FeaturePlan {
    enum class Kind { Weather, MonthSin, MonthCos, Hour, Lag } kind;
    int weather_column = -1;
    Minutes lag_minutes = 0;
};

const std::vector<double>& weather_column(const RawSeries& s, int column) {
    switch (column) {
        case 0: return s.temperature;
        case 1: return s.humidity;
        case 2: return s.precipitation;
        case 3: return s.wind_speed;
        default: return s.radiation;
    }
}

FeaturePlan plan_feature(const std::string& name) {
    static const std::pair<const char*, int> kWeather[] = {
        {"temperature", 0}, {"humidity", 1}, {"precipitation", 2},
        {"wind_speed", 3},  {"radiation", 4},
    };
    for (const auto& [label, column] : kWeather)
        if (name == label) return {FeaturePlan::Kind::Weather, column, 0};
    if (name == "month_sin") return {FeaturePlan::Kind::MonthSin, -1, 0};
    if (name == "month_cos") return {FeaturePlan::Kind::MonthCos, -1, 0};
    if (name == "hour") return {FeaturePlan::Kind::Hour, -1, 0};
    if (name.size() > 2 && name[0] == 't' && name[1] == '-') {
        Minutes lag = 0;
        const char* first = name.data() + 2;
        const char* last = name.data() + name.size();
        const auto [ptr, ec] = std::from_chars(first, last, lag);
        if (ec == std::errc{} && ptr == last && lag > 0 && lag % kSlotMinutes == 0)
            return {FeaturePlan::Kind::Lag, -1, lag};
    }
    throw DataError("forecast: model uses feature \"" + name +
                    "\" which cannot be assembled from the context series");
}

// Index of the context row with exactly this timestamp, or -1.
std::ptrdiff_t find_row(const RawSeries& s, Minutes t) {
    const auto it = std::lower_bound(s.timestamps.begin(), s.timestamps.end(), t);
    if (it == s.timestamps.end() || *it != t) return -1;
    return it - s.timestamps.begin();
}

}  // namespace

ForecastSeries recursive_forecast(const NgbModel& model, const RawSeries& context,
                                  Minutes origin, Minutes horizon,
                                  const std::vector<double>& coverage_levels) {
    if (horizon <= 0 || horizon % kSlotMinutes != 0)
        throw DataError("forecast: horizon must be a positive multiple of 15 minutes");
    if (origin % kSlotMinutes != 0)
        throw DataError("forecast: origin must lie on the 15-minute grid");

    std::vector<FeaturePlan> plans;
    plans.reserve(model.feature_names.size());
    for (const auto& name : model.feature_names) plans.push_back(plan_feature(name));

    std::vector<double> ks;
    ks.reserve(coverage_levels.size());
    for (const double level : coverage_levels) ks.push_back(k_from_coverage(level));

    // Lagged power in model units (per-unit when the model was trained scaled).
    // Values at or after the origin come only from this map, never the context.
    std::unordered_map<Minutes, double> predicted;
    const double unit = model.scaled ? model.nominal_power : 1.0;
    const auto lag_value = [&](Minutes t) -> double {
        if (t >= origin) {
            const auto it = predicted.find(t);
            if (it == predicted.end())
                throw DataError("forecast: internal lag bookkeeping gap at " +
                                format_timestamp(t));
            return it->second;
        }
        const std::ptrdiff_t row = find_row(context, t);
        if (row < 0)
            throw DataError("forecast: context has no power value at " +
                            format_timestamp(t) + " needed for a lag feature");
        const double p = context.power[static_cast<std::size_t>(row)];
        if (std::isnan(p))
            throw DataError("forecast: context power at " + format_timestamp(t) +
                            " is missing");
        return p / unit;
    };

    ForecastSeries out;
    out.coverage_levels = coverage_levels;
    std::vector<double> x(model.feature_names.size());

    for (Minutes t = origin; t < origin + horizon; t += kSlotMinutes) {
        ForecastEntry entry;
        entry.timestamp = t;
        if (!is_day_slot(t)) {
            entry.night = true;
            entry.lower.assign(coverage_levels.size(), 0.0);
            entry.upper.assign(coverage_levels.size(), 0.0);
            predicted[t] = 0.0;
            out.entries.push_back(std::move(entry));
            continue;
        }

        std::ptrdiff_t row = -1;
        for (std::size_t f = 0; f < plans.size(); ++f) {
            const FeaturePlan& plan = plans[f];
            switch (plan.kind) {
                case FeaturePlan::Kind::Weather: {
                    if (row < 0) {
                        row = find_row(context, t);
                        if (row < 0)
                            throw DataError("forecast: no weather row at " +
                                            format_timestamp(t));
                    }
                    const double v =
                        weather_column(context, plan.weather_column)[static_cast<std::size_t>(row)];
                    if (std::isnan(v))
                        throw DataError("forecast: missing weather value at " +
                                        format_timestamp(t));
                    x[f] = v;
                    break;
                }
                case FeaturePlan::Kind::MonthSin:
                    x[f] = encode_month(from_minutes(t).month).first;
                    break;
                case FeaturePlan::Kind::MonthCos:
                    x[f] = encode_month(from_minutes(t).month).second;
                    break;
                case FeaturePlan::Kind::Hour:
                    x[f] = minute_of_day(t) / 60.0;
                    break;
                case FeaturePlan::Kind::Lag:
                    x[f] = lag_value(t - plan.lag_minutes);
                    break;
            }
        }

        const DistParams dist = predict_dist(model, x);
        predicted[t] = std::max(dist.mu, 0.0);
        entry.mu = dist.mu * unit;
        for (const double k : ks) {
            const auto [lo, hi] = interval(dist, k);
            // clamp both ends at 0 so the band stays ordered
            entry.lower.push_back(std::max(lo * unit, 0.0));
            entry.upper.push_back(std::max(hi * unit, 0.0));
        }
        out.entries.push_back(std::move(entry));
    }
    return out;
}

void attach_realized(ForecastSeries& forecast, const RawSeries& series) {
    for (auto& entry : forecast.entries) {
        const std::ptrdiff_t row = find_row(series, entry.timestamp);
        if (row >= 0) entry.realized = series.power[static_cast<std::size_t>(row)];
    }
}

void forecast_csv(const ForecastSeries& forecast, const std::string& path,
                  const std::string& config_hash, std::uint64_t seed) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "# config_hash=" << config_hash << " seed=" << seed << "\n";
    out << "timestamp,night,mu";
    for (const double level : forecast.coverage_levels) {
        const std::string pct = format_percent(level);
        out << ",lower_" << pct << ",upper_" << pct;
    }
    out << ",realized\n";
    for (const auto& entry : forecast.entries) {
        out << format_timestamp(entry.timestamp) << ',' << (entry.night ? 1 : 0) << ','
            << format_double(entry.mu);
        for (std::size_t i = 0; i < forecast.coverage_levels.size(); ++i)
            out << ',' << format_double(entry.lower[i]) << ','
                << format_double(entry.upper[i]);
        out << ',';
        if (!std::isnan(entry.realized)) out << format_double(entry.realized);
        out << '\n';
    }
    if (!out.good()) throw DataError("failed while writing " + path);
}

}  // namespace pvcast
