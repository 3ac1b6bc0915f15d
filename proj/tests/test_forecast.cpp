#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pvcast/dataset.hpp"
#include "pvcast/errors.hpp"
#include "pvcast/forecast.hpp"
#include "pvcast/ngboost.hpp"
#include "pvcast/time.hpp"
#include "pvcast/util.hpp"

using namespace pvcast;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Ten days of 15-minute data with a bell-shaped daytime power curve and
// smoothly varying weather; nights are zero.
RawSeries make_context(int days) {
    const Minutes start = parse_timestamp("2018-06-01T00:00");
    Rng rng(5);
    RawSeries s;
    for (int d = 0; d < days; ++d) {
        for (int slot = 0; slot < 96; ++slot) {
            const Minutes t = start + d * kMinutesPerDay + slot * 15;
            const int mod = slot * 15;
            double power = 0.0;
            if (mod >= 6 * 60 && mod < 22 * 60) {
                const double h = (mod - 6 * 60) / 60.0;
                power = 50.0 * std::sin(kPi * h / 16.0) + rng.uniform(0, 1);
            }
            s.timestamps.push_back(t);
            s.power.push_back(power);
            s.temperature.push_back(15.0 + 5.0 * std::sin(2.0 * kPi * mod / 1440.0));
            s.humidity.push_back(60.0 + rng.uniform(-5, 5));
            s.precipitation.push_back(0.0);
            s.wind_speed.push_back(3.0);
            s.radiation.push_back(power * 8.0 + rng.uniform(0, 1));
        }
    }
    return s;
}

const RawSeries& context() {
    static const RawSeries s = make_context(10);
    return s;
}

// Model over the usual features plus 15-minute and 1-day power lags.
const NgbModel& model() {
    static const NgbModel m = [] {
        const Dataset ds = build_lagged(filter_night_hours(context()), {1, 96}, 55.0, true);
        NgbConfig cfg;
        cfg.n_stages = 30;
        cfg.learning_rate = 0.1;
        return train(ds, cfg);
    }();
    return m;
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/pvcast_fc_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("36 hour horizon from noon covers 144 slots with 40 night slots") {
    const Minutes origin = context().timestamps.front() + 5 * kMinutesPerDay + 12 * 60;
    const ForecastSeries fc =
        recursive_forecast(model(), context(), origin, 36 * 60, {0.8, 0.99});

    REQUIRE(fc.entries.size() == 144);
    std::size_t nights = 0;
    for (std::size_t i = 0; i < fc.entries.size(); ++i) {
        const ForecastEntry& e = fc.entries[i];
        CHECK(e.timestamp == origin + static_cast<Minutes>(i) * 15);
        CHECK(e.night == !is_day_slot(e.timestamp));
        REQUIRE(e.lower.size() == 2);
        REQUIRE(e.upper.size() == 2);
        if (e.night) {
            ++nights;
            CHECK(e.mu == 0.0);
            CHECK(e.lower[0] == 0.0);
            CHECK(e.upper[0] == 0.0);
            CHECK(e.upper[1] == 0.0);
        } else {
            for (int c = 0; c < 2; ++c) {
                CHECK(e.lower[c] >= 0.0);
                CHECK(e.lower[c] <= e.upper[c]);
            }
            // the wider nominal level produces the wider band
            CHECK(e.lower[1] <= e.lower[0]);
            CHECK(e.upper[1] >= e.upper[0]);
        }
    }
    CHECK(nights == 40);
}

TEST_CASE("one step ahead equals the direct model prediction") {
    const Dataset ds = build_lagged(filter_night_hours(context()), {1, 96}, 55.0, true);
    // pick a mid-morning row so both lags are realized history
    const Minutes target = context().timestamps.front() + 6 * kMinutesPerDay + 10 * 60;
    std::size_t row = ds.row_timestamps.size();
    for (std::size_t r = 0; r < ds.row_timestamps.size(); ++r)
        if (ds.row_timestamps[r] == target) row = r;
    REQUIRE(row < ds.row_timestamps.size());

    const ForecastSeries fc = recursive_forecast(model(), context(), target, 15, {0.9});
    REQUIRE(fc.entries.size() == 1);
    const DistParams direct = predict_dist(model(), ds.X.row(row));
    CHECK(fc.entries[0].mu == doctest::Approx(direct.mu * 55.0).epsilon(1e-14));
}

TEST_CASE("realized power at or after the origin is never read") {
    const Minutes origin = context().timestamps.front() + 5 * kMinutesPerDay + 12 * 60;
    const ForecastSeries clean =
        recursive_forecast(model(), context(), origin, 36 * 60, {0.9});

    RawSeries poisoned = context();
    for (std::size_t i = 0; i < poisoned.size(); ++i)
        if (poisoned.timestamps[i] >= origin) poisoned.power[i] = 1e9;
    const ForecastSeries same =
        recursive_forecast(model(), poisoned, origin, 36 * 60, {0.9});

    REQUIRE(same.entries.size() == clean.entries.size());
    for (std::size_t i = 0; i < clean.entries.size(); ++i) {
        CHECK(same.entries[i].mu == clean.entries[i].mu);
        CHECK(same.entries[i].lower == clean.entries[i].lower);
        CHECK(same.entries[i].upper == clean.entries[i].upper);
    }
}

TEST_CASE("later steps feed on the model's own clamped means") {
    // a model whose only lag is 15 minutes makes the recursion easy to replay
    const Dataset ds = build_lagged(filter_night_hours(context()), {1}, 1.0, false);
    NgbConfig cfg;
    cfg.n_stages = 20;
    cfg.learning_rate = 0.1;
    const NgbModel m = train(ds, cfg);

    const Minutes origin = context().timestamps.front() + 5 * kMinutesPerDay + 10 * 60;
    const ForecastSeries fc = recursive_forecast(m, context(), origin, 30, {0.9});
    REQUIRE(fc.entries.size() == 2);

    const Minutes t2 = origin + 15;
    const std::size_t row2 = static_cast<std::size_t>(
        std::lower_bound(context().timestamps.begin(), context().timestamps.end(), t2) -
        context().timestamps.begin());
    std::vector<double> x;
    for (const std::string& name : m.feature_names) {
        if (name == "temperature") x.push_back(context().temperature[row2]);
        else if (name == "humidity") x.push_back(context().humidity[row2]);
        else if (name == "precipitation") x.push_back(context().precipitation[row2]);
        else if (name == "wind_speed") x.push_back(context().wind_speed[row2]);
        else if (name == "radiation") x.push_back(context().radiation[row2]);
        else if (name == "month_sin") x.push_back(encode_month(from_minutes(t2).month).first);
        else if (name == "month_cos") x.push_back(encode_month(from_minutes(t2).month).second);
        else if (name == "hour") x.push_back(minute_of_day(t2) / 60.0);
        else if (name == "t-15") x.push_back(std::max(fc.entries[0].mu, 0.0));
        else FAIL("unexpected feature ", name);
    }
    CHECK(fc.entries[1].mu == doctest::Approx(predict_dist(m, x).mu).epsilon(1e-14));
}

TEST_CASE("bad horizons, origins, and missing context are rejected") {
    const Minutes noon = context().timestamps.front() + 5 * kMinutesPerDay + 12 * 60;
    CHECK_THROWS_AS(recursive_forecast(model(), context(), noon, 10, {0.9}), DataError);
    CHECK_THROWS_AS(recursive_forecast(model(), context(), noon, 0, {0.9}), DataError);
    CHECK_THROWS_AS(recursive_forecast(model(), context(), noon, -15, {0.9}), DataError);
    CHECK_THROWS_AS(recursive_forecast(model(), context(), noon + 7, 15, {0.9}),
                    DataError);

    // day-one morning: the 1-day lag reaches before the series starts
    const Minutes early = context().timestamps.front() + 10 * 60;
    CHECK_THROWS_AS(recursive_forecast(model(), context(), early, 15, {0.9}), DataError);

    // a horizon reaching past the end of the context has no weather rows there
    const Minutes late = context().timestamps.back() - 60;
    CHECK_THROWS_AS(recursive_forecast(model(), context(), late, 36 * 60, {0.9}),
                    DataError);

    // missing values where the forecast needs them
    RawSeries holed = context();
    const std::size_t noon_row = static_cast<std::size_t>(
        std::lower_bound(holed.timestamps.begin(), holed.timestamps.end(), noon) -
        holed.timestamps.begin());
    holed.temperature[noon_row] = NAN;
    CHECK_THROWS_AS(recursive_forecast(model(), holed, noon, 15, {0.9}), DataError);

    RawSeries lag_hole = context();
    lag_hole.power[noon_row - 1] = NAN;  // the 15-minute lag of the first step
    CHECK_THROWS_AS(recursive_forecast(model(), lag_hole, noon, 15, {0.9}), DataError);
}

TEST_CASE("realized column fills from the series without affecting the forecast") {
    // run past the end of the series (into night slots, which need no weather)
    // so part of the horizon has no realized data
    const Minutes origin = context().timestamps.back() - kMinutesPerDay + 15;
    ForecastSeries fc =
        recursive_forecast(model(), context(), origin, kMinutesPerDay + 150, {0.9});
    attach_realized(fc, context());

    std::size_t known = 0;
    for (const ForecastEntry& e : fc.entries) {
        if (e.timestamp <= context().timestamps.back()) {
            ++known;
            const std::size_t r = static_cast<std::size_t>(
                std::lower_bound(context().timestamps.begin(), context().timestamps.end(),
                                 e.timestamp) -
                context().timestamps.begin());
            CHECK(e.realized == context().power[r]);
        } else {
            CHECK(std::isnan(e.realized));
        }
    }
    CHECK(known == 96);  // the final 10 slots extend past the series
    CHECK(fc.entries.size() == 106);
}

TEST_CASE("forecast csv layout") {
    const Minutes origin = context().timestamps.front() + 5 * kMinutesPerDay + 12 * 60;
    ForecastSeries fc = recursive_forecast(model(), context(), origin, 120, {0.9, 0.9973});
    attach_realized(fc, context());

    TempFile tmp("out.csv");
    forecast_csv(fc, tmp.path, "deadbeef01234567", 42);

    std::ifstream in(tmp.path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "# config_hash=deadbeef01234567 seed=42");
    std::getline(in, line);
    CHECK(line == "timestamp,night,mu,lower_90,upper_90,lower_99.73,upper_99.73,realized");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(line.find("2018-06-06T") == 0);
        CHECK(std::count(line.begin(), line.end(), ',') == 7);
    }
    CHECK(rows == fc.entries.size());
}
