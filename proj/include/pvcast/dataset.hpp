#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pvcast/matrix.hpp"
#include "pvcast/time.hpp"

namespace pvcast {

/// Raw 15-minute site data as read from CSV: strictly increasing timestamps,
/// nonnegative power, five weather columns. Missing cells are NaN and get
/// dropped during feature construction.
struct RawSeries {
    std::vector<Minutes> timestamps;
    std::vector<double> power;
    std::vector<double> temperature;
    std::vector<double> humidity;
    std::vector<double> precipitation;
    std::vector<double> wind_speed;
    std::vector<double> radiation;

    std::size_t size() const { return timestamps.size(); }
};

/// Model-ready feature matrix. When scaled, y and the lagged-power columns are
/// in per-unit (divided by nominal_power).
struct Dataset {
    Matrix X;
    std::vector<double> y;
    std::vector<std::string> feature_names;
    std::vector<Minutes> row_timestamps;
    double nominal_power = 1.0;
    bool scaled = false;
};

/// Timestamp intervals are half-open: [begin, end).
struct SplitSpec {
    Minutes train_begin = 0;
    Minutes train_end = 0;
    Minutes test_begin = 0;
    Minutes test_end = 0;
};

RawSeries read_raw_csv(const std::string& path);
void write_raw_csv(const RawSeries& series, const std::string& path,
                   const std::string& preamble = "");

/// Month (1..12) onto the unit circle: (sin(2*pi*m/12), cos(2*pi*m/12)).
std::pair<double, double> encode_month(int month);

/// Keeps rows whose time of day lies in [06:00, 22:00).
RawSeries filter_night_hours(const RawSeries& series);

/// Assembles the feature matrix: weather columns, month_sin/month_cos,
/// fractional hour of day, and lagged power columns named "t-<minutes>"
/// (15*steps). Rows with any missing cell or with a lag timestamp absent from
/// the series are dropped. Target = current power. With scale=true, power
/// units are divided by nominal_power (target headroom up to 1.05).
Dataset build_lagged(const RawSeries& series, const std::vector<int>& lag_steps,
                     double nominal_power, bool scale);

/// Pearson correlations over features + target (target is the last row/col).
/// Constant columns get correlation 0 everywhere off the unit diagonal; their
/// indices are reported through constant_cols when non-null.
Matrix pearson_matrix(const Dataset& data, std::vector<int>* constant_cols = nullptr);

std::vector<std::pair<Dataset, Dataset>> sliding_splits(const Dataset& data,
                                                        const std::vector<SplitSpec>& specs);

/// Column subset (used by the pruning workflow); keeps y and metadata.
Dataset select_features(const Dataset& data, const std::vector<int>& keep);

/// True when the time of day is inside the modeled window [06:00, 22:00).
bool is_day_slot(Minutes t);

}  // namespace pvcast
