#include "pvcast/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "pvcast/errors.hpp"
#include "pvcast/util.hpp"

namespace pvcast {

namespace {

constexpr int kDayStartMinute = 6 * 60;    // 06:00 kept
constexpr int kNightStartMinute = 22 * 60; // 22:00 dropped
constexpr double kScaledHeadroom = 1.05;   // over-nominal output tolerance

const char* kCsvHeader =
    "timestamp,power,temperature,humidity,precipitation,wind_speed,radiation";

double parse_cell(const std::string& cell, const std::string& line) {
    if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last)
        throw DataError("bad numeric cell '" + cell + "' in row: " + line);
    return value;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

}  // namespace

bool is_day_slot(Minutes t) {
    const int mod = minute_of_day(t);
    return mod >= kDayStartMinute && mod < kNightStartMinute;
}

RawSeries read_raw_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file: " + path);

    std::string line;
    // Skip metadata comment lines emitted by our own writers.
    do {
        if (!std::getline(in, line)) throw DataError("empty data file: " + path);
        if (!line.empty() && line.back() == '\r') line.pop_back();
    } while (!line.empty() && line[0] == '#');
    if (line != kCsvHeader)
        throw DataError("unexpected CSV header in " + path + ": '" + line + "'");

    RawSeries series;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != 7)
            throw DataError("expected 7 columns, got " +
                            std::to_string(cells.size()) + " in row: " + line);
        const Minutes t = parse_timestamp(cells[0]);
        if (!series.timestamps.empty() && t <= series.timestamps.back())
            throw DataError("timestamps not strictly increasing at " + cells[0]);
        const double power = parse_cell(cells[1], line);
        if (!std::isnan(power) && power < 0.0)
            throw DataError("negative power at " + cells[0]);
        series.timestamps.push_back(t);
        series.power.push_back(power);
        series.temperature.push_back(parse_cell(cells[2], line));
        series.humidity.push_back(parse_cell(cells[3], line));
        series.precipitation.push_back(parse_cell(cells[4], line));
        series.wind_speed.push_back(parse_cell(cells[5], line));
        series.radiation.push_back(parse_cell(cells[6], line));
    }
    if (series.timestamps.empty()) throw DataError("no data rows in " + path);
    return series;
}

void write_raw_csv(const RawSeries& series, const std::string& path,
                   const std::string& preamble) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write data file: " + path);
    if (!preamble.empty()) out << preamble;
    out << kCsvHeader << "\n";
    const auto cell = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << format_timestamp(series.timestamps[i]) << "," << cell(series.power[i])
            << "," << cell(series.temperature[i]) << "," << cell(series.humidity[i])
            << "," << cell(series.precipitation[i]) << "," << cell(series.wind_speed[i])
            << "," << cell(series.radiation[i]) << "\n";
    }
}

std::pair<double, double> encode_month(int month) {
    if (month < 1 || month > 12) throw DataError("encode_month: month out of range");
    const double angle = 2.0 * 3.14159265358979323846 * month / 12.0;
    return {std::sin(angle), std::cos(angle)};
}

RawSeries filter_night_hours(const RawSeries& series) {
    RawSeries out;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!is_day_slot(series.timestamps[i])) continue;
        out.timestamps.push_back(series.timestamps[i]);
        out.power.push_back(series.power[i]);
        out.temperature.push_back(series.temperature[i]);
        out.humidity.push_back(series.humidity[i]);
        out.precipitation.push_back(series.precipitation[i]);
        out.wind_speed.push_back(series.wind_speed[i]);
        out.radiation.push_back(series.radiation[i]);
    }
    return out;
}

Dataset build_lagged(const RawSeries& series, const std::vector<int>& lag_steps,
                     double nominal_power, bool scale) {
    if (lag_steps.empty()) throw DataError("build_lagged: need at least one lag");
    for (int s : lag_steps)
        if (s < 1) throw DataError("build_lagged: lag steps must be positive");
    if (!(nominal_power > 0.0)) throw DataError("build_lagged: nominal power must be positive");

    std::vector<std::string> names = {"temperature", "humidity",   "precipitation",
                                      "wind_speed",  "radiation",  "month_sin",
                                      "month_cos",   "hour"};
    for (int s : lag_steps) names.push_back("t-" + std::to_string(15 * s));
    const std::size_t d = names.size();

    const auto find_row = [&series](Minutes t) -> int {
        const auto it = std::lower_bound(series.timestamps.begin(),
                                         series.timestamps.end(), t);
        if (it == series.timestamps.end() || *it != t) return -1;
        return static_cast<int>(it - series.timestamps.begin());
    };
    const auto power_unit = [&](double p, const char* what, std::size_t row) {
        if (scale) {
            const double pu = p / nominal_power;
            if (pu > kScaledHeadroom)
                throw DataError(std::string("build_lagged: ") + what + " at row " +
                                std::to_string(row) + " exceeds nominal power headroom");
            return pu;
        }
        return p;
    };

    std::vector<double> flat;
    std::vector<double> y;
    std::vector<Minutes> row_ts;
    std::vector<double> row(d);
    for (std::size_t i = 0; i < series.size(); ++i) {
        row[0] = series.temperature[i];
        row[1] = series.humidity[i];
        row[2] = series.precipitation[i];
        row[3] = series.wind_speed[i];
        row[4] = series.radiation[i];
        const CivilTime ct = from_minutes(series.timestamps[i]);
        const auto [ms, mc] = encode_month(ct.month);
        row[5] = ms;
        row[6] = mc;
        row[7] = minute_of_day(series.timestamps[i]) / 60.0;
        bool ok = !std::isnan(series.power[i]);
        for (std::size_t l = 0; ok && l < lag_steps.size(); ++l) {
            const int src = find_row(series.timestamps[i] - 15 * lag_steps[l]);
            if (src < 0 || std::isnan(series.power[src])) {
                ok = false;
                break;
            }
            row[8 + l] = power_unit(series.power[src], "lag power", i);
        }
        for (std::size_t f = 0; ok && f < 5; ++f)
            if (std::isnan(row[f])) ok = false;
        if (!ok) continue;
        flat.insert(flat.end(), row.begin(), row.end());
        y.push_back(power_unit(series.power[i], "target power", i));
        row_ts.push_back(series.timestamps[i]);
    }
    if (y.empty()) throw DataError("build_lagged: no usable rows after lag construction");

    Dataset data;
    data.X = Matrix(y.size(), d);
    std::copy(flat.begin(), flat.end(), &data.X(0, 0));
    data.y = std::move(y);
    data.feature_names = std::move(names);
    data.row_timestamps = std::move(row_ts);
    data.nominal_power = nominal_power;
    data.scaled = scale;
    return data;
}

Matrix pearson_matrix(const Dataset& data, std::vector<int>* constant_cols) {
    const std::size_t m = data.y.size();
    if (m < 2) throw DataError("pearson_matrix: need at least 2 rows");
    const std::size_t d = data.X.cols();
    const std::size_t total = d + 1;  // features plus target

    std::vector<std::vector<double>> cols(total, std::vector<double>(m));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t f = 0; f < d; ++f) cols[f][i] = data.X(i, f);
    cols[d].assign(data.y.begin(), data.y.end());

    if (constant_cols) {
        constant_cols->clear();
        for (std::size_t c = 0; c < total; ++c) {
            const auto [lo, hi] = std::minmax_element(cols[c].begin(), cols[c].end());
            if (*lo == *hi) constant_cols->push_back(static_cast<int>(c));
        }
    }

    Matrix corr(total, total, 0.0);
    for (std::size_t a = 0; a < total; ++a) {
        corr(a, a) = 1.0;
        for (std::size_t b = a + 1; b < total; ++b) {
            const double r = pearson(cols[a], cols[b]);
            corr(a, b) = r;
            corr(b, a) = r;
        }
    }
    return corr;
}

namespace {

Dataset subset_rows(const Dataset& data, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.X = Matrix(rows.size(), data.X.cols());
    out.feature_names = data.feature_names;
    out.nominal_power = data.nominal_power;
    out.scaled = data.scaled;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        for (std::size_t f = 0; f < data.X.cols(); ++f)
            out.X(k, f) = data.X(rows[k], f);
        out.y.push_back(data.y[rows[k]]);
        out.row_timestamps.push_back(data.row_timestamps[rows[k]]);
    }
    return out;
}

}  // namespace

std::vector<std::pair<Dataset, Dataset>> sliding_splits(
    const Dataset& data, const std::vector<SplitSpec>& specs) {
    std::vector<std::pair<Dataset, Dataset>> out;
    for (const SplitSpec& spec : specs) {
        if (!(spec.train_begin < spec.train_end && spec.test_begin < spec.test_end))
            throw DataError("sliding_splits: empty timestamp range");
        if (spec.train_end > spec.test_begin)
            throw DataError("sliding_splits: train range must end before test range");
        std::vector<std::size_t> train_rows, test_rows;
        for (std::size_t i = 0; i < data.row_timestamps.size(); ++i) {
            const Minutes t = data.row_timestamps[i];
            if (t >= spec.train_begin && t < spec.train_end) train_rows.push_back(i);
            else if (t >= spec.test_begin && t < spec.test_end) test_rows.push_back(i);
        }
        if (train_rows.empty() || test_rows.empty())
            throw DataError("sliding_splits: empty train or test selection");
        out.emplace_back(subset_rows(data, train_rows), subset_rows(data, test_rows));
    }
    return out;
}

Dataset select_features(const Dataset& data, const std::vector<int>& keep) {
    if (keep.empty()) throw DataError("select_features: cannot drop every feature");
    Dataset out;
    out.X = Matrix(data.X.rows(), keep.size());
    for (int f : keep) {
        if (f < 0 || f >= static_cast<int>(data.X.cols()))
            throw DataError("select_features: index out of range");
        out.feature_names.push_back(data.feature_names[f]);
    }
    for (std::size_t i = 0; i < data.X.rows(); ++i)
        for (std::size_t k = 0; k < keep.size(); ++k)
            out.X(i, k) = data.X(i, keep[k]);
    out.y = data.y;
    out.row_timestamps = data.row_timestamps;
    out.nominal_power = data.nominal_power;
    out.scaled = data.scaled;
    return out;
}

}  // namespace pvcast
