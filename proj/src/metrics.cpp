#include "pvcast/metrics.hpp"

#include <cmath>
#include <sstream>

#include "pvcast/errors.hpp"
#include "pvcast/util.hpp"

#include <json.hpp>

namespace pvcast {

PointMetrics point_metrics(std::span<const double> pred, std::span<const double> actual) {
    if (pred.size() != actual.size() || pred.empty())
        throw DataError("point_metrics: need equal nonempty prediction/actual");
    double abs_sum = 0.0, sq_sum = 0.0, bias_sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - actual[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
        bias_sum += e;
    }
    const double n = static_cast<double>(pred.size());
    return {abs_sum / n, std::sqrt(sq_sum / n), bias_sum / n};
}

IntervalMetrics interval_metrics(std::span<const double> lower,
                                 std::span<const double> upper,
                                 std::span<const double> actual, double R) {
    const std::size_t n = actual.size();
    if (lower.size() != n || upper.size() != n || n == 0)
        throw DataError("interval_metrics: inconsistent lengths");
    if (!(R > 0.0)) throw DataError("interval_metrics: target range R must be positive");
    std::size_t covered = 0;
    double width_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (upper[i] < lower[i])
            throw DataError("interval_metrics: upper bound below lower bound");
        if (actual[i] >= lower[i] && actual[i] <= upper[i]) ++covered;
        width_sum += upper[i] - lower[i];
    }
    const double nn = static_cast<double>(n);
    return {static_cast<double>(covered) / nn, width_sum / nn / R};
}

double crps_mean(std::span<const DistParams> dists, std::span<const double> actual) {
    if (dists.size() != actual.size() || dists.empty())
        throw DataError("crps_mean: inconsistent lengths");
    double total = 0.0;
    for (std::size_t i = 0; i < dists.size(); ++i) total += crps(dists[i], actual[i]);
    return total / static_cast<double>(dists.size());
}

PitHistogram pit_histogram(std::span<const DistParams> dists,
                           std::span<const double> actual, int bins) {
    if (dists.size() != actual.size() || dists.empty())
        throw DataError("pit_histogram: inconsistent lengths");
    if (bins < 2) throw DataError("pit_histogram: need at least 2 bins");
    std::vector<std::size_t> counts(bins, 0);
    for (std::size_t i = 0; i < dists.size(); ++i) {
        const double pit = cdf(dists[i], actual[i]);
        int b = static_cast<int>(pit * bins);
        if (b >= bins) b = bins - 1;  // pit == 1.0 lands in the last bin
        if (b < 0) b = 0;
        ++counts[b];
    }
    PitHistogram out;
    const double n = static_cast<double>(dists.size());
    for (int b = 0; b < bins; ++b) {
        out.bin_left.push_back(static_cast<double>(b) / bins);
        out.bin_right.push_back(static_cast<double>(b + 1) / bins);
        out.density.push_back(static_cast<double>(counts[b]) / n);
    }
    return out;
}

std::string eval_report_json(const EvalReport& report, const std::string& config_hash,
                             std::uint64_t seed) {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["n_samples"] = report.n_samples;
    if (report.point) {
        j["point"] = {{"mae", report.point->mae},
                      {"rmse", report.point->rmse},
                      {"mbe", report.point->mbe}};
    }
    if (!report.coverage.empty()) {
        nlohmann::json rows = nlohmann::json::array();
        for (const CoverageRow& row : report.coverage) {
            rows.push_back({{"nominal", row.nominal},
                            {"picp", row.picp},
                            {"pinaw", row.pinaw}});
        }
        j["coverage"] = rows;
    }
    if (report.mean_crps) j["mean_crps"] = *report.mean_crps;
    if (report.pit) {
        nlohmann::json pit;
        pit["bin_left"] = report.pit->bin_left;
        pit["bin_right"] = report.pit->bin_right;
        pit["density"] = report.pit->density;
        j["pit"] = pit;
    }
    return j.dump(2) + "\n";
}

std::string eval_report_csv(const EvalReport& report, const std::string& config_hash,
                            std::uint64_t seed) {
    std::ostringstream out;
    out << "# config_hash=" << config_hash << " seed=" << seed << "\n";
    out << "metric,level,value\n";
    out << "n_samples,," << report.n_samples << "\n";
    if (report.point) {
        out << "mae,," << format_double(report.point->mae) << "\n";
        out << "rmse,," << format_double(report.point->rmse) << "\n";
        out << "mbe,," << format_double(report.point->mbe) << "\n";
    }
    for (const CoverageRow& row : report.coverage) {
        out << "picp," << format_double(row.nominal) << "," << format_double(row.picp)
            << "\n";
        out << "pinaw," << format_double(row.nominal) << "," << format_double(row.pinaw)
            << "\n";
    }
    if (report.mean_crps) out << "crps,," << format_double(*report.mean_crps) << "\n";
    return out.str();
}

std::string pit_csv(const PitHistogram& pit, const std::string& config_hash,
                    std::uint64_t seed) {
    std::ostringstream out;
    out << "# config_hash=" << config_hash << " seed=" << seed << "\n";
    out << "bin_left,bin_right,density\n";
    for (std::size_t b = 0; b < pit.density.size(); ++b) {
        out << format_double(pit.bin_left[b]) << "," << format_double(pit.bin_right[b])
            << "," << format_double(pit.density[b]) << "\n";
    }
    return out.str();
}

}  // namespace pvcast
