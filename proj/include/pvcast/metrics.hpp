#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pvcast/dists.hpp"

namespace pvcast {

struct PointMetrics {
    double mae = 0.0;
    double rmse = 0.0;
    double mbe = 0.0;
};

struct IntervalMetrics {
    double picp = 0.0;
    double pinaw = 0.0;
};

struct PitHistogram {
    std::vector<double> bin_left;
    std::vector<double> bin_right;
    std::vector<double> density;  // sums to 1 over the bins
};

/// Per-coverage-level interval diagnostics inside an EvalReport.
struct CoverageRow {
    double nominal = 0.0;  // requested coverage in (0,1)
    double picp = 0.0;
    double pinaw = 0.0;
};

/// Evaluation summary. Sections are optional so interval-only models (no
/// point forecast) and point-only models (no distribution) fit the same shape.
struct EvalReport {
    std::size_t n_samples = 0;
    std::optional<PointMetrics> point;
    std::vector<CoverageRow> coverage;
    std::optional<double> mean_crps;
    std::optional<PitHistogram> pit;
};

PointMetrics point_metrics(std::span<const double> pred, std::span<const double> actual);

/// picp counts actual inside the closed interval [lower, upper]; pinaw is the
/// mean width over the target range R.
IntervalMetrics interval_metrics(std::span<const double> lower,
                                 std::span<const double> upper,
                                 std::span<const double> actual, double R);

double crps_mean(std::span<const DistParams> dists, std::span<const double> actual);

PitHistogram pit_histogram(std::span<const DistParams> dists,
                           std::span<const double> actual, int bins);

std::string eval_report_json(const EvalReport& report, const std::string& config_hash,
                             std::uint64_t seed);
std::string eval_report_csv(const EvalReport& report, const std::string& config_hash,
                            std::uint64_t seed);
std::string pit_csv(const PitHistogram& pit, const std::string& config_hash,
                    std::uint64_t seed);

}  // namespace pvcast
