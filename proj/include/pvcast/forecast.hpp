#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pvcast/dataset.hpp"
#include "pvcast/ngboost.hpp"

namespace pvcast {

struct ForecastEntry {
    Minutes timestamp = 0;
    bool night = false;
    double mu = 0.0;  // power units
    std::vector<double> lower;  // per coverage level, clamped at 0
    std::vector<double> upper;
    double realized = std::numeric_limits<double>::quiet_NaN();
};

struct ForecastSeries {
    std::vector<double> coverage_levels;  // fractions in (0, 1)
    std::vector<ForecastEntry> entries;
};

/// Rolls the model forward from `origin` in 15-minute steps over `horizon`
/// minutes. Weather features come from the context rows at each step (these
/// carry the weather forecast); lag features before the origin come from
/// realized context power, from the origin onward from the model's own
/// predicted means (clamped at zero). Slots outside [06:00, 22:00) emit zero
/// with degenerate intervals. Realized power at or after the origin is never
/// read.
ForecastSeries recursive_forecast(const NgbModel& model, const RawSeries& context,
                                  Minutes origin, Minutes horizon,
                                  const std::vector<double>& coverage_levels);

/// Fills the realized column from the series where timestamps match (scoring
/// aid; the forecast itself never looks at these values).
void attach_realized(ForecastSeries& forecast, const RawSeries& series);

void forecast_csv(const ForecastSeries& forecast, const std::string& path,
                  const std::string& config_hash, std::uint64_t seed);

}  // namespace pvcast
