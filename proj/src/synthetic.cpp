#include "pvcast/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "pvcast/errors.hpp"
#include "pvcast/util.hpp"

namespace pvcast {

RawSeries generate_synthetic(const SyntheticSpec& spec) {
    if (spec.days < 1) throw DataError("generate_synthetic: days must be positive");
    if (!(spec.nominal_power > 0.0))
        throw DataError("generate_synthetic: nominal power must be positive");

    constexpr double kPi = 3.14159265358979323846;
    Rng rng(spec.seed);
    RawSeries out;
    const std::size_t slots = static_cast<std::size_t>(spec.days) * 96;
    out.timestamps.reserve(slots);

    double cloud_state = spec.cloud_mean;
    double day_cloud_mean = spec.cloud_mean;

    for (std::size_t k = 0; k < slots; ++k) {
        const Minutes t = spec.start + static_cast<Minutes>(k) * 15;
        if (k % 96 == 0) {
            // A fresh mean per day creates distinct sunny and overcast days.
            day_cloud_mean =
                std::clamp(spec.cloud_mean + spec.day_shift_sd * rng.normal(), 0.2, 1.0);
        }
        // Fixed draw count per slot keeps the stream aligned regardless of
        // which values a slot ends up using.
        const double eps_cloud = rng.normal();
        const double eps_power = rng.normal();
        const double eps_rad = rng.normal();
        const double eps_temp = rng.normal();
        const double eps_hum = rng.normal();
        const double eps_wind = rng.normal();
        const double u_rain = rng.uniform();
        const double eps_rain = rng.normal();

        const int doy = day_of_year(t);
        const double half_span = 0.5 * (spec.max_daylength - spec.min_daylength);
        const double mid = 0.5 * (spec.max_daylength + spec.min_daylength);
        const double daylength =
            mid + half_span * std::cos(2.0 * kPi * (doy - 172) / 365.25);
        const double seasonal =
            std::clamp((daylength - spec.min_daylength) /
                           std::max(spec.max_daylength - spec.min_daylength, 1e-9),
                       0.0, 1.0);
        const double sunrise = 12.0 - 0.5 * daylength;
        const double sunset = 12.0 + 0.5 * daylength;
        const double hour = minute_of_day(t) / 60.0;

        double bell = 0.0;
        if (hour > sunrise && hour < sunset)
            bell = std::pow(std::sin(kPi * (hour - sunrise) / daylength), spec.sharpness);

        cloud_state = day_cloud_mean + spec.cloud_phi * (cloud_state - day_cloud_mean) +
                      spec.cloud_sd * eps_cloud;
        const double cloud_factor = spec.clouds ? std::clamp(cloud_state, 0.0, 1.0) : 1.0;

        const double amp = 0.55 + 0.45 * seasonal;
        const double irr = amp * bell * cloud_factor;

        const double power = std::clamp(
            spec.nominal_power * irr * (1.0 + spec.obs_noise * eps_power), 0.0,
            spec.nominal_power);
        const double radiation =
            std::max(0.0, 1000.0 * irr + spec.radiation_noise * eps_rad);
        const double temperature = 6.0 + 16.0 * seasonal + 5.0 * amp * bell + 1.5 * eps_temp;
        const double humidity = std::clamp(88.0 - 50.0 * irr + 6.0 * eps_hum, 5.0, 100.0);
        const double rain_level = std::max(0.0, 0.5 - cloud_factor);
        const double precipitation =
            (spec.clouds && u_rain < 0.4) ? rain_level * 4.0 * std::abs(eps_rain) : 0.0;
        const double wind = std::max(0.0, 3.2 + 1.2 * eps_wind + seasonal);

        out.timestamps.push_back(t);
        out.power.push_back(power);
        out.temperature.push_back(temperature);
        out.humidity.push_back(humidity);
        out.precipitation.push_back(precipitation);
        out.wind_speed.push_back(wind);
        out.radiation.push_back(radiation);
    }
    return out;
}

}  // namespace pvcast
