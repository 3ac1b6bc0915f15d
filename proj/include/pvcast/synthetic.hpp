#pragma once

#include <cstdint>

#include "pvcast/dataset.hpp"
#include "pvcast/time.hpp"

namespace pvcast {

/// Synthetic PV plant: a seasonal clear-sky bell modulated by an
/// autoregressive cloud process, with co-generated weather columns (radiation
/// tracks the same irradiance, humidity moves against it). Deterministic per
/// seed; night output is exactly zero.
struct SyntheticSpec {
    int days = 365;
    Minutes start = to_minutes({2018, 1, 1, 0, 0});
    double nominal_power = 10.0;  // MW

    // Clear-sky shape.
    double sharpness = 2.0;       // bell exponent
    double min_daylength = 8.0;   // hours at winter solstice
    double max_daylength = 16.0;  // hours at summer solstice

    // Cloud process (AR(1) per slot with a per-day mean shift).
    bool clouds = true;
    double cloud_mean = 0.75;
    double cloud_phi = 0.96;
    double cloud_sd = 0.08;
    double day_shift_sd = 0.18;

    // Observation noise.
    double obs_noise = 0.02;       // relative, on power
    double radiation_noise = 6.0;  // absolute W/m^2, on radiation

    std::uint64_t seed = 1;
};

RawSeries generate_synthetic(const SyntheticSpec& spec);

}  // namespace pvcast
