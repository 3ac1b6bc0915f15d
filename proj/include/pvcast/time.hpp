#pragma once

#include <cstdint>
#include <string>

namespace pvcast {

/// Calendar timestamps are carried around as minutes since the Unix epoch.
/// That keeps arithmetic on 15-minute grids exact and sidesteps time zones
/// entirely (all data is assumed to be in plant-local standard time).
using Minutes = std::int64_t;

inline constexpr Minutes kMinutesPerDay = 1440;
inline constexpr Minutes kSlotMinutes = 15;

struct CivilTime {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31
    int hour = 0;   // 0..23
    int minute = 0; // 0..59
};

/// Days since 1970-01-01 for a proleptic Gregorian civil date.
std::int64_t days_from_civil(int y, int m, int d);

/// Inverse of days_from_civil.
void civil_from_days(std::int64_t z, int& y, int& m, int& d);

Minutes to_minutes(const CivilTime& ct);
CivilTime from_minutes(Minutes t);

/// Parses "YYYY-MM-DDTHH:MM" strictly (fixed width, single 'T' separator).
/// Throws DataError on any malformed or out-of-range field.
Minutes parse_timestamp(const std::string& s);

/// Formats minutes-since-epoch back to "YYYY-MM-DDTHH:MM".
std::string format_timestamp(Minutes t);

/// Minute within the day, 0..1439.
int minute_of_day(Minutes t);

/// Day of year, 1..366.
int day_of_year(Minutes t);

}  // namespace pvcast
